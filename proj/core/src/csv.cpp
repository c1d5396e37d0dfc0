#include "resadapt/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

#include "resadapt/error.hpp"

namespace resadapt::csv {
namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split(const std::string& line, const std::string& source,
                               std::size_t lineno) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
      was_quoted = true;
    } else if (c == ',') {
      out.push_back(was_quoted ? cur : trim(cur));
      cur.clear();
      was_quoted = false;
    } else {
      cur.push_back(c);
    }
  }
  if (quoted) throw RowError(source, lineno, "unterminated quoted field");
  out.push_back(was_quoted ? cur : trim(cur));
  return out;
}

}  // namespace

std::optional<std::size_t> Table::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  return std::nullopt;
}

void Table::require_columns(const std::vector<std::string>& names) const {
  std::string missing;
  for (const auto& n : names) {
    if (!column(n)) missing += (missing.empty() ? "" : ", ") + n;
  }
  if (!missing.empty()) throw RowError(source, 1, "missing column(s): " + missing);
}

Table parse(std::istream& in, std::string source) {
  Table t;
  t.source = std::move(source);
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    if (!have_header) {
      if (line[0] == '#') {
        t.comments.push_back(line.substr(1));
        continue;
      }
      t.header = split(line, t.source, lineno);
      have_header = true;
      continue;
    }
    auto fields = split(line, t.source, lineno);
    if (fields.size() != t.header.size()) {
      throw RowError(t.source, lineno,
                     "expected " + std::to_string(t.header.size()) + " fields, got " +
                         std::to_string(fields.size()));
    }
    t.rows.push_back({lineno, std::move(fields)});
  }
  return t;
}

Table read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  return parse(in, path);
}

std::string escape(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void write_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    out << escape(fields[i]);
  }
  out << '\n';
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(const Table& t, const Table::Row& row, std::string_view value,
                    std::string_view what) {
  double out = 0.0;
  const auto* end = value.data() + value.size();
  const auto res = std::from_chars(value.data(), end, out);
  if (value.empty() || res.ec != std::errc{} || res.ptr != end || !std::isfinite(out)) {
    throw RowError(t.source, row.line,
                   "bad " + std::string(what) + " '" + std::string(value) + "'");
  }
  return out;
}

long long parse_int(const Table& t, const Table::Row& row, std::string_view value,
                    std::string_view what) {
  long long out = 0;
  const auto* end = value.data() + value.size();
  const auto res = std::from_chars(value.data(), end, out);
  if (value.empty() || res.ec != std::errc{} || res.ptr != end) {
    throw RowError(t.source, row.line,
                   "bad " + std::string(what) + " '" + std::string(value) + "'");
  }
  return out;
}

}  // namespace resadapt::csv
