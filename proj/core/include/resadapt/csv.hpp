#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace resadapt::csv {

/// A parsed CSV file. Rows keep their 1-based line numbers (header = 1) so
/// validation errors can point back into the file.
struct Table {
  std::string source;  // file name, for diagnostics
  std::vector<std::string> header;
  struct Row {
    std::size_t line = 0;
    std::vector<std::string> fields;
  };
  std::vector<Row> rows;
  /// Lines starting with '#' before the header, without the '#'.
  std::vector<std::string> comments;

  std::optional<std::size_t> column(std::string_view name) const;
  /// Throws RowError naming the missing columns.
  void require_columns(const std::vector<std::string>& names) const;
};

/// RFC-4180 style: comma separated, optional double quotes, "" escapes.
/// Leading '#' comment lines are collected; blank lines are skipped.
Table parse(std::istream& in, std::string source);
Table read_file(const std::string& path);

std::string escape(std::string_view field);
void write_row(std::ostream& out, const std::vector<std::string>& fields);

/// Shortest text that reads back as the same double.
std::string format_double(double v);

double parse_double(const Table& t, const Table::Row& row, std::string_view value,
                    std::string_view what);
long long parse_int(const Table& t, const Table::Row& row, std::string_view value,
                    std::string_view what);

}  // namespace resadapt::csv
