#include "resadapt/design.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "linalg.hpp"
#include "resadapt/error.hpp"

namespace resadapt::stats {
namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

constexpr std::string_view kIntercept = "(Intercept)";

struct Factor {
  std::string name;
  std::vector<double> values;
};

}  // namespace

void VariableTable::add_numeric(std::string name, std::vector<double> values) {
  if (values.size() != rows_) throw ValidationError("column '" + name + "' has wrong length");
  categorical_.erase(name);
  numeric_[std::move(name)] = std::move(values);
}

void VariableTable::add_categorical(std::string name, std::vector<std::string> values,
                                    std::vector<std::string> levels) {
  if (values.size() != rows_) throw ValidationError("column '" + name + "' has wrong length");
  for (const auto& v : values) {
    if (!v.empty() && std::find(levels.begin(), levels.end(), v) == levels.end()) {
      levels.push_back(v);
    }
  }
  numeric_.erase(name);
  categorical_[std::move(name)] = {std::move(values), std::move(levels)};
}

bool VariableTable::has(std::string_view name) const {
  return numeric_.count(name) || categorical_.count(name);
}

bool VariableTable::is_categorical(std::string_view name) const {
  return categorical_.count(name) != 0;
}

const std::vector<double>& VariableTable::numeric(std::string_view name) const {
  const auto it = numeric_.find(name);
  if (it == numeric_.end()) {
    throw ValidationError("unknown numeric variable '" + std::string(name) + "'");
  }
  return it->second;
}

const std::vector<std::string>& VariableTable::categorical(std::string_view name) const {
  const auto it = categorical_.find(name);
  if (it == categorical_.end()) {
    throw ValidationError("unknown categorical variable '" + std::string(name) + "'");
  }
  return it->second.values;
}

const std::vector<std::string>& VariableTable::levels(std::string_view name) const {
  const auto it = categorical_.find(name);
  if (it == categorical_.end()) {
    throw ValidationError("unknown categorical variable '" + std::string(name) + "'");
  }
  return it->second.levels;
}

VariableTable VariableTable::subset(std::span<const std::size_t> indices) const {
  VariableTable out(indices.size());
  for (const auto& [name, col] : numeric_) {
    std::vector<double> v;
    v.reserve(indices.size());
    for (auto i : indices) v.push_back(col.at(i));
    out.numeric_[name] = std::move(v);
  }
  for (const auto& [name, col] : categorical_) {
    Categorical c;
    c.levels = col.levels;
    for (auto i : indices) c.values.push_back(col.values.at(i));
    out.categorical_[name] = std::move(c);
  }
  return out;
}

Formula Formula::parse(std::string_view text) {
  const auto tilde = text.find('~');
  if (tilde == std::string_view::npos) throw ValidationError("formula lacks '~'");
  Formula f;
  f.response = trim(text.substr(0, tilde));
  if (f.response.empty()) throw ValidationError("formula lacks a response");

  std::vector<std::vector<std::string>> raw;
  for (const auto& chunk : split(text.substr(tilde + 1), '+')) {
    if (chunk.empty()) throw ValidationError("empty term in formula");
    if (chunk == "1") continue;
    if (chunk.find('*') != std::string::npos) {
      const auto factors = split(chunk, '*');
      const std::size_t m = factors.size();
      // Subsets ordered by size, then lexicographically by position.
      for (std::size_t size = 1; size <= m; ++size) {
        for (unsigned mask = 1; mask < (1u << m); ++mask) {
          if (static_cast<std::size_t>(__builtin_popcount(mask)) != size) continue;
          std::vector<std::string> term;
          for (std::size_t i = 0; i < m; ++i) {
            if (mask & (1u << i)) term.push_back(factors[i]);
          }
          raw.push_back(std::move(term));
        }
      }
    } else {
      raw.push_back(split(chunk, ':'));
    }
  }
  std::set<std::set<std::string>> seen;
  for (auto& term : raw) {
    for (const auto& v : term) {
      if (v.empty() || v.find_first_of(" ()-/") != std::string::npos) {
        throw ValidationError("bad variable name '" + v + "' in formula");
      }
    }
    std::set<std::string> key(term.begin(), term.end());
    if (key.size() != term.size()) throw ValidationError("repeated factor in formula term");
    if (seen.insert(key).second) f.terms.push_back(std::move(term));
  }
  std::stable_sort(f.terms.begin(), f.terms.end(),
                   [](const auto& a, const auto& b) { return a.size() < b.size(); });
  return f;
}

std::string Formula::to_string() const {
  std::string out = response + " ~ 1";
  for (const auto& t : terms) {
    out += " + ";
    for (std::size_t i = 0; i < t.size(); ++i) out += (i ? ":" : "") + t[i];
  }
  return out;
}

std::vector<double> DesignMatrix::column(std::size_t c) const {
  std::vector<double> out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = at(r, c);
  return out;
}

DesignMatrix DesignMatrix::from_columns(std::vector<std::string> names, std::size_t rows,
                                        std::vector<double> row_major) {
  if (row_major.size() != rows * names.size()) {
    throw ValidationError("design values do not match rows x columns");
  }
  DesignMatrix m;
  m.names_ = std::move(names);
  m.rows_ = rows;
  m.values_ = std::move(row_major);
  return m;
}

struct DesignBuilder {
  static DesignMatrix encode(const VariableTable& table, const Formula& formula,
                             const std::map<std::string, std::vector<std::string>>& coded,
                             const std::map<std::string, std::vector<std::string>>& allowed,
                             const std::map<std::string, std::string>& references) {
    const std::size_t n = table.rows();
    std::vector<std::vector<Factor>> blocks;  // per term, its product columns
    for (const auto& term : formula.terms) {
      std::vector<Factor> cols = {{"", std::vector<double>(n, 1.0)}};
      for (const auto& var : term) {
        std::vector<Factor> parts;
        if (table.is_categorical(var)) {
          const auto& values = table.categorical(var);
          const auto& ok = allowed.at(var);
          for (std::size_t r = 0; r < n; ++r) {
            if (values[r].empty()) {
              throw ValidationError("variable '" + var + "' is missing in row " +
                                    std::to_string(r));
            }
            if (std::find(ok.begin(), ok.end(), values[r]) == ok.end()) {
              throw ValidationError("unseen level '" + values[r] + "' of '" + var + "'");
            }
          }
          for (const auto& level : coded.at(var)) {
            Factor f{level, std::vector<double>(n)};
            for (std::size_t r = 0; r < n; ++r) f.values[r] = values[r] == level ? 1.0 : 0.0;
            parts.push_back(std::move(f));
          }
        } else {
          const auto& values = table.numeric(var);
          for (std::size_t r = 0; r < n; ++r) {
            if (!std::isfinite(values[r])) {
              throw ValidationError("variable '" + var + "' is missing in row " +
                                    std::to_string(r));
            }
          }
          parts.push_back({var, values});
        }
        std::vector<Factor> next;
        for (const auto& a : cols) {
          for (const auto& b : parts) {
            Factor f{a.name.empty() ? b.name : a.name + ":" + b.name, a.values};
            for (std::size_t r = 0; r < n; ++r) f.values[r] *= b.values[r];
            next.push_back(std::move(f));
          }
        }
        cols = std::move(next);
      }
      blocks.push_back(std::move(cols));
    }

    DesignMatrix m;
    m.formula_ = formula;
    m.rows_ = n;
    m.names_.push_back(std::string(kIntercept));
    for (const auto& b : blocks) for (const auto& f : b) m.names_.push_back(f.name);
    m.values_.assign(n * m.names_.size(), 0.0);
    for (std::size_t r = 0; r < n; ++r) {
      std::size_t c = 0;
      m.values_[r * m.names_.size() + c++] = 1.0;
      for (const auto& b : blocks) {
        for (const auto& f : b) m.values_[r * m.names_.size() + c++] = f.values[r];
      }
    }
    m.references_ = references;
    m.coded_ = coded;
    m.all_levels_ = allowed;
    return m;
  }
};

DesignMatrix DesignMatrix::encode(const VariableTable& table) const {
  return DesignBuilder::encode(table, formula_, coded_, all_levels_, references_);
}

ModelData build_design(const VariableTable& table, const Formula& formula,
                       const DesignOptions& options) {
  std::set<std::string> mains;
  for (const auto& t : formula.terms) if (t.size() == 1) mains.insert(t[0]);
  for (const auto& t : formula.terms) {
    for (const auto& v : t) {
      if (!table.has(v)) throw ValidationError("formula references unknown variable '" + v + "'");
      if (t.size() > 1 && !mains.count(v)) {
        throw ValidationError("interaction uses '" + v + "' without its main effect");
      }
    }
  }
  if (!table.has(formula.response) || table.is_categorical(formula.response)) {
    throw ValidationError("response '" + formula.response + "' must be a numeric variable");
  }
  for (const auto& [var, level] : options.reference_levels) {
    if (!table.has(var) || !table.is_categorical(var)) {
      throw ValidationError("reference level given for non-categorical '" + var + "'");
    }
  }

  std::map<std::string, std::vector<std::string>> coded, observed_levels;
  std::map<std::string, std::string> references;
  for (const auto& var : mains) {
    if (!table.is_categorical(var)) continue;
    const auto& values = table.categorical(var);
    std::vector<std::string> observed;
    for (const auto& level : table.levels(var)) {
      if (std::find(values.begin(), values.end(), level) != values.end()) {
        observed.push_back(level);
      }
    }
    if (observed.size() < 2) {
      throw ValidationError("categorical '" + var + "' needs at least 2 observed levels");
    }
    std::string ref = observed.front();
    if (const auto it = options.reference_levels.find(var); it != options.reference_levels.end()) {
      ref = it->second;
      if (std::find(observed.begin(), observed.end(), ref) == observed.end()) {
        throw ValidationError("reference level '" + ref + "' of '" + var + "' not observed");
      }
    }
    references[var] = ref;
    std::vector<std::string> dummies;
    for (const auto& l : observed) if (l != ref) dummies.push_back(l);
    coded[var] = std::move(dummies);
    observed_levels[var] = std::move(observed);
  }

  ModelData out{DesignBuilder::encode(table, formula, coded, observed_levels, references), {}};
  out.y = table.numeric(formula.response);
  for (std::size_t r = 0; r < out.y.size(); ++r) {
    if (!std::isfinite(out.y[r])) {
      throw ValidationError("response is missing in row " + std::to_string(r));
    }
  }
  check_full_rank(out.x);
  return out;
}

void check_full_rank(const DesignMatrix& x) {
  const auto& names = x.column_names();
  std::string constant;
  for (std::size_t c = 0; c < x.cols(); ++c) {
    if (names[c] == kIntercept || x.rows() == 0) continue;
    const double first = x.at(0, c);
    bool same = true;
    for (std::size_t r = 1; r < x.rows() && same; ++r) same = x.at(r, c) == first;
    if (same) constant += (constant.empty() ? "" : ", ") + names[c];
  }
  if (!constant.empty()) {
    throw ValidationError("rank-deficient design: constant column(s) " + constant);
  }
  const auto deficient = linalg::dependent_columns(linalg::to_matrix(x));
  if (!deficient.empty()) {
    std::string cols;
    for (auto c : deficient) cols += (cols.empty() ? "" : ", ") + names[c];
    throw ValidationError("rank-deficient design: linearly dependent column(s) " + cols);
  }
}

VariableTable analysis_variables(std::span<const data::AnalysisRow> rows) {
  const std::size_t n = rows.size();
  const double nan = std::nan("");
  VariableTable t(n);
  std::vector<double> resolution(n), si(n), ti(n), age(n), glasses(n), act_ord(n), dom_ord(n);
  std::array<std::vector<double>, 5> pct;
  for (auto& v : pct) v.resize(n);
  std::vector<std::string> activity(n), gender(n), dominant(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = rows[i];
    resolution[i] = r.final_resolution;
    si[i] = r.si;
    ti[i] = r.ti;
    age[i] = r.age.value_or(nan);
    glasses[i] = r.glasses ? (*r.glasses ? 1.0 : 0.0) : nan;
    switch (r.activity) {
      case data::Activity::kStill: act_ord[i] = 0; break;
      case data::Activity::kWalking: act_ord[i] = 1; break;
      case data::Activity::kRunning: act_ord[i] = 2; break;
      case data::Activity::kInVehicle: act_ord[i] = nan; break;
    }
    activity[i] = std::string(data::to_string(r.activity));
    gender[i] = std::string(data::to_string(r.gender));
    if (r.traits) {
      dominant[i] = std::string(data::to_string(r.traits->dominant));
      dom_ord[i] = static_cast<double>(r.traits->dominant);
      for (std::size_t k = 0; k < 5; ++k) pct[k][i] = r.traits->percentiles[k];
    } else {
      dom_ord[i] = nan;
      for (std::size_t k = 0; k < 5; ++k) pct[k][i] = nan;
    }
  }
  t.add_numeric("resolution", std::move(resolution));
  t.add_numeric("si", std::move(si));
  t.add_numeric("ti", std::move(ti));
  t.add_numeric("age", std::move(age));
  t.add_numeric("glasses", std::move(glasses));
  t.add_numeric("activity_ordinal", std::move(act_ord));
  t.add_numeric("dominant_ordinal", std::move(dom_ord));
  for (std::size_t k = 0; k < 5; ++k) {
    t.add_numeric(std::string(data::to_string(data::kTraits[k])), std::move(pct[k]));
  }
  std::vector<std::string> act_levels, trait_levels;
  for (auto a : data::kActivities) act_levels.emplace_back(data::to_string(a));
  for (auto tr : data::kTraits) trait_levels.emplace_back(data::to_string(tr));
  t.add_categorical("activity", std::move(activity), std::move(act_levels));
  t.add_categorical("gender", std::move(gender), {"female", "male"});
  t.add_categorical("dominant", std::move(dominant), std::move(trait_levels));
  return t;
}

ModelData build_design(std::span<const data::AnalysisRow> rows, const Formula& formula,
                       const DesignOptions& options) {
  return build_design(analysis_variables(rows), formula, options);
}

}  // namespace resadapt::stats
