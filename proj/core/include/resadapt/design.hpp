#pragma once

// Model formulas and dummy-coded design matrices.
//
// A formula reads "response ~ a + b*c + d:e". `*` expands to all main effects
// and products of its factors; `:` is a bare product. Every interaction's
// factors must also enter as main effects. The intercept is always present.
// Categorical factors are dummy coded against a reference level; dummy
// columns are named after their level ("walking"), numeric columns after the
// variable ("si"), products by joining with ':' ("walking:si").

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "resadapt/dataset.hpp"

namespace resadapt::stats {

/// Column store of model variables. Numeric missing values are NaN,
/// categorical missing values are empty strings.
class VariableTable {
 public:
  explicit VariableTable(std::size_t rows = 0) : rows_(rows) {}

  std::size_t rows() const noexcept { return rows_; }

  void add_numeric(std::string name, std::vector<double> values);
  /// `levels` fixes the level order used for coding and default references.
  void add_categorical(std::string name, std::vector<std::string> values,
                       std::vector<std::string> levels);

  bool has(std::string_view name) const;
  bool is_categorical(std::string_view name) const;
  const std::vector<double>& numeric(std::string_view name) const;
  const std::vector<std::string>& categorical(std::string_view name) const;
  const std::vector<std::string>& levels(std::string_view name) const;

  /// Rows at the given indices, in that order.
  VariableTable subset(std::span<const std::size_t> indices) const;

 private:
  std::size_t rows_;
  std::map<std::string, std::vector<double>, std::less<>> numeric_;
  struct Categorical {
    std::vector<std::string> values;
    std::vector<std::string> levels;
  };
  std::map<std::string, Categorical, std::less<>> categorical_;
};

struct Formula {
  std::string response;
  /// Each term is a list of variable names; main effects have one entry.
  /// Terms are ordered by degree, then by first appearance.
  std::vector<std::vector<std::string>> terms;

  /// Throws ValidationError on syntax errors.
  static Formula parse(std::string_view text);
  std::string to_string() const;
};

struct DesignOptions {
  /// Reference level per categorical variable; unset variables use the first
  /// observed level in the variable's level order.
  std::map<std::string, std::string> reference_levels;
};

class DesignMatrix {
 public:
  const std::vector<std::string>& column_names() const noexcept { return names_; }
  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return names_.size(); }
  double at(std::size_t r, std::size_t c) const { return values_[r * cols() + c]; }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(values_).subspan(r * cols(), cols());
  }
  std::vector<double> column(std::size_t c) const;
  /// Row-major values.
  const std::vector<double>& values() const noexcept { return values_; }

  const std::map<std::string, std::string>& reference_levels() const noexcept {
    return references_;
  }
  /// Non-reference levels that received dummy columns, per categorical variable.
  const std::map<std::string, std::vector<std::string>>& coded_levels() const noexcept {
    return coded_;
  }
  const Formula& formula() const noexcept { return formula_; }

  /// Encodes new data with this matrix's columns and coding. Throws
  /// ValidationError on a level that was not seen when the design was built.
  DesignMatrix encode(const VariableTable& table) const;

  /// Builds a matrix directly from named columns (tests, custom designs).
  static DesignMatrix from_columns(std::vector<std::string> names, std::size_t rows,
                                   std::vector<double> row_major);

 private:
  friend struct DesignBuilder;
  Formula formula_;
  std::vector<std::string> names_;
  std::size_t rows_ = 0;
  std::vector<double> values_;
  std::map<std::string, std::string> references_;
  std::map<std::string, std::vector<std::string>> coded_;
  std::map<std::string, std::vector<std::string>> all_levels_;
};

struct ModelData {
  DesignMatrix x;
  std::vector<double> y;
};

/// Throws ValidationError when a variable is unknown or has missing values,
/// a categorical factor has fewer than 2 observed levels, a reference level
/// was not observed, or the design is rank deficient.
ModelData build_design(const VariableTable& table, const Formula& formula,
                       const DesignOptions& options = {});

/// Throws ValidationError naming the columns that make the design rank
/// deficient (including constant non-intercept columns).
void check_full_rank(const DesignMatrix& x);

/// Model variables of the flattened study rows:
///   numeric      resolution, si, ti, age, glasses (0/1), activity_ordinal
///                (still=0, walking=1, running=2; in_vehicle missing),
///                dominant_ordinal (trait order index), and the five trait
///                percentiles named extraversion ... openness
///   categorical  activity, gender, dominant
VariableTable analysis_variables(std::span<const data::AnalysisRow> rows);

ModelData build_design(std::span<const data::AnalysisRow> rows, const Formula& formula,
                       const DesignOptions& options = {});

}  // namespace resadapt::stats
