#pragma once

// Resolution predictors: CART regression trees, a bagged random forest, the
// mean baseline, and leave-one-viewer-out evaluation.

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "resadapt/dataset.hpp"
#include "resadapt/rng.hpp"

namespace resadapt::predict {

/// Which optional predictor groups enter the feature vector. Activity,
/// gender and dominant trait are one-hot coded over all their levels.
struct FeatureOptions {
  bool include_ti = true;
  bool include_age = true;
  bool include_glasses = true;
  bool include_personality = true;

  friend bool operator==(const FeatureOptions&, const FeatureOptions&) = default;
};

std::vector<std::string> feature_names(const FeatureOptions& options);

/// Viewer context the model sees; the same fields as an AnalysisRow minus
/// the target.
struct ViewerContext {
  data::Activity activity = data::Activity::kStill;
  double si = 0.0;
  double ti = 0.0;
  data::Gender gender = data::Gender::kFemale;
  std::optional<double> age;
  std::optional<bool> glasses;
  std::optional<data::TraitProfile> traits;

  static ViewerContext from_row(const data::AnalysisRow& row);
};

/// Throws ValidationError when a field the options require is missing.
std::vector<double> encode_features(const ViewerContext& ctx, const FeatureOptions& options);

/// Row-major feature matrix with targets and the viewer owning each row.
struct FeatureTable {
  std::vector<std::string> names;
  std::vector<double> values;
  std::vector<double> targets;
  std::vector<std::string> viewers;

  std::size_t rows() const noexcept { return targets.size(); }
  std::size_t cols() const noexcept { return names.size(); }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(values).subspan(r * cols(), cols());
  }
  double at(std::size_t r, std::size_t c) const { return values[r * cols() + c]; }
  FeatureTable subset(std::span<const std::size_t> indices) const;
};

FeatureTable make_features(std::span<const data::AnalysisRow> rows,
                           const FeatureOptions& options);

class Regressor {
 public:
  virtual ~Regressor() = default;
  virtual double predict(std::span<const double> features) const = 0;
  virtual std::size_t feature_count() const = 0;
};

class MeanRegressor final : public Regressor {
 public:
  /// Throws ValidationError on an empty table.
  explicit MeanRegressor(const FeatureTable& train);
  MeanRegressor(double value, std::size_t features) : value_(value), features_(features) {}

  double predict(std::span<const double>) const override { return value_; }
  std::size_t feature_count() const override { return features_; }
  double value() const noexcept { return value_; }

 private:
  double value_;
  std::size_t features_;
};

struct TreeParams {
  std::optional<int> max_depth;  // unbounded when empty
  std::size_t min_leaf = 2;
  /// Features tried per node; empty means ceil(sqrt(#features)).
  std::optional<std::size_t> feature_subset;
};

class RegressionTree {
 public:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;  // mean target of the training rows reaching the node
    std::size_t count = 0;
  };

  RegressionTree() = default;
  explicit RegressionTree(std::vector<Node> nodes, std::size_t features);

  /// Greedy CART on the rows named by `sample` (duplicates allowed). At each
  /// node a fresh random subset of features is searched for the split with
  /// the lowest child sum of squared errors; x <= threshold goes left.
  /// Throws ValidationError when the sample is empty or smaller than min_leaf.
  static RegressionTree train(const FeatureTable& table, std::span<const std::size_t> sample,
                              const TreeParams& params, Rng& rng);

  double predict(std::span<const double> features) const;
  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  std::size_t feature_count() const noexcept { return features_; }
  int depth() const;
  std::size_t leaf_count() const;

 private:
  std::vector<Node> nodes_;
  std::size_t features_ = 0;
};

/// Convenience: trains one tree on every row of `table`.
RegressionTree train_tree(const FeatureTable& table, const TreeParams& params, Rng& rng);

struct ForestParams {
  int n_trees = 100;
  TreeParams tree;
  bool bootstrap = true;
  unsigned threads = 1;
  /// Keep each tree's bootstrap row indices (leak checks, diagnostics).
  bool record_samples = false;
};

class ForestModel final : public Regressor {
 public:
  ForestModel() = default;
  ForestModel(std::vector<RegressionTree> trees, std::vector<std::string> feature_names,
              ForestParams params, std::uint64_t seed);

  /// Mean of the tree predictions.
  double predict(std::span<const double> features) const override;
  std::size_t feature_count() const override { return feature_names_.size(); }

  const std::vector<RegressionTree>& trees() const noexcept { return trees_; }
  const std::vector<std::string>& feature_names() const noexcept { return feature_names_; }
  const ForestParams& params() const noexcept { return params_; }
  std::uint64_t seed() const noexcept { return seed_; }
  /// Per-tree training row indices when params.record_samples was set.
  const std::vector<std::vector<std::size_t>>& samples() const noexcept { return samples_; }

 private:
  friend ForestModel train_forest(const FeatureTable&, const ForestParams&, std::uint64_t);
  std::vector<RegressionTree> trees_;
  std::vector<std::string> feature_names_;
  ForestParams params_;
  std::uint64_t seed_ = 0;
  std::vector<std::vector<std::size_t>> samples_;
};

/// Tree t draws its bootstrap sample and feature subsets from
/// Rng(derive_seed(seed, t)), so results do not depend on thread count.
ForestModel train_forest(const FeatureTable& table, const ForestParams& params,
                         std::uint64_t seed);

struct Metrics {
  double accuracy = 0.0;  // 100 - MAPE
  double mae = 0.0;
  double rmse = 0.0;
};

/// Throws ValidationError on mismatched or empty input, or a zero target.
Metrics compute_metrics(std::span<const double> predictions, std::span<const double> targets);

struct FoldResult {
  std::string viewer;
  std::size_t n = 0;
  Metrics metrics;
};

struct EvalMetrics {
  std::vector<FoldResult> folds;
  Metrics mean;
  Metrics stddev;  // population standard deviation over folds
  std::vector<std::string> warnings;
};

using ModelBuilder = std::function<std::unique_ptr<Regressor>(const FeatureTable& train)>;

/// One fold per viewer: train on every other viewer's rows, score the
/// held-out viewer. Viewers listed in `viewers` with no rows are skipped
/// with a warning. Throws ValidationError with fewer than 2 viewers.
EvalMetrics loocv_by_viewer(const FeatureTable& table, const ModelBuilder& builder,
                            std::span<const std::string> viewers = {});

ModelBuilder mean_builder();
ModelBuilder forest_builder(ForestParams params, std::uint64_t seed);

struct PersonalityEval {
  std::map<std::string, EvalMetrics> forest;  // keyed by dominant trait
  std::map<std::string, EvalMetrics> mean;
  std::vector<std::string> excluded;          // traits with < 2 viewers
  std::vector<std::string> notices;
};

/// Separate LOOCV runs inside each dominant-trait subset.
PersonalityEval per_personality_eval(std::span<const data::AnalysisRow> rows,
                                     const FeatureOptions& features,
                                     const ForestParams& params, std::uint64_t seed);

}  // namespace resadapt::predict
