#include "resadapt/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "resadapt/error.hpp"
#include "resadapt/numeric.hpp"
#include "resadapt/parallel.hpp"

namespace resadapt::predict {

std::vector<std::string> feature_names(const FeatureOptions& o) {
  std::vector<std::string> names;
  for (auto a : data::kActivities) names.push_back("activity=" + std::string(data::to_string(a)));
  names.emplace_back("si");
  if (o.include_ti) names.emplace_back("ti");
  names.emplace_back("gender=female");
  names.emplace_back("gender=male");
  if (o.include_age) names.emplace_back("age");
  if (o.include_glasses) names.emplace_back("glasses");
  if (o.include_personality) {
    for (auto t : data::kTraits) names.push_back("pct_" + std::string(data::to_string(t)));
    for (auto t : data::kTraits) names.push_back("dominant=" + std::string(data::to_string(t)));
  }
  return names;
}

ViewerContext ViewerContext::from_row(const data::AnalysisRow& row) {
  return {row.activity, row.si, row.ti, row.gender, row.age, row.glasses, row.traits};
}

std::vector<double> encode_features(const ViewerContext& ctx, const FeatureOptions& o) {
  std::vector<double> f;
  for (auto a : data::kActivities) f.push_back(ctx.activity == a ? 1.0 : 0.0);
  f.push_back(ctx.si);
  if (o.include_ti) f.push_back(ctx.ti);
  f.push_back(ctx.gender == data::Gender::kFemale ? 1.0 : 0.0);
  f.push_back(ctx.gender == data::Gender::kMale ? 1.0 : 0.0);
  if (o.include_age) {
    if (!ctx.age) throw ValidationError("feature 'age' is missing");
    f.push_back(*ctx.age);
  }
  if (o.include_glasses) {
    if (!ctx.glasses) throw ValidationError("feature 'glasses' is missing");
    f.push_back(*ctx.glasses ? 1.0 : 0.0);
  }
  if (o.include_personality) {
    if (!ctx.traits) throw ValidationError("personality features are missing");
    for (double p : ctx.traits->percentiles) f.push_back(p);
    for (auto t : data::kTraits) f.push_back(ctx.traits->dominant == t ? 1.0 : 0.0);
  }
  return f;
}

FeatureTable FeatureTable::subset(std::span<const std::size_t> indices) const {
  FeatureTable out;
  out.names = names;
  for (auto i : indices) {
    const auto r = row(i);
    out.values.insert(out.values.end(), r.begin(), r.end());
    out.targets.push_back(targets.at(i));
    out.viewers.push_back(viewers.at(i));
  }
  return out;
}

FeatureTable make_features(std::span<const data::AnalysisRow> rows, const FeatureOptions& o) {
  FeatureTable t;
  t.names = feature_names(o);
  for (const auto& r : rows) {
    const auto f = encode_features(ViewerContext::from_row(r), o);
    t.values.insert(t.values.end(), f.begin(), f.end());
    t.targets.push_back(r.final_resolution);
    t.viewers.push_back(r.participant_id);
  }
  return t;
}

MeanRegressor::MeanRegressor(const FeatureTable& train)
    : value_(0.0), features_(train.cols()) {
  if (train.rows() == 0) throw ValidationError("mean regressor needs at least one row");
  value_ = mean(train.targets);
}

// ---------------------------------------------------------------------------
// Trees

RegressionTree::RegressionTree(std::vector<Node> nodes, std::size_t features)
    : nodes_(std::move(nodes)), features_(features) {
  if (nodes_.empty()) throw ValidationError("tree has no nodes");
  for (const auto& n : nodes_) {
    if (n.feature < 0) continue;
    const auto bad = [&](int child) {
      return child <= 0 || static_cast<std::size_t>(child) >= nodes_.size();
    };
    if (static_cast<std::size_t>(n.feature) >= features_ || bad(n.left) || bad(n.right)) {
      throw ValidationError("malformed tree node");
    }
  }
}

namespace {

struct TreeTrainer {
  const FeatureTable& table;
  const TreeParams& params;
  Rng& rng;
  std::size_t subset_size;
  std::vector<RegressionTree::Node> nodes;
  std::vector<std::size_t> features;

  double leaf_mean(std::span<const std::size_t> idx) const {
    std::vector<double> ys;
    ys.reserve(idx.size());
    for (auto i : idx) ys.push_back(table.targets[i]);
    return mean(ys);
  }

  int grow(std::vector<std::size_t> idx, int depth) {
    const int id = static_cast<int>(nodes.size());
    nodes.push_back({});
    nodes[id].value = leaf_mean(idx);
    nodes[id].count = idx.size();

    const std::size_t n = idx.size();
    double sum = 0.0, sumsq = 0.0;
    for (auto i : idx) {
      sum += table.targets[i];
      sumsq += table.targets[i] * table.targets[i];
    }
    const double parent_sse = sumsq - sum * sum / static_cast<double>(n);
    const bool depth_left = !params.max_depth || depth < *params.max_depth;
    const bool zero_variance =
        std::all_of(idx.begin(), idx.end(),
                    [&](std::size_t i) { return table.targets[i] == table.targets[idx[0]]; });
    if (!depth_left || zero_variance || n < 2 * params.min_leaf) return id;

    // Fresh random feature subset (partial Fisher-Yates). Searching every
    // feature keeps the natural order so ties never depend on the stream.
    for (std::size_t k = 0; subset_size < features.size() && k < subset_size; ++k) {
      const auto j = k + static_cast<std::size_t>(rng.below(features.size() - k));
      std::swap(features[k], features[j]);
    }

    int best_feature = -1;
    double best_threshold = 0.0;
    double best_sse = parent_sse;
    std::vector<std::size_t> order(idx);
    for (std::size_t k = 0; k < subset_size; ++k) {
      const std::size_t f = features[k];
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return table.at(a, f) < table.at(b, f);
      });
      double ls = 0.0, lsq = 0.0;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        const double y = table.targets[order[i]];
        ls += y;
        lsq += y * y;
        const std::size_t nl = i + 1, nr = n - nl;
        if (nl < params.min_leaf || nr < params.min_leaf) continue;
        const double xa = table.at(order[i], f), xb = table.at(order[i + 1], f);
        if (!(xa < xb)) continue;
        const double rs = sum - ls, rsq = sumsq - lsq;
        const double sse = (lsq - ls * ls / static_cast<double>(nl)) +
                           (rsq - rs * rs / static_cast<double>(nr));
        if (sse < best_sse - 1e-9 * std::max(1.0, parent_sse)) {
          best_sse = sse;
          best_feature = static_cast<int>(f);
          double thr = xa + 0.5 * (xb - xa);
          if (!(thr < xb)) thr = xa;
          best_threshold = thr;
        }
      }
    }
    if (best_feature < 0) return id;

    std::vector<std::size_t> left, right;
    for (auto i : idx) {
      (table.at(i, static_cast<std::size_t>(best_feature)) <= best_threshold ? left : right)
          .push_back(i);
    }
    nodes[id].feature = best_feature;
    nodes[id].threshold = best_threshold;
    const int l = grow(std::move(left), depth + 1);
    nodes[id].left = l;
    const int r = grow(std::move(right), depth + 1);
    nodes[id].right = r;
    return id;
  }
};

}  // namespace

RegressionTree RegressionTree::train(const FeatureTable& table,
                                     std::span<const std::size_t> sample,
                                     const TreeParams& params, Rng& rng) {
  if (sample.empty()) throw ValidationError("cannot train a tree on an empty sample");
  if (params.min_leaf < 1) throw ValidationError("min_leaf must be >= 1");
  if (sample.size() < params.min_leaf) {
    throw ValidationError("tree sample smaller than min_leaf");
  }
  if (params.max_depth && *params.max_depth < 0) throw ValidationError("max_depth must be >= 0");
  if (table.cols() == 0) throw ValidationError("feature table has no columns");
  const std::size_t p = table.cols();
  std::size_t m = params.feature_subset.value_or(
      static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(p)))));
  if (m == 0 || m > p) {
    throw ValidationError("feature subset size must be in [1, " + std::to_string(p) + "]");
  }
  TreeTrainer trainer{table, params, rng, m, {}, {}};
  trainer.features.resize(p);
  std::iota(trainer.features.begin(), trainer.features.end(), 0);
  trainer.grow(std::vector<std::size_t>(sample.begin(), sample.end()), 0);
  return RegressionTree(std::move(trainer.nodes), p);
}

RegressionTree train_tree(const FeatureTable& table, const TreeParams& params, Rng& rng) {
  std::vector<std::size_t> all(table.rows());
  std::iota(all.begin(), all.end(), 0);
  return RegressionTree::train(table, all, params, rng);
}

double RegressionTree::predict(std::span<const double> x) const {
  if (x.size() != features_) {
    throw ValidationError("tree expects " + std::to_string(features_) + " features, got " +
                          std::to_string(x.size()));
  }
  std::size_t i = 0;
  while (nodes_[i].feature >= 0) {
    const auto& n = nodes_[i];
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left
                                                                                        : n.right);
  }
  return nodes_[i].value;
}

int RegressionTree::depth() const {
  std::vector<int> d(nodes_.size(), 0);
  int best = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    best = std::max(best, d[i]);
    if (nodes_[i].feature >= 0) {
      d[static_cast<std::size_t>(nodes_[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes_[i].right)] = d[i] + 1;
    }
  }
  return best;
}

std::size_t RegressionTree::leaf_count() const {
  return static_cast<std::size_t>(std::count_if(
      nodes_.begin(), nodes_.end(), [](const Node& n) { return n.feature < 0; }));
}

// ---------------------------------------------------------------------------
// Forest

ForestModel::ForestModel(std::vector<RegressionTree> trees, std::vector<std::string> names,
                         ForestParams params, std::uint64_t seed)
    : trees_(std::move(trees)), feature_names_(std::move(names)), params_(params), seed_(seed) {
  if (trees_.empty()) throw ValidationError("forest has no trees");
  for (const auto& t : trees_) {
    if (t.feature_count() != feature_names_.size()) {
      throw ValidationError("tree feature count does not match the forest");
    }
  }
}

double ForestModel::predict(std::span<const double> x) const {
  // Shifted mean: exact when every tree agrees.
  const double ref = trees_.front().predict(x);
  double acc = 0.0;
  for (std::size_t t = 1; t < trees_.size(); ++t) acc += trees_[t].predict(x) - ref;
  return ref + acc / static_cast<double>(trees_.size());
}

ForestModel train_forest(const FeatureTable& table, const ForestParams& params,
                         std::uint64_t seed) {
  if (params.n_trees < 1) throw ValidationError("n_trees must be >= 1");
  if (table.rows() == 0) throw ValidationError("cannot train a forest on an empty table");
  const auto n_trees = static_cast<std::size_t>(params.n_trees);
  std::vector<RegressionTree> trees(n_trees);
  std::vector<std::vector<std::size_t>> samples(n_trees);
  const std::size_t n = table.rows();
  parallel_for(n_trees, params.threads, [&](std::size_t t) {
    Rng rng(derive_seed(seed, t));
    std::vector<std::size_t> sample(n);
    if (params.bootstrap) {
      for (auto& s : sample) s = static_cast<std::size_t>(rng.below(n));
    } else {
      std::iota(sample.begin(), sample.end(), 0);
    }
    trees[t] = RegressionTree::train(table, sample, params.tree, rng);
    if (params.record_samples) samples[t] = std::move(sample);
  });
  ForestModel model(std::move(trees), table.names, params, seed);
  if (params.record_samples) model.samples_ = std::move(samples);
  return model;
}

// ---------------------------------------------------------------------------
// Evaluation

Metrics compute_metrics(std::span<const double> predictions, std::span<const double> targets) {
  if (predictions.size() != targets.size()) {
    throw ValidationError("metrics: predictions and targets differ in length");
  }
  if (targets.empty()) throw ValidationError("metrics: empty input");
  double ape = 0.0, ae = 0.0, se = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (targets[i] == 0.0) throw ValidationError("metrics: zero target");
    const double d = predictions[i] - targets[i];
    ape += std::fabs(d) / std::fabs(targets[i]);
    ae += std::fabs(d);
    se += d * d;
  }
  const double n = static_cast<double>(targets.size());
  Metrics m;
  m.accuracy = 100.0 - 100.0 * ape / n;
  m.mae = ae / n;
  m.rmse = std::max(std::sqrt(se / n), m.mae);
  return m;
}

namespace {

Metrics summarize(const std::vector<FoldResult>& folds, bool stddev, const Metrics& mu = {}) {
  Metrics out;
  const double n = static_cast<double>(folds.size());
  for (const auto& f : folds) {
    if (stddev) {
      out.accuracy += (f.metrics.accuracy - mu.accuracy) * (f.metrics.accuracy - mu.accuracy);
      out.mae += (f.metrics.mae - mu.mae) * (f.metrics.mae - mu.mae);
      out.rmse += (f.metrics.rmse - mu.rmse) * (f.metrics.rmse - mu.rmse);
    } else {
      out.accuracy += f.metrics.accuracy;
      out.mae += f.metrics.mae;
      out.rmse += f.metrics.rmse;
    }
  }
  out.accuracy /= n;
  out.mae /= n;
  out.rmse /= n;
  if (stddev) {
    out.accuracy = std::sqrt(out.accuracy);
    out.mae = std::sqrt(out.mae);
    out.rmse = std::sqrt(out.rmse);
  }
  return out;
}

}  // namespace

EvalMetrics loocv_by_viewer(const FeatureTable& table, const ModelBuilder& builder,
                            std::span<const std::string> viewers) {
  std::vector<std::string> order;
  std::set<std::string> present(table.viewers.begin(), table.viewers.end());
  EvalMetrics out;
  if (viewers.empty()) {
    // First-appearance order.
    std::set<std::string> seen;
    for (const auto& v : table.viewers) {
      if (seen.insert(v).second) order.push_back(v);
    }
  } else {
    for (const auto& v : viewers) {
      if (!present.count(v)) {
        out.warnings.push_back("viewer '" + v + "' has no rows; fold skipped");
        continue;
      }
      order.push_back(v);
    }
  }
  if (order.size() < 2) throw ValidationError("LOOCV needs at least 2 viewers with rows");

  for (const auto& held_out : order) {
    std::vector<std::size_t> train_idx, test_idx;
    for (std::size_t i = 0; i < table.rows(); ++i) {
      (table.viewers[i] == held_out ? test_idx : train_idx).push_back(i);
    }
    if (train_idx.empty()) continue;
    const auto train = table.subset(train_idx);
    const auto model = builder(train);
    std::vector<double> preds, targets;
    for (auto i : test_idx) {
      preds.push_back(model->predict(table.row(i)));
      targets.push_back(table.targets[i]);
    }
    out.folds.push_back({held_out, test_idx.size(), compute_metrics(preds, targets)});
  }
  out.mean = summarize(out.folds, false);
  out.stddev = summarize(out.folds, true, out.mean);
  return out;
}

ModelBuilder mean_builder() {
  return [](const FeatureTable& train) -> std::unique_ptr<Regressor> {
    return std::make_unique<MeanRegressor>(train);
  };
}

ModelBuilder forest_builder(ForestParams params, std::uint64_t seed) {
  return [params, seed](const FeatureTable& train) -> std::unique_ptr<Regressor> {
    return std::make_unique<ForestModel>(train_forest(train, params, seed));
  };
}

PersonalityEval per_personality_eval(std::span<const data::AnalysisRow> rows,
                                     const FeatureOptions& features,
                                     const ForestParams& params, std::uint64_t seed) {
  PersonalityEval out;
  for (auto trait : data::kTraits) {
    const std::string name(data::to_string(trait));
    std::vector<data::AnalysisRow> subset;
    std::set<std::string> viewers;
    for (const auto& r : rows) {
      if (!r.traits) {
        throw ValidationError("per-personality evaluation needs personality data (study 2)");
      }
      if (r.traits->dominant == trait) {
        subset.push_back(r);
        viewers.insert(r.participant_id);
      }
    }
    if (viewers.size() < 2) {
      if (!viewers.empty()) {
        out.excluded.push_back(name);
        out.notices.push_back(name + ": only " + std::to_string(viewers.size()) +
                              " viewer; excluded");
      }
      continue;
    }
    const auto table = make_features(subset, features);
    out.forest[name] = loocv_by_viewer(table, forest_builder(params, seed));
    out.mean[name] = loocv_by_viewer(table, mean_builder());
  }
  return out;
}

}  // namespace resadapt::predict
