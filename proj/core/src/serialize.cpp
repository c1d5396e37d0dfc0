#include "resadapt/serialize.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "resadapt/error.hpp"

namespace resadapt::io {
namespace {

using nlohmann::json;

void emit(std::string& out, const json& j, int depth) {
  const auto pad = [&](int d) { out.append(static_cast<std::size_t>(2 * d), ' '); };
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (const auto& [k, v] : j.items()) {  // std::map storage: sorted keys
        if (!first) out += ",\n";
        first = false;
        pad(depth + 1);
        out += json(k).dump();
        out += ": ";
        emit(out, v, depth + 1);
      }
      out += "\n";
      pad(depth);
      out += "}";
      return;
    }
    case json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out += ",\n";
        pad(depth + 1);
        emit(out, j[i], depth + 1);
      }
      out += "\n";
      pad(depth);
      out += "]";
      return;
    }
    case json::value_t::number_float: {
      const double v = j.get<double>();
      if (!std::isfinite(v)) throw ValidationError("cannot serialize a non-finite number");
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out += buf;
      return;
    }
    default:
      out += j.dump();
  }
}

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json coefficients(const std::vector<stats::Coefficient>& cs) {
  json arr = json::array();
  for (const auto& c : cs) {
    arr.push_back({{"name", c.name},
                   {"estimate", c.estimate},
                   {"std_error", c.std_error},
                   {"t_value", c.t_value},
                   {"p_value", c.p_value}});
  }
  return arr;
}

json node_json(const std::vector<predict::RegressionTree::Node>& nodes, std::size_t i) {
  const auto& n = nodes[i];
  json j = {{"value", n.value}, {"count", n.count}};
  if (n.feature >= 0) {
    j["feature"] = n.feature;
    j["threshold"] = n.threshold;
    j["left"] = node_json(nodes, static_cast<std::size_t>(n.left));
    j["right"] = node_json(nodes, static_cast<std::size_t>(n.right));
  }
  return j;
}

int node_from_json(const json& j, std::vector<predict::RegressionTree::Node>& nodes) {
  const int id = static_cast<int>(nodes.size());
  nodes.push_back({});
  nodes[static_cast<std::size_t>(id)].value = j.at("value").get<double>();
  nodes[static_cast<std::size_t>(id)].count = j.at("count").get<std::size_t>();
  if (j.contains("feature")) {
    nodes[static_cast<std::size_t>(id)].feature = j.at("feature").get<int>();
    nodes[static_cast<std::size_t>(id)].threshold = j.at("threshold").get<double>();
    const int l = node_from_json(j.at("left"), nodes);
    nodes[static_cast<std::size_t>(id)].left = l;
    const int r = node_from_json(j.at("right"), nodes);
    nodes[static_cast<std::size_t>(id)].right = r;
  }
  return id;
}

}  // namespace

std::string canonical_json(const json& j) {
  std::string out;
  emit(out, j, 0);
  out += "\n";
  return out;
}

json to_json(const video::SiTiProfile& p, video::Aggregate agg,
             const video::SiTiThresholds& thresholds) {
  json j;
  j["si_series"] = p.si_series;
  j["ti_series"] = p.ti_series;
  j["si_max"] = p.si_max;
  j["si_mean"] = p.si_mean;
  j["ti_max"] = opt(p.ti_max);
  j["ti_mean"] = opt(p.ti_mean);
  j["aggregate"] = agg == video::Aggregate::kMax ? "max" : "mean";
  j["si"] = p.si(agg);
  j["ti"] = opt(p.ti(agg));
  j["frames"] = p.si_series.size();
  const auto cat = video::classify_siti(p, thresholds, agg);
  j["category"] = cat ? json(std::string(video::to_string(cat->label))) : json(nullptr);
  j["thresholds"] = {{"si_low", thresholds.si_low},
                     {"si_high", thresholds.si_high},
                     {"ti_low", thresholds.ti_low},
                     {"ti_high", thresholds.ti_high}};
  return j;
}

json to_json(const stats::KwResult& r) {
  return {{"h", r.h}, {"df", r.df}, {"p", r.p}, {"eta_squared", r.eta_squared},
          {"k", r.k}, {"n", r.n}};
}

json to_json(const stats::OlsFit& f) {
  return {{"coefficients", coefficients(f.coefficients)},
          {"r_squared", f.r_squared},
          {"adj_r_squared", f.adj_r_squared},
          {"residual_se", f.residual_se},
          {"n", f.n},
          {"df_residual", f.df_residual}};
}

json to_json(const stats::LmmFit& f) {
  json groups = json::object();
  for (const auto& [g, v] : f.group_effects) groups[g] = v;
  return {{"fixed", coefficients(f.fixed)},
          {"var_group", f.var_group},
          {"var_residual", f.var_residual},
          {"lambda", f.lambda},
          {"reml_loglik", f.reml_loglik},
          {"ml_loglik", f.ml_loglik},
          {"aic", f.aic},
          {"bic", f.bic},
          {"icc", f.icc},
          {"r2_marginal", f.r2_marginal},
          {"r2_conditional", f.r2_conditional},
          {"boundary", f.boundary},
          {"n", f.n},
          {"n_groups", f.n_groups},
          {"df_fixed", f.df_fixed},
          {"group_effects", groups}};
}

json to_json(const predict::Metrics& m) {
  return {{"accuracy", m.accuracy}, {"mae", m.mae}, {"rmse", m.rmse}};
}

json to_json(const predict::EvalMetrics& m) {
  json folds = json::array();
  for (const auto& f : m.folds) {
    folds.push_back({{"viewer", f.viewer}, {"n", f.n}, {"metrics", to_json(f.metrics)}});
  }
  return {{"folds", folds},
          {"mean", to_json(m.mean)},
          {"stddev", to_json(m.stddev)},
          {"warnings", m.warnings}};
}

json to_json(const energy::PlaybackTrace& t) {
  json arr = json::array();
  for (const auto& s : t.segments()) {
    arr.push_back({{"resolution", s.resolution}, {"duration_s", s.duration_s}});
  }
  return arr;
}

json to_json(const energy::EnergyReport& r) {
  json policies = json::object();
  for (const auto& [name, p] : r.policies) {
    policies[name] = {{"energy_mwh", p.energy_mwh}, {"savings_percent", p.savings_percent}};
  }
  return {{"baseline", r.baseline}, {"policies", policies}, {"diagnostics", r.diagnostics}};
}

json to_json(const sim::ReplayReport& r) {
  json sessions = json::array();
  for (const auto& s : r.sessions) {
    sessions.push_back({{"participant_id", s.participant_id},
                        {"video_id", s.video_id},
                        {"activity", data::to_string(s.activity)},
                        {"trace", to_json(s.trace)},
                        {"report", to_json(s.report)}});
  }
  return {{"policy", r.policy},
          {"baseline", r.baseline},
          {"sessions", sessions},
          {"aggregate", to_json(r.aggregate)}};
}

json to_json(const sim::SessionResult& r) {
  json decisions = json::array();
  for (const auto& d : r.decisions) {
    decisions.push_back({{"t_s", d.t_s},
                         {"activity", data::to_string(d.activity)},
                         {"raw_prediction", d.raw_prediction},
                         {"chosen", d.chosen},
                         {"applied", d.applied}});
  }
  return {{"trace", to_json(r.trace)}, {"decisions", decisions}};
}

json to_json(const predict::FeatureOptions& f) {
  return {{"include_ti", f.include_ti},
          {"include_age", f.include_age},
          {"include_glasses", f.include_glasses},
          {"include_personality", f.include_personality}};
}

predict::FeatureOptions feature_options_from_json(const json& j) {
  predict::FeatureOptions f;
  f.include_ti = j.at("include_ti").get<bool>();
  f.include_age = j.at("include_age").get<bool>();
  f.include_glasses = j.at("include_glasses").get<bool>();
  f.include_personality = j.at("include_personality").get<bool>();
  return f;
}

const predict::Regressor& ModelFile::regressor() const {
  return std::visit([](const auto& m) -> const predict::Regressor& { return m; }, model);
}

std::string ModelFile::kind() const {
  return std::holds_alternative<predict::ForestModel>(model) ? "forest" : "mean";
}

json to_json(const ModelFile& m) {
  json j;
  j["format_version"] = kModelFormatVersion;
  j["kind"] = m.kind();
  j["features"] = to_json(m.features);
  j["feature_names"] = predict::feature_names(m.features);
  if (const auto* mean = std::get_if<predict::MeanRegressor>(&m.model)) {
    j["value"] = mean->value();
    return j;
  }
  const auto& forest = std::get<predict::ForestModel>(m.model);
  const auto& p = forest.params();
  j["seed"] = forest.seed();
  j["params"] = {{"n_trees", p.n_trees},
                 {"bootstrap", p.bootstrap},
                 {"max_depth", p.tree.max_depth ? json(*p.tree.max_depth) : json(nullptr)},
                 {"min_leaf", p.tree.min_leaf},
                 {"feature_subset",
                  p.tree.feature_subset ? json(*p.tree.feature_subset) : json(nullptr)}};
  json trees = json::array();
  for (const auto& t : forest.trees()) trees.push_back(node_json(t.nodes(), 0));
  j["trees"] = trees;
  return j;
}

ModelFile model_from_json(const json& j) {
  try {
    const int version = j.at("format_version").get<int>();
    if (version != kModelFormatVersion) {
      throw ValidationError("unsupported model format version " + std::to_string(version));
    }
    const auto features = feature_options_from_json(j.at("features"));
    const auto names = predict::feature_names(features);
    if (j.at("feature_names").get<std::vector<std::string>>() != names) {
      throw ValidationError("model feature names do not match its feature options");
    }
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "mean") {
      return {features, predict::MeanRegressor(j.at("value").get<double>(), names.size())};
    }
    if (kind != "forest") throw ValidationError("unknown model kind '" + kind + "'");
    predict::ForestParams p;
    const auto& pj = j.at("params");
    p.n_trees = pj.at("n_trees").get<int>();
    p.bootstrap = pj.at("bootstrap").get<bool>();
    if (!pj.at("max_depth").is_null()) p.tree.max_depth = pj.at("max_depth").get<int>();
    p.tree.min_leaf = pj.at("min_leaf").get<std::size_t>();
    if (!pj.at("feature_subset").is_null()) {
      p.tree.feature_subset = pj.at("feature_subset").get<std::size_t>();
    }
    std::vector<predict::RegressionTree> trees;
    for (const auto& tj : j.at("trees")) {
      std::vector<predict::RegressionTree::Node> nodes;
      node_from_json(tj, nodes);
      trees.emplace_back(std::move(nodes), names.size());
    }
    if (static_cast<int>(trees.size()) != p.n_trees) {
      throw ValidationError("model declares " + std::to_string(p.n_trees) + " trees but has " +
                            std::to_string(trees.size()));
    }
    return {features, predict::ForestModel(std::move(trees), names, p,
                                           j.at("seed").get<std::uint64_t>())};
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed model file: ") + e.what());
  }
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": invalid JSON: " + e.what(), e.byte);
  }
}

ModelFile load_model(const std::filesystem::path& path) {
  return model_from_json(read_json_file(path));
}

}  // namespace resadapt::io
