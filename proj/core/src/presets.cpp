#include "resadapt/presets.hpp"

#include <algorithm>

#include "resadapt/design.hpp"
#include "resadapt/error.hpp"
#include "resadapt/serialize.hpp"

namespace resadapt::stats {
namespace {

template <typename Key, typename KeyFn>
KwResult kw_by(std::span<const data::AnalysisRow> rows, KeyFn key) {
  std::map<Key, std::vector<double>> groups;
  for (const auto& r : rows) groups[key(r)].push_back(r.final_resolution);
  std::vector<std::vector<double>> g;
  for (auto& [k, v] : groups) g.push_back(std::move(v));
  return kruskal_wallis(g);
}

std::vector<data::AnalysisRow> study_rows(const data::Dataset* dataset, int study,
                                          const std::string& preset) {
  if (!dataset) throw ValidationError("preset '" + preset + "' needs a dataset");
  auto rows = data::analysis_rows(dataset->filter_study(study));
  if (rows.empty()) {
    throw ValidationError("preset '" + preset + "' needs study-" + std::to_string(study) +
                          " sessions; the dataset has none");
  }
  return rows;
}

void require_traits(std::span<const data::AnalysisRow> rows, const std::string& what) {
  for (const auto& r : rows) {
    if (!r.traits) {
      throw ValidationError(what + " needs personality data, which session of participant '" +
                            r.participant_id + "' lacks");
    }
  }
}

OlsFit ols_formula(std::span<const data::AnalysisRow> rows, const std::string& formula,
                   const DesignOptions& opts) {
  const auto md = build_design(rows, Formula::parse(formula), opts);
  return ols_fit(md.x, md.y);
}

std::vector<std::string> dominant_groups(std::span<const data::AnalysisRow> rows) {
  std::vector<std::string> g;
  for (const auto& r : rows) g.emplace_back(data::to_string(r.traits->dominant));
  return g;
}

}  // namespace

std::vector<EtaCheckpoint> eta_checkpoints() {
  std::vector<EtaCheckpoint> out = {
      {"activity-study1", 14.139, 4, 264, 0.0},
      {"activity-study2", 19.817, 3, 276, 0.0},
      {"video-study1", 65.328, 12, 264, 0.0},
      {"video-study2", 79.045, 12, 276, 0.0},
  };
  for (auto& c : out) c.eta_squared = eta_squared(c.h, c.k, c.n);
  return out;
}

KwResult kw_by_activity(std::span<const data::AnalysisRow> rows) {
  return kw_by<data::Activity>(rows, [](const data::AnalysisRow& r) { return r.activity; });
}

KwResult kw_by_video(std::span<const data::AnalysisRow> rows) {
  return kw_by<std::string>(rows, [](const data::AnalysisRow& r) { return r.video_id; });
}

KwResult kw_by_dominant(std::span<const data::AnalysisRow> rows) {
  require_traits(rows, "grouping by dominant trait");
  return kw_by<data::Trait>(rows, [](const data::AnalysisRow& r) { return r.traits->dominant; });
}

std::map<data::Activity, ActivityCorrelation> pearson_by_activity(
    std::span<const data::AnalysisRow> rows) {
  std::map<data::Activity, ActivityCorrelation> out;
  for (auto a : data::kActivities) {
    struct Acc {
      double sum = 0.0;
      std::size_t n = 0;
      double si = 0.0, ti = 0.0;
    };
    std::map<std::string, Acc> per_video;
    for (const auto& r : rows) {
      if (r.activity != a) continue;
      auto& acc = per_video[r.video_id];
      acc.sum += r.final_resolution;
      ++acc.n;
      acc.si = r.si;
      acc.ti = r.ti;
    }
    if (per_video.size() < 2) continue;
    std::vector<double> res, si, ti;
    for (const auto& [id, acc] : per_video) {
      res.push_back(acc.sum / static_cast<double>(acc.n));
      si.push_back(acc.si);
      ti.push_back(acc.ti);
    }
    out[a] = {pearson(res, si), pearson(res, ti), per_video.size()};
  }
  return out;
}

OlsFit table4_fit(std::span<const data::AnalysisRow> rows) {
  return ols_formula(rows, "resolution ~ activity*si + activity*ti",
                     {{{"activity", "still"}}});
}

OlsFit table5_fit(std::span<const data::AnalysisRow> rows) {
  require_traits(rows, "table5");
  return ols_formula(
      rows, "resolution ~ activity_ordinal + si + ti + gender + age + glasses + dominant_ordinal",
      {{{"gender", "female"}}});
}

OlsFit table5_traits_fit(std::span<const data::AnalysisRow> rows) {
  require_traits(rows, "table5-traits");
  return ols_formula(rows,
                     "resolution ~ activity_ordinal + si + ti + gender + age + glasses + "
                     "extraversion + agreeableness + conscientiousness + neuroticism + openness",
                     {{{"gender", "female"}}});
}

LmmFit table6_fit(std::span<const data::AnalysisRow> rows) {
  require_traits(rows, "table6");
  const auto md = build_design(rows, Formula::parse("resolution ~ si*activity + si*gender + si*glasses"),
                               {{{"activity", "running"}, {"gender", "female"}}});
  return lmm_fit(md.x, md.y, dominant_groups(rows));
}

LmmFit icc_fit(std::span<const data::AnalysisRow> rows) {
  require_traits(rows, "icc");
  const auto md = build_design(rows, Formula::parse("resolution ~ 1"));
  return lmm_fit(md.x, md.y, dominant_groups(rows));
}

const std::vector<PresetInfo>& presets() {
  static const std::vector<PresetInfo> list = {
      {"eta-checkpoints", "eta-squared from the published H and k values", false},
      {"kw-activity-study1", "Kruskal-Wallis of final resolution by activity, study 1", true},
      {"kw-activity-study2", "Kruskal-Wallis of final resolution by activity, study 2", true},
      {"kw-video-study1", "Kruskal-Wallis of final resolution by video, study 1", true},
      {"kw-video-study2", "Kruskal-Wallis of final resolution by video, study 2", true},
      {"kw-personality-study2", "Kruskal-Wallis of final resolution by dominant trait", true},
      {"pearson-study1", "per-activity correlation of mean resolution with SI and TI", true},
      {"table4", "OLS: resolution ~ activity*si + activity*ti, study 1", true},
      {"table5", "OLS with ordinal activity and dominant trait, study 2", true},
      {"table5-traits", "OLS with the five trait percentiles, study 2", true},
      {"table6", "random-intercept model grouped by dominant trait, study 2", true},
      {"icc-study2", "intercept-only random-intercept model, study 2", true},
  };
  return list;
}

nlohmann::json run_preset(const std::string& name, const data::Dataset* dataset) {
  using nlohmann::json;
  json out;
  out["preset"] = name;
  if (name == "eta-checkpoints") {
    json arr = json::array();
    for (const auto& c : eta_checkpoints()) {
      arr.push_back({{"label", c.label}, {"h", c.h}, {"k", c.k}, {"n", c.n},
                     {"eta_squared", c.eta_squared}});
    }
    out["checkpoints"] = arr;
    return out;
  }
  const auto kw = [&](int study, auto fn) {
    const auto rows = study_rows(dataset, study, name);
    out["result"] = io::to_json(fn(std::span<const data::AnalysisRow>(rows)));
    return out;
  };
  if (name == "kw-activity-study1") return kw(1, kw_by_activity);
  if (name == "kw-activity-study2") return kw(2, kw_by_activity);
  if (name == "kw-video-study1") return kw(1, kw_by_video);
  if (name == "kw-video-study2") return kw(2, kw_by_video);
  if (name == "kw-personality-study2") return kw(2, kw_by_dominant);
  if (name == "table4") return kw(1, table4_fit);
  if (name == "table5") return kw(2, table5_fit);
  if (name == "table5-traits") return kw(2, table5_traits_fit);
  if (name == "table6") return kw(2, table6_fit);
  if (name == "icc-study2") return kw(2, icc_fit);
  if (name == "pearson-study1") {
    const auto rows = study_rows(dataset, 1, name);
    json res = json::object();
    for (const auto& [a, c] : pearson_by_activity(rows)) {
      res[std::string(data::to_string(a))] = {{"r_si", c.r_si}, {"r_ti", c.r_ti},
                                              {"videos", c.videos}};
    }
    out["result"] = res;
    return out;
  }
  std::string known;
  for (const auto& p : presets()) known += (known.empty() ? "" : ", ") + p.name;
  throw ValidationError("unknown preset '" + name + "' (known: " + known + ")");
}

}  // namespace resadapt::stats
