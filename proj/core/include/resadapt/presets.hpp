#pragma once

// Named analyses over the study data with pinned encodings and reference
// levels.

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "resadapt/dataset.hpp"
#include "resadapt/regression.hpp"
#include "resadapt/stats.hpp"

namespace resadapt::stats {

struct EtaCheckpoint {
  std::string label;
  double h = 0.0;
  int k = 0;
  std::size_t n = 0;
  double eta_squared = 0.0;
};

/// The four published H/k pairs with the session counts implied by the study
/// designs (264 sessions in study 1, 276 in study 2).
std::vector<EtaCheckpoint> eta_checkpoints();

/// Kruskal-Wallis with one group per level present in the rows.
KwResult kw_by_activity(std::span<const data::AnalysisRow> rows);
KwResult kw_by_video(std::span<const data::AnalysisRow> rows);
/// Throws ValidationError when a row has no personality data.
KwResult kw_by_dominant(std::span<const data::AnalysisRow> rows);

struct ActivityCorrelation {
  double r_si = 0.0;
  double r_ti = 0.0;
  std::size_t videos = 0;
};

/// Per activity: Pearson r between each video's mean final resolution and
/// the video's SI (and TI).
std::map<data::Activity, ActivityCorrelation> pearson_by_activity(
    std::span<const data::AnalysisRow> rows);

/// resolution ~ activity*si + activity*ti, reference activity still.
OlsFit table4_fit(std::span<const data::AnalysisRow> rows);
/// resolution ~ activity_ordinal + si + ti + gender + age + glasses +
/// dominant_ordinal, reference gender female.
OlsFit table5_fit(std::span<const data::AnalysisRow> rows);
/// As table5_fit with the five trait percentiles instead of the dominant trait.
OlsFit table5_traits_fit(std::span<const data::AnalysisRow> rows);
/// resolution ~ si*activity + si*gender + si*glasses with a random intercept
/// per dominant trait; references running and female.
LmmFit table6_fit(std::span<const data::AnalysisRow> rows);
/// Intercept-only model grouped by dominant trait.
LmmFit icc_fit(std::span<const data::AnalysisRow> rows);

struct PresetInfo {
  std::string name;
  std::string description;
  bool needs_dataset = true;
};

const std::vector<PresetInfo>& presets();

/// Runs a preset and returns its JSON result. `dataset` may be null only for
/// presets that need no data. Throws ValidationError on an unknown preset or
/// a dataset that lacks the required study.
nlohmann::json run_preset(const std::string& name, const data::Dataset* dataset);

}  // namespace resadapt::stats
