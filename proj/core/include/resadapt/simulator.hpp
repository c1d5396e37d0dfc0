#pragma once

// Scripted playback sessions driven by a resolution predictor, and study
// replays under alternative policies.

#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "resadapt/dataset.hpp"
#include "resadapt/energy.hpp"
#include "resadapt/predictor.hpp"

namespace resadapt::sim {

struct ContextEvent {
  double t_s = 0.0;
  data::Activity activity = data::Activity::kStill;
};

struct ScriptVideo {
  double si = 0.0;
  double ti = 0.0;
  double duration_s = 60.0;
};

struct ScriptViewer {
  data::Gender gender = data::Gender::kFemale;
  std::optional<double> age;
  std::optional<bool> glasses;
  /// Trait percentiles in [0, 1]; the dominant trait is their argmax.
  std::optional<std::array<double, 5>> percentiles;
};

/// JSON form:
///   {"video": {"si": 60, "ti": 15, "duration_s": 60},
///    "timeline": [{"t_s": 0, "activity": "still"}, {"t_s": 20, "activity": "walking"}],
///    "viewer": {"gender": "female", "age": 24, "glasses": false,
///               "personality": {"extraversion": 0.5, "agreeableness": 0.3, ...}},
///    "ladder": [360, 480, 720, 1080]}
/// "age", "glasses" and "personality" are optional.
struct SessionScript {
  ScriptVideo video;
  std::vector<ContextEvent> timeline;
  ScriptViewer viewer;
  std::vector<int> ladder;

  /// Throws ValidationError: timeline must start at 0, increase strictly and
  /// stay below the duration; the ladder must be non-empty, positive and
  /// strictly ascending.
  void validate() const;

  static SessionScript from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

SessionScript parse_script(std::istream& in, const std::string& source);
SessionScript load_script(const std::string& path);

/// Smallest ladder value >= raw; the ladder maximum when raw exceeds it.
int quantize_up(double raw, std::span<const int> ladder);

struct PolicyDecision {
  double t_s = 0.0;
  data::Activity activity = data::Activity::kStill;
  double raw_prediction = 0.0;
  int chosen = 0;        // ceiling-quantized prediction
  bool applied = false;  // false when the dwell rule held the previous resolution
};

struct SessionResult {
  energy::PlaybackTrace trace;
  std::vector<PolicyDecision> decisions;
};

/// At t = 0 and at every context event the model predicts a resolution,
/// which is snapped up to the ladder. A change is applied only when at least
/// min_dwell_s seconds have passed since the last switch. Throws
/// ValidationError when the model's feature count does not match `features`.
SessionResult run_session(const SessionScript& script, const predict::Regressor& model,
                          const predict::FeatureOptions& features, double min_dwell_s = 10.0);

/// Columns: t_s,activity,raw_prediction,chosen,applied.
void write_decision_log(std::ostream& out, std::span<const PolicyDecision> decisions);

struct ReplayPolicy {
  enum class Kind { kObserved, kEvents, kModel, kFixed };
  Kind kind = Kind::kObserved;
  int fixed_resolution = 0;
  const predict::Regressor* model = nullptr;
  predict::FeatureOptions features;

  /// Final resolution held for the whole session.
  static ReplayPolicy observed() { return {}; }
  /// Start resolution and each logged switch at its timestamp.
  static ReplayPolicy events() { return {Kind::kEvents, 0, nullptr, {}}; }
  static ReplayPolicy fixed(int resolution) { return {Kind::kFixed, resolution, nullptr, {}}; }
  /// One prediction per session, snapped up to the study ladder.
  static ReplayPolicy from_model(const predict::Regressor& m, predict::FeatureOptions f) {
    return {Kind::kModel, 0, &m, f};
  }

  std::string name() const;
};

struct ReplayOptions {
  double duration_s = 60.0;
  unsigned threads = 1;
};

struct SessionReplay {
  std::string participant_id;
  std::string video_id;
  data::Activity activity = data::Activity::kStill;
  energy::PlaybackTrace trace;
  energy::EnergyReport report;
};

struct ReplayReport {
  std::string policy;
  std::string baseline;
  std::vector<SessionReplay> sessions;  // sorted by (participant, video, activity)
  energy::EnergyReport aggregate;       // summed energies
};

/// Builds one trace per session, compares it against fixed(baseline) and
/// sums the energies. Throws ValidationError when the calibration misses a
/// ladder entry of a replayed study or the baseline resolution.
ReplayReport replay_study(const data::Dataset& dataset, const ReplayPolicy& policy,
                          const energy::EnergyCalibration& calibration, int baseline_resolution,
                          const ReplayOptions& options = {});

}  // namespace resadapt::sim
