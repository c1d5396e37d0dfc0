#pragma once

// Playback energy from a per-resolution current calibration.

#include <filesystem>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

namespace resadapt::energy {

struct Segment {
  int resolution = 0;
  double duration_s = 0.0;

  friend bool operator==(const Segment&, const Segment&) = default;
};

/// Consecutive playback segments. Durations are positive.
class PlaybackTrace {
 public:
  PlaybackTrace() = default;
  explicit PlaybackTrace(std::vector<Segment> segments);

  /// Appends a segment, merging it into the last one when the resolution
  /// matches. Throws ValidationError on a non-positive duration.
  void append(int resolution, double duration_s);
  void append(const PlaybackTrace& other);

  const std::vector<Segment>& segments() const noexcept { return segments_; }
  double total_duration() const;
  bool empty() const noexcept { return segments_.empty(); }

  friend bool operator==(const PlaybackTrace&, const PlaybackTrace&) = default;

 private:
  std::vector<Segment> segments_;
};

struct EnergyCalibration {
  std::string codec_tag;
  double voltage = 0.0;       // volts
  double idle_ma = 0.0;       // constant draw added to every segment
  std::map<int, double> current_ma;  // resolution -> average current

  /// Throws ValidationError unless voltage > 0, idle >= 0, at least one
  /// entry, and every current > 0.
  void validate() const;
  /// True when currents never decrease with resolution.
  bool monotone() const;
  /// Human-readable notes on non-monotone steps; empty when monotone.
  std::vector<std::string> diagnostics() const;
  /// Throws ValidationError for a resolution not in the table.
  double current(int resolution) const;
  bool covers(int resolution) const { return current_ma.count(resolution) != 0; }

  friend bool operator==(const EnergyCalibration&, const EnergyCalibration&) = default;
};

/// Format:
///   # codec_tag: <text>
///   # voltage: <volts>
///   # idle_ma: <milliamperes>     (optional)
///   resolution,current_ma
///   360,300
/// Duplicate resolutions and non-positive values are errors.
EnergyCalibration parse_calibration(std::istream& in, const std::string& source);
EnergyCalibration load_calibration(const std::filesystem::path& path);
void write_calibration(std::ostream& out, const EnergyCalibration& calibration);

/// Milliwatt-hours: sum of duration_s * (I + idle) * V / 3600.
double estimate_energy(const PlaybackTrace& trace, const EnergyCalibration& calibration);

struct PolicyEnergy {
  double energy_mwh = 0.0;
  double savings_percent = 0.0;  // relative to the baseline policy
};

struct EnergyReport {
  std::string baseline;
  std::map<std::string, PolicyEnergy> policies;
  std::vector<std::string> diagnostics;
};

/// Savings are 100 * (E_baseline - E_policy) / E_baseline. Every trace must
/// cover the same total duration as the baseline.
EnergyReport compare_policies(const std::map<std::string, PlaybackTrace>& traces,
                              const std::string& baseline,
                              const EnergyCalibration& calibration);

/// Savings from already computed energies, same rule as compare_policies.
double savings_percent(double baseline_mwh, double policy_mwh);

}  // namespace resadapt::energy
