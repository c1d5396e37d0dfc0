#include "resadapt/energy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "resadapt/csv.hpp"
#include "resadapt/error.hpp"
#include "resadapt/numeric.hpp"

namespace resadapt::energy {

PlaybackTrace::PlaybackTrace(std::vector<Segment> segments) {
  for (const auto& s : segments) append(s.resolution, s.duration_s);
}

void PlaybackTrace::append(int resolution, double duration_s) {
  if (!(duration_s > 0.0) || !std::isfinite(duration_s)) {
    throw ValidationError("trace segment duration must be positive and finite");
  }
  if (resolution <= 0) throw ValidationError("trace segment resolution must be positive");
  if (!segments_.empty() && segments_.back().resolution == resolution) {
    segments_.back().duration_s += duration_s;
  } else {
    segments_.push_back({resolution, duration_s});
  }
}

void PlaybackTrace::append(const PlaybackTrace& other) {
  for (const auto& s : other.segments_) append(s.resolution, s.duration_s);
}

double PlaybackTrace::total_duration() const {
  std::vector<double> d;
  d.reserve(segments_.size());
  for (const auto& s : segments_) d.push_back(s.duration_s);
  return pairwise_sum(d);
}

void EnergyCalibration::validate() const {
  if (!(voltage > 0.0) || !std::isfinite(voltage)) {
    throw ValidationError("calibration voltage must be positive");
  }
  if (!(idle_ma >= 0.0) || !std::isfinite(idle_ma)) {
    throw ValidationError("calibration idle current must be >= 0");
  }
  if (current_ma.empty()) throw ValidationError("calibration has no entries");
  for (const auto& [res, ma] : current_ma) {
    if (res <= 0) throw ValidationError("calibration resolution must be positive");
    if (!(ma > 0.0) || !std::isfinite(ma)) {
      throw ValidationError("calibration current for " + std::to_string(res) +
                            "p must be positive");
    }
  }
}

bool EnergyCalibration::monotone() const { return diagnostics().empty(); }

std::vector<std::string> EnergyCalibration::diagnostics() const {
  std::vector<std::string> out;
  const std::pair<const int, double>* prev = nullptr;
  for (const auto& entry : current_ma) {
    if (prev && entry.second < prev->second) {
      out.push_back("non-monotone: " + std::to_string(entry.first) + "p draws " +
                    csv::format_double(entry.second) + " mA, less than " +
                    std::to_string(prev->first) + "p (" + csv::format_double(prev->second) +
                    " mA)");
    }
    prev = &entry;
  }
  return out;
}

double EnergyCalibration::current(int resolution) const {
  const auto it = current_ma.find(resolution);
  if (it == current_ma.end()) {
    throw ValidationError("calibration has no entry for " + std::to_string(resolution) + "p");
  }
  return it->second;
}

namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

double parse_meta_double(const std::string& source, const std::string& key,
                         const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ValidationError(source + ": '" + key + "' is not a number: '" + value + "'");
  }
}

}  // namespace

EnergyCalibration parse_calibration(std::istream& in, const std::string& source) {
  const auto table = csv::parse(in, source);
  EnergyCalibration cal;
  bool have_voltage = false;
  for (const auto& c : table.comments) {
    const auto colon = c.find(':');
    if (colon == std::string::npos) continue;
    const auto key = trim(c.substr(0, colon));
    const auto value = trim(c.substr(colon + 1));
    if (key == "codec_tag") {
      cal.codec_tag = value;
    } else if (key == "voltage") {
      cal.voltage = parse_meta_double(source, key, value);
      have_voltage = true;
    } else if (key == "idle_ma") {
      cal.idle_ma = parse_meta_double(source, key, value);
    }
  }
  if (!have_voltage) throw ValidationError(source + ": missing '# voltage:' line");
  table.require_columns({"resolution", "current_ma"});
  const auto rc = *table.column("resolution");
  const auto cc = *table.column("current_ma");
  for (const auto& row : table.rows) {
    if (row.fields.size() != table.header.size()) {
      throw RowError(source, row.line, "expected " + std::to_string(table.header.size()) +
                                           " fields, got " + std::to_string(row.fields.size()));
    }
    const auto res = static_cast<int>(csv::parse_int(table, row, row.fields[rc], "resolution"));
    const double ma = csv::parse_double(table, row, row.fields[cc], "current_ma");
    if (res <= 0) throw RowError(source, row.line, "resolution must be positive");
    if (!(ma > 0.0)) throw RowError(source, row.line, "current_ma must be positive");
    if (!cal.current_ma.emplace(res, ma).second) {
      throw RowError(source, row.line, "duplicate resolution " + std::to_string(res));
    }
  }
  cal.validate();
  return cal;
}

EnergyCalibration load_calibration(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open calibration file '" + path.string() + "'");
  return parse_calibration(in, path.string());
}

void write_calibration(std::ostream& out, const EnergyCalibration& cal) {
  cal.validate();
  out << "# codec_tag: " << cal.codec_tag << "\n";
  out << "# voltage: " << csv::format_double(cal.voltage) << "\n";
  out << "# idle_ma: " << csv::format_double(cal.idle_ma) << "\n";
  out << "resolution,current_ma\n";
  for (const auto& [res, ma] : cal.current_ma) {
    out << res << "," << csv::format_double(ma) << "\n";
  }
}

double estimate_energy(const PlaybackTrace& trace, const EnergyCalibration& cal) {
  cal.validate();
  if (trace.empty()) return 0.0;
  // Split as I_min * T + sum d * (I - I_min): traces of equal length under a
  // flat calibration come out bit-identical.
  double i_min = cal.current(trace.segments().front().resolution);
  for (const auto& s : trace.segments()) i_min = std::min(i_min, cal.current(s.resolution));
  std::vector<double> excess;
  excess.reserve(trace.segments().size());
  for (const auto& s : trace.segments()) {
    excess.push_back(s.duration_s * (cal.current(s.resolution) - i_min));
  }
  const double charge_mas = (i_min + cal.idle_ma) * trace.total_duration() + pairwise_sum(excess);
  return charge_mas * cal.voltage / 3600.0;
}

double savings_percent(double baseline_mwh, double policy_mwh) {
  if (baseline_mwh == policy_mwh) return 0.0;
  if (!(baseline_mwh > 0.0)) throw ValidationError("baseline energy must be positive");
  return 100.0 * (baseline_mwh - policy_mwh) / baseline_mwh;
}

EnergyReport compare_policies(const std::map<std::string, PlaybackTrace>& traces,
                              const std::string& baseline, const EnergyCalibration& cal) {
  const auto base_it = traces.find(baseline);
  if (base_it == traces.end()) {
    throw ValidationError("baseline policy '" + baseline + "' not among the traces");
  }
  const double base_duration = base_it->second.total_duration();
  for (const auto& [name, trace] : traces) {
    const double d = trace.total_duration();
    if (std::fabs(d - base_duration) > 1e-9 * std::max(1.0, base_duration)) {
      throw ValidationError("policy '" + name + "' covers " + csv::format_double(d) +
                            " s but the baseline covers " + csv::format_double(base_duration) +
                            " s");
    }
  }
  EnergyReport report;
  report.baseline = baseline;
  report.diagnostics = cal.diagnostics();
  const double e_base = estimate_energy(base_it->second, cal);
  for (const auto& [name, trace] : traces) {
    const double e = estimate_energy(trace, cal);
    report.policies[name] = {e, savings_percent(e_base, e)};
  }
  return report;
}

}  // namespace resadapt::energy
