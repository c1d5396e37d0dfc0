#include "resadapt/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "resadapt/csv.hpp"
#include "resadapt/error.hpp"
#include "resadapt/parallel.hpp"

namespace resadapt::sim {

void SessionScript::validate() const {
  if (!(video.duration_s > 0.0) || !std::isfinite(video.duration_s)) {
    throw ValidationError("script duration must be positive");
  }
  if (!std::isfinite(video.si) || !std::isfinite(video.ti) || video.si < 0.0 || video.ti < 0.0) {
    throw ValidationError("script si/ti must be finite and >= 0");
  }
  if (timeline.empty() || timeline.front().t_s != 0.0) {
    throw ValidationError("script timeline must start at t = 0");
  }
  for (std::size_t i = 1; i < timeline.size(); ++i) {
    if (!(timeline[i].t_s > timeline[i - 1].t_s)) {
      throw ValidationError("script timeline times must increase strictly");
    }
  }
  if (!(timeline.back().t_s < video.duration_s)) {
    throw ValidationError("script timeline events must precede the end of the video");
  }
  if (ladder.empty()) throw ValidationError("script ladder is empty");
  for (std::size_t i = 0; i < ladder.size(); ++i) {
    if (ladder[i] <= 0 || (i > 0 && ladder[i] <= ladder[i - 1])) {
      throw ValidationError("script ladder must be positive and strictly ascending");
    }
  }
  if (viewer.percentiles) {
    for (double p : *viewer.percentiles) {
      if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("percentiles must lie in [0, 1]");
    }
  }
}

SessionScript SessionScript::from_json(const nlohmann::json& j) {
  SessionScript s;
  try {
    const auto& v = j.at("video");
    s.video.si = v.at("si").get<double>();
    s.video.ti = v.at("ti").get<double>();
    s.video.duration_s = v.value("duration_s", 60.0);
    for (const auto& e : j.at("timeline")) {
      const auto name = e.at("activity").get<std::string>();
      const auto act = data::parse_activity(name);
      if (!act) throw ValidationError("unknown activity '" + name + "' in script");
      s.timeline.push_back({e.at("t_s").get<double>(), *act});
    }
    if (j.contains("viewer")) {
      const auto& w = j.at("viewer");
      const auto g = w.value("gender", std::string("female"));
      const auto gender = data::parse_gender(g);
      if (!gender) throw ValidationError("unknown gender '" + g + "' in script");
      s.viewer.gender = *gender;
      if (w.contains("age") && !w.at("age").is_null()) s.viewer.age = w.at("age").get<double>();
      if (w.contains("glasses") && !w.at("glasses").is_null()) {
        s.viewer.glasses = w.at("glasses").get<bool>();
      }
      if (w.contains("personality") && !w.at("personality").is_null()) {
        std::array<double, 5> p{};
        for (std::size_t t = 0; t < data::kTraits.size(); ++t) {
          p[t] = w.at("personality").at(std::string(data::to_string(data::kTraits[t]))).get<double>();
        }
        s.viewer.percentiles = p;
      }
    }
    s.ladder = j.at("ladder").get<std::vector<int>>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("script: ") + e.what());
  }
  s.validate();
  return s;
}

nlohmann::json SessionScript::to_json() const {
  nlohmann::json j;
  j["video"] = {{"si", video.si}, {"ti", video.ti}, {"duration_s", video.duration_s}};
  j["timeline"] = nlohmann::json::array();
  for (const auto& e : timeline) {
    j["timeline"].push_back({{"t_s", e.t_s}, {"activity", data::to_string(e.activity)}});
  }
  nlohmann::json w;
  w["gender"] = data::to_string(viewer.gender);
  if (viewer.age) w["age"] = *viewer.age;
  if (viewer.glasses) w["glasses"] = *viewer.glasses;
  if (viewer.percentiles) {
    nlohmann::json p;
    for (std::size_t t = 0; t < data::kTraits.size(); ++t) {
      p[std::string(data::to_string(data::kTraits[t]))] = (*viewer.percentiles)[t];
    }
    w["personality"] = p;
  }
  j["viewer"] = w;
  j["ladder"] = ladder;
  return j;
}

SessionScript parse_script(std::istream& in, const std::string& source) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(source + ": invalid JSON: " + e.what(), e.byte);
  }
  return SessionScript::from_json(j);
}

SessionScript load_script(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open script '" + path + "'");
  return parse_script(in, path);
}

int quantize_up(double raw, std::span<const int> ladder) {
  if (ladder.empty()) throw ValidationError("ladder is empty");
  if (std::isnan(raw)) throw ValidationError("prediction is NaN");
  for (int r : ladder) {
    if (static_cast<double>(r) >= raw) return r;
  }
  return ladder.back();
}

namespace {

predict::ViewerContext context_for(const SessionScript& s, data::Activity activity) {
  predict::ViewerContext ctx;
  ctx.activity = activity;
  ctx.si = s.video.si;
  ctx.ti = s.video.ti;
  ctx.gender = s.viewer.gender;
  ctx.age = s.viewer.age;
  ctx.glasses = s.viewer.glasses;
  if (s.viewer.percentiles) {
    data::TraitProfile profile;
    profile.percentiles = *s.viewer.percentiles;
    const auto& p = profile.percentiles;
    profile.dominant = data::kTraits[static_cast<std::size_t>(
        std::max_element(p.begin(), p.end()) - p.begin())];
    ctx.traits = profile;
  }
  return ctx;
}

void check_model(const predict::Regressor& model, const predict::FeatureOptions& features) {
  const auto expected = predict::feature_names(features).size();
  if (model.feature_count() != expected) {
    throw ValidationError("model expects " + std::to_string(model.feature_count()) +
                          " features but the feature options produce " +
                          std::to_string(expected));
  }
}

}  // namespace

SessionResult run_session(const SessionScript& script, const predict::Regressor& model,
                          const predict::FeatureOptions& features, double min_dwell_s) {
  script.validate();
  check_model(model, features);
  if (!(min_dwell_s >= 0.0)) throw ValidationError("min_dwell_s must be >= 0");

  SessionResult out;
  int current = 0;
  double segment_start = 0.0;
  double last_switch = 0.0;
  for (std::size_t i = 0; i < script.timeline.size(); ++i) {
    const auto& ev = script.timeline[i];
    const auto x = predict::encode_features(context_for(script, ev.activity), features);
    const double raw = model.predict(x);
    const int chosen = quantize_up(raw, script.ladder);
    bool applied = false;
    if (i == 0) {
      current = chosen;
      applied = true;
    } else if (chosen != current && ev.t_s - last_switch >= min_dwell_s) {
      out.trace.append(current, ev.t_s - segment_start);
      current = chosen;
      segment_start = ev.t_s;
      last_switch = ev.t_s;
      applied = true;
    } else {
      applied = chosen == current;
    }
    out.decisions.push_back({ev.t_s, ev.activity, raw, chosen, applied});
  }
  out.trace.append(current, script.video.duration_s - segment_start);
  return out;
}

void write_decision_log(std::ostream& out, std::span<const PolicyDecision> decisions) {
  csv::write_row(out, {"t_s", "activity", "raw_prediction", "chosen", "applied"});
  for (const auto& d : decisions) {
    csv::write_row(out, {csv::format_double(d.t_s), std::string(data::to_string(d.activity)),
                         csv::format_double(d.raw_prediction), std::to_string(d.chosen),
                         d.applied ? "true" : "false"});
  }
}

std::string ReplayPolicy::name() const {
  switch (kind) {
    case Kind::kObserved: return "observed";
    case Kind::kEvents: return "events";
    case Kind::kModel: return "model";
    case Kind::kFixed: return "fixed-" + std::to_string(fixed_resolution);
  }
  return "unknown";
}

ReplayReport replay_study(const data::Dataset& dataset, const ReplayPolicy& policy,
                          const energy::EnergyCalibration& calibration, int baseline_resolution,
                          const ReplayOptions& options) {
  calibration.validate();
  if (!(options.duration_s > 0.0)) throw ValidationError("replay duration must be positive");
  if (policy.kind == ReplayPolicy::Kind::kModel) {
    if (!policy.model) throw ValidationError("model policy without a model");
    check_model(*policy.model, policy.features);
  }
  if (policy.kind == ReplayPolicy::Kind::kFixed && !calibration.covers(policy.fixed_resolution)) {
    throw ValidationError("calibration has no entry for the fixed policy resolution " +
                          std::to_string(policy.fixed_resolution) + "p");
  }
  if (!calibration.covers(baseline_resolution)) {
    throw ValidationError("calibration has no entry for the baseline resolution " +
                          std::to_string(baseline_resolution) + "p");
  }
  const auto& sessions = dataset.sessions();
  for (const auto& s : sessions) {
    for (int r : data::ladder(s.study)) {
      if (!calibration.covers(r)) {
        throw ValidationError("calibration is missing ladder entry " + std::to_string(r) +
                              "p of study " + std::to_string(s.study));
      }
    }
  }

  std::vector<data::AnalysisRow> rows;
  if (policy.kind == ReplayPolicy::Kind::kModel) rows = data::analysis_rows(dataset);

  std::vector<std::size_t> order(sessions.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& x = sessions[a];
    const auto& y = sessions[b];
    return std::tie(x.participant_id, x.video_id, x.activity) <
           std::tie(y.participant_id, y.video_id, y.activity);
  });

  const std::string policy_name = policy.name();
  const std::string base_name = "fixed-" + std::to_string(baseline_resolution);
  const double duration = options.duration_s;
  const double duration_ms = duration * 1000.0;

  ReplayReport report;
  report.policy = policy_name;
  report.baseline = base_name;
  report.sessions.resize(order.size());
  parallel_for(order.size(), options.threads, [&](std::size_t k) {
    const auto& s = sessions[order[k]];
    energy::PlaybackTrace trace;
    switch (policy.kind) {
      case ReplayPolicy::Kind::kObserved:
        trace.append(data::final_resolution(s), duration);
        break;
      case ReplayPolicy::Kind::kFixed:
        trace.append(policy.fixed_resolution, duration);
        break;
      case ReplayPolicy::Kind::kModel: {
        const auto x = predict::encode_features(
            predict::ViewerContext::from_row(rows[order[k]]), policy.features);
        trace.append(quantize_up(policy.model->predict(x), data::ladder(s.study)), duration);
        break;
      }
      case ReplayPolicy::Kind::kEvents: {
        int current = s.start_resolution;
        double start_ms = 0.0;
        for (const auto& e : s.events) {
          const double t = static_cast<double>(e.t_ms);
          if (t >= duration_ms) break;
          if (t > start_ms) trace.append(current, (t - start_ms) / 1000.0);
          current = e.new_resolution;
          start_ms = std::max(start_ms, t);
        }
        trace.append(current, (duration_ms - start_ms) / 1000.0);
        break;
      }
    }
    std::map<std::string, energy::PlaybackTrace> traces;
    traces[policy_name] = trace;
    traces[base_name] = energy::PlaybackTrace({{baseline_resolution, duration}});
    auto& out = report.sessions[k];
    out.participant_id = s.participant_id;
    out.video_id = s.video_id;
    out.activity = s.activity;
    out.report = energy::compare_policies(traces, base_name, calibration);
    out.trace = std::move(trace);
  });

  double total_policy = 0.0, total_base = 0.0;
  for (const auto& s : report.sessions) {
    total_policy += s.report.policies.at(policy_name).energy_mwh;
    total_base += s.report.policies.at(base_name).energy_mwh;
  }
  report.aggregate.baseline = base_name;
  report.aggregate.diagnostics = calibration.diagnostics();
  report.aggregate.policies[base_name] = {total_base, 0.0};
  report.aggregate.policies[policy_name] = {
      total_policy, report.sessions.empty() ? 0.0 : energy::savings_percent(total_base, total_policy)};
  return report;
}

}  // namespace resadapt::sim
