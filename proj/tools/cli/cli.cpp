#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include "resadapt/csv.hpp"
#include "resadapt/energy.hpp"
#include "resadapt/error.hpp"
#include "resadapt/predictor.hpp"
#include "resadapt/presets.hpp"
#include "resadapt/serialize.hpp"
#include "resadapt/simulator.hpp"
#include "resadapt/video.hpp"

namespace resadapt::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kExtrapolationNote =
    "per-context-event adaptation is an extrapolation; the study models predict one final "
    "resolution per session";

void emit(const std::string& text, const std::string& path, bool force, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  if (fs::exists(path) && !force) {
    throw ValidationError("refusing to overwrite '" + path + "' (pass --force)");
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write '" + path + "'");
  f << text;
  if (!f) throw IoError("failed writing '" + path + "'");
}

fs::path dataset_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("RESADAPT_DATA"); env && *env) return env;
  throw ValidationError("no dataset directory: pass --data or set RESADAPT_DATA");
}

data::Dataset load_dataset(const std::string& flag) {
  const auto dir = dataset_dir(flag);
  if (!fs::is_directory(dir)) throw IoError("dataset directory '" + dir.string() + "' not found");
  return data::ingest(data::DatasetPaths::in_directory(dir));
}

std::vector<data::AnalysisRow> study_rows(const data::Dataset& ds, int study) {
  auto rows = data::analysis_rows(ds.filter_study(study));
  if (rows.empty()) {
    throw ValidationError("the dataset has no study-" + std::to_string(study) + " sessions");
  }
  return rows;
}

video::Aggregate parse_aggregate(const std::string& s) {
  if (s == "mean") return video::Aggregate::kMean;
  if (s == "max") return video::Aggregate::kMax;
  throw ValidationError("--agg must be mean or max");
}

struct ModelFlags {
  int study = 2;
  std::string model = "forest";
  std::optional<std::uint64_t> seed;
  int trees = 100;
  std::optional<int> max_depth;
  std::size_t min_leaf = 2;
  std::optional<std::size_t> mtry;
  bool no_bootstrap = false;
  bool no_ti = false;
  bool no_age = false;
  bool no_glasses = false;
  bool no_personality = false;

  void add(CLI::App* app) {
    app->add_option("--study", study, "Study whose sessions are used")->check(CLI::IsMember({1, 2}));
    app->add_option("--seed", seed, "Master seed (required)");
    app->add_option("--trees", trees, "Number of trees");
    app->add_option("--max-depth", max_depth, "Maximum tree depth (unbounded when absent)");
    app->add_option("--min-leaf", min_leaf, "Minimum rows per leaf");
    app->add_option("--mtry", mtry, "Features tried per split (default ceil(sqrt(p)))");
    app->add_flag("--no-bootstrap", no_bootstrap, "Train every tree on all rows");
    app->add_flag("--no-ti", no_ti, "Drop TI from the features");
    app->add_flag("--no-age", no_age, "Drop age from the features");
    app->add_flag("--no-glasses", no_glasses, "Drop glasses from the features");
    app->add_flag("--no-personality", no_personality, "Drop personality features");
  }

  predict::FeatureOptions features() const {
    return {!no_ti, !no_age, !no_glasses, !no_personality};
  }

  predict::ForestParams forest(unsigned threads) const {
    predict::ForestParams p;
    p.n_trees = trees;
    p.tree.max_depth = max_depth;
    p.tree.min_leaf = min_leaf;
    p.tree.feature_subset = mtry;
    p.bootstrap = !no_bootstrap;
    p.threads = threads;
    return p;
  }

  std::uint64_t require_seed(const std::string& cmd) const {
    if (!seed) throw ValidationError(cmd + " requires an explicit --seed");
    return *seed;
  }
};

energy::PlaybackTrace parse_trace_arg(const std::string& spec) {
  // "360:30,720:30" inline, otherwise a JSON file holding segment objects.
  if (spec.find(':') != std::string::npos && !fs::exists(spec)) {
    energy::PlaybackTrace t;
    std::stringstream ss(spec);
    std::string seg;
    while (std::getline(ss, seg, ',')) {
      const auto colon = seg.find(':');
      if (colon == std::string::npos) throw ValidationError("bad trace segment '" + seg + "'");
      try {
        t.append(std::stoi(seg.substr(0, colon)), std::stod(seg.substr(colon + 1)));
      } catch (const std::logic_error&) {
        throw ValidationError("bad trace segment '" + seg + "'");
      }
    }
    return t;
  }
  const auto j = io::read_json_file(spec);
  energy::PlaybackTrace t;
  try {
    const auto& segs = j.is_object() ? j.at("trace") : j;
    for (const auto& s : segs) t.append(s.at("resolution").get<int>(), s.at("duration_s").get<double>());
  } catch (const json::exception& e) {
    throw ValidationError("malformed trace file '" + spec + "': " + e.what());
  }
  return t;
}

sim::ReplayPolicy parse_policy(const std::string& s, const io::ModelFile* model) {
  if (s == "observed") return sim::ReplayPolicy::observed();
  if (s == "events") return sim::ReplayPolicy::events();
  if (s == "model") {
    if (!model) throw ValidationError("--policy model needs --model");
    return sim::ReplayPolicy::from_model(model->regressor(), model->features);
  }
  if (s.rfind("fixed:", 0) == 0) {
    try {
      return sim::ReplayPolicy::fixed(std::stoi(s.substr(6)));
    } catch (const std::logic_error&) {
    }
  }
  throw ValidationError("--policy must be observed, events, model or fixed:<lines>");
}

void fold_csv(std::ostream& out, const std::string& model, const predict::EvalMetrics& m) {
  for (const auto& f : m.folds) {
    csv::write_row(out, {model, f.viewer, std::to_string(f.n), csv::format_double(f.metrics.accuracy),
                         csv::format_double(f.metrics.mae), csv::format_double(f.metrics.rmse)});
  }
}

}  // namespace

void write_figure_csv(const std::string& family, const data::Dataset& ds, std::ostream& out) {
  const auto rows = data::analysis_rows(ds);
  const auto& sessions = ds.sessions();
  if (family == "fig3") {
    csv::write_row(out, {"study", "participant_id", "video_id", "activity", "final_resolution"});
    for (const auto& r : rows) {
      csv::write_row(out, {std::to_string(r.study), r.participant_id, r.video_id,
                           std::string(data::to_string(r.activity)),
                           std::to_string(r.final_resolution)});
    }
  } else if (family == "fig4") {
    csv::write_row(out, {"study", "participant_id", "video_id", "activity", "t_s",
                         "from_resolution", "to_resolution"});
    for (const auto& s : sessions) {
      int prev = s.start_resolution;
      for (const auto& e : s.events) {
        csv::write_row(out, {std::to_string(s.study), s.participant_id, s.video_id,
                             std::string(data::to_string(s.activity)),
                             csv::format_double(static_cast<double>(e.t_ms) / 1000.0),
                             std::to_string(prev), std::to_string(e.new_resolution)});
        prev = e.new_resolution;
      }
    }
  } else if (family == "fig9") {
    csv::write_row(out, {"study", "participant_id", "video_id", "dominant", "si", "final_resolution"});
    for (const auto& r : rows) {
      if (!r.traits) continue;
      csv::write_row(out, {std::to_string(r.study), r.participant_id, r.video_id,
                           std::string(data::to_string(r.traits->dominant)),
                           csv::format_double(r.si), std::to_string(r.final_resolution)});
    }
  } else if (family == "fig10" || family == "fig11") {
    const bool by_activity = family == "fig11";
    std::vector<std::string> header = {"study", "participant_id", "video_id", "gender"};
    if (by_activity) header.emplace_back("activity");
    header.insert(header.end(), {"si", "final_resolution"});
    csv::write_row(out, header);
    for (const auto& r : rows) {
      std::vector<std::string> f = {std::to_string(r.study), r.participant_id, r.video_id,
                                    std::string(data::to_string(r.gender))};
      if (by_activity) f.emplace_back(data::to_string(r.activity));
      f.insert(f.end(), {csv::format_double(r.si), std::to_string(r.final_resolution)});
      csv::write_row(out, f);
    }
  } else {
    throw ValidationError("unknown report family '" + family + "' (fig3, fig4, fig9, fig10, fig11)");
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Context-aware mobile video resolution analysis", "resadapt"};
  app.require_subcommand(1);
  app.fallthrough();  // global options may follow the subcommand
  unsigned threads = 1;
  app.add_option("--threads", threads, "Worker cap (0 = all cores)");

  std::string output;
  bool force = false;
  const auto add_output = [&](CLI::App* sub) {
    sub->add_option("-o,--output", output, "Output file (default stdout)");
    sub->add_flag("--force", force, "Overwrite an existing output file");
  };
  std::string data_dir;
  const auto add_data = [&](CLI::App* sub) {
    sub->add_option("--data", data_dir, "Dataset directory (default $RESADAPT_DATA)");
  };

  // siti
  auto* siti = app.add_subcommand("siti", "Spatial and temporal information of a video");
  std::string video_path, agg_name = "mean", raw_geometry, raw_chroma = "420";
  double raw_fps = 30.0;
  video::SiTiThresholds thresholds;
  siti->add_option("video", video_path, "Y4M file (or raw planar with --raw)")->required();
  siti->add_option("--agg", agg_name, "Aggregate used for the category: mean or max");
  siti->add_option("--raw", raw_geometry, "Read raw planar YUV of WIDTHxHEIGHT");
  siti->add_option("--raw-chroma", raw_chroma, "Raw chroma subsampling: 420, 422, 444");
  siti->add_option("--fps", raw_fps, "Raw frame rate");
  siti->add_option("--si-low", thresholds.si_low);
  siti->add_option("--si-high", thresholds.si_high);
  siti->add_option("--ti-low", thresholds.ti_low);
  siti->add_option("--ti-high", thresholds.ti_high);
  add_output(siti);

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Validate a dataset and optionally re-export it");
  std::string export_dir;
  add_data(ingest);
  ingest->add_option("--export", export_dir, "Write canonical CSVs to this directory");
  ingest->add_flag("--force", force, "Allow exporting into a non-empty directory");

  // stats
  auto* stats_cmd = app.add_subcommand("stats", "Run a statistics preset");
  std::string preset;
  bool list_presets = false;
  stats_cmd->add_option("--preset", preset, "Preset name");
  stats_cmd->add_flag("--list", list_presets, "List presets");
  add_data(stats_cmd);
  add_output(stats_cmd);

  // train
  auto* train = app.add_subcommand("train", "Train a resolution predictor");
  ModelFlags train_flags;
  train_flags.add(train);
  train->add_option("--model", train_flags.model, "forest or mean")
      ->check(CLI::IsMember({"forest", "mean"}));
  add_data(train);
  add_output(train);

  // eval
  auto* eval = app.add_subcommand("eval", "Leave-one-viewer-out evaluation");
  ModelFlags eval_flags;
  eval_flags.add(eval);
  bool loocv = true, per_personality = false;
  std::string format = "json";
  eval->add_option("--model", eval_flags.model, "forest, mean or both")
      ->check(CLI::IsMember({"forest", "mean", "both"}));
  eval->add_flag("--loocv", loocv, "Leave-one-viewer-out (the only scheme)");
  eval->add_flag("--per-personality", per_personality, "Separate runs per dominant trait");
  eval->add_option("--format", format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
  add_data(eval);
  add_output(eval);

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Scripted session or study replay");
  std::string script_path, model_path, log_path, calibration_path, policy_name;
  double min_dwell = 10.0, duration = 60.0;
  int baseline = 1080;
  bool replay = false;
  simulate->add_option("--script", script_path, "Session script JSON");
  simulate->add_option("--model", model_path, "Model JSON from train");
  simulate->add_option("--min-dwell", min_dwell, "Seconds between switches");
  simulate->add_option("--log", log_path, "Decision log CSV");
  simulate->add_option("--calibration", calibration_path, "Energy calibration CSV");
  simulate->add_option("--baseline", baseline, "Fixed baseline resolution");
  simulate->add_flag("--replay", replay, "Replay the study sessions");
  simulate->add_option("--policy", policy_name, "observed, events, model or fixed:<lines>");
  simulate->add_option("--duration", duration, "Replay session length in seconds");
  add_data(simulate);
  add_output(simulate);

  // energy
  auto* energy_cmd = app.add_subcommand("energy", "Energy of playback traces");
  std::vector<std::string> trace_args;
  std::string energy_baseline;
  energy_cmd->add_option("--calibration", calibration_path, "Energy calibration CSV")->required();
  energy_cmd->add_option("--trace", trace_args, "NAME=360:30,720:30 or NAME=trace.json");
  energy_cmd->add_option("--baseline", energy_baseline, "Name of the baseline trace");
  add_output(energy_cmd);

  // report
  auto* report = app.add_subcommand("report", "Tidy CSV for figure families");
  std::string family;
  report->add_option("family", family, "fig3, fig4, fig9, fig10 or fig11")->required();
  add_data(report);
  add_output(report);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kValidation;
  }

  try {
    if (siti->parsed()) {
      const auto agg = parse_aggregate(agg_name);
      thresholds.validate();
      video::VideoSequence seq = [&] {
        if (raw_geometry.empty()) return video::read_y4m_file(video_path);
        const auto x = raw_geometry.find('x');
        if (x == std::string::npos) throw ValidationError("--raw expects WIDTHxHEIGHT");
        const auto chroma = video::chroma_format_from_tag(raw_chroma);
        if (!chroma) throw ValidationError("--raw-chroma must be 420, 422 or 444");
        std::ifstream in(video_path, std::ios::binary);
        if (!in) throw IoError("cannot open '" + video_path + "'");
        int w = 0, h = 0;
        try {
          w = std::stoi(raw_geometry.substr(0, x));
          h = std::stoi(raw_geometry.substr(x + 1));
        } catch (const std::logic_error&) {
          throw ValidationError("--raw expects WIDTHxHEIGHT");
        }
        return video::parse_raw_planar(in, w, h, *chroma, raw_fps);
      }();
      const auto profile = video::compute_siti(seq, {threads});
      emit(io::canonical_json(io::to_json(profile, agg, thresholds)), output, force, out);
    } else if (ingest->parsed()) {
      const auto ds = load_dataset(data_dir);
      json summary;
      for (int study : {1, 2}) {
        const auto sub = ds.filter_study(study);
        summary["study" + std::to_string(study)] = {{"participants", sub.participants().size()},
                                                     {"videos", sub.videos().size()},
                                                     {"sessions", sub.sessions().size()}};
      }
      if (!export_dir.empty()) {
        if (fs::exists(export_dir) && !fs::is_empty(export_dir) && !force) {
          throw ValidationError("refusing to export into non-empty '" + export_dir +
                                "' (pass --force)");
        }
        fs::create_directories(export_dir);
        data::export_canonical(ds, export_dir);
        summary["exported_to"] = export_dir;
      }
      out << io::canonical_json(summary);
    } else if (stats_cmd->parsed()) {
      if (list_presets) {
        for (const auto& p : stats::presets()) out << p.name << "\t" << p.description << "\n";
        return kOk;
      }
      if (preset.empty()) throw ValidationError("stats needs --preset (or --list)");
      const auto it = std::find_if(stats::presets().begin(), stats::presets().end(),
                                   [&](const auto& p) { return p.name == preset; });
      std::optional<data::Dataset> ds;
      if (it != stats::presets().end() && it->needs_dataset) ds = load_dataset(data_dir);
      emit(io::canonical_json(stats::run_preset(preset, ds ? &*ds : nullptr)), output, force, out);
    } else if (train->parsed()) {
      const auto seed = train_flags.require_seed("train");
      const auto ds = load_dataset(data_dir);
      const auto rows = study_rows(ds, train_flags.study);
      const auto features = train_flags.features();
      const auto table = predict::make_features(rows, features);
      io::ModelFile file{features, predict::ForestModel{}};
      if (train_flags.model == "mean") {
        file.model = predict::MeanRegressor(table);
      } else {
        file.model = predict::train_forest(table, train_flags.forest(threads), seed);
      }
      emit(io::canonical_json(io::to_json(file)), output, force, out);
    } else if (eval->parsed()) {
      const auto seed = eval_flags.require_seed("eval");
      if (!loocv) throw ValidationError("only leave-one-viewer-out evaluation is available");
      const auto ds = load_dataset(data_dir);
      const auto rows = study_rows(ds, eval_flags.study);
      const auto features = eval_flags.features();
      const auto params = eval_flags.forest(threads);
      json result;
      result["seed"] = seed;
      result["study"] = eval_flags.study;
      result["features"] = io::to_json(features);
      std::ostringstream csv_out;
      if (format == "csv") {
        csv::write_row(csv_out, {"model", "viewer", "n", "accuracy", "mae", "rmse"});
      }
      if (per_personality) {
        const auto pe = predict::per_personality_eval(rows, features, params, seed);
        json forest = json::object(), mean = json::object();
        for (const auto& [trait, m] : pe.forest) {
          forest[trait] = io::to_json(m);
          if (format == "csv") fold_csv(csv_out, "forest/" + trait, m);
        }
        for (const auto& [trait, m] : pe.mean) {
          mean[trait] = io::to_json(m);
          if (format == "csv") fold_csv(csv_out, "mean/" + trait, m);
        }
        result["forest"] = forest;
        result["mean"] = mean;
        result["excluded"] = pe.excluded;
        result["notices"] = pe.notices;
        for (const auto& n : pe.notices) err << "notice: " << n << "\n";
      } else {
        const auto table = predict::make_features(rows, features);
        json models = json::object();
        if (eval_flags.model != "mean") {
          const auto m = predict::loocv_by_viewer(table, predict::forest_builder(params, seed));
          models["forest"] = io::to_json(m);
          if (format == "csv") fold_csv(csv_out, "forest", m);
          err << "forest accuracy " << csv::format_double(m.mean.accuracy) << "\n";
        }
        if (eval_flags.model != "forest") {
          const auto m = predict::loocv_by_viewer(table, predict::mean_builder());
          models["mean"] = io::to_json(m);
          if (format == "csv") fold_csv(csv_out, "mean", m);
          err << "mean accuracy " << csv::format_double(m.mean.accuracy) << "\n";
        }
        result["models"] = models;
      }
      emit(format == "csv" ? csv_out.str() : io::canonical_json(result), output, force, out);
    } else if (simulate->parsed()) {
      std::optional<io::ModelFile> model;
      if (!model_path.empty()) model = io::load_model(model_path);
      if (replay) {
        if (calibration_path.empty()) throw ValidationError("--replay needs --calibration");
        if (policy_name.empty()) throw ValidationError("--replay needs --policy");
        const auto cal = energy::load_calibration(calibration_path);
        const auto ds = load_dataset(data_dir);
        const auto policy = parse_policy(policy_name, model ? &*model : nullptr);
        const auto rep = sim::replay_study(ds, policy, cal, baseline, {duration, threads});
        emit(io::canonical_json(io::to_json(rep)), output, force, out);
      } else {
        if (script_path.empty() || !model) {
          throw ValidationError("simulate needs --script and --model (or --replay)");
        }
        const auto script = sim::load_script(script_path);
        const auto result = sim::run_session(script, model->regressor(), model->features, min_dwell);
        auto j = io::to_json(result);
        j["note"] = kExtrapolationNote;
        j["min_dwell_s"] = min_dwell;
        if (!calibration_path.empty()) {
          const auto cal = energy::load_calibration(calibration_path);
          const std::string base = "fixed-" + std::to_string(baseline);
          std::map<std::string, energy::PlaybackTrace> traces = {
              {"adaptive", result.trace},
              {base, energy::PlaybackTrace({{baseline, script.video.duration_s}})}};
          j["energy"] = io::to_json(energy::compare_policies(traces, base, cal));
        }
        if (!log_path.empty()) {
          std::ostringstream log;
          sim::write_decision_log(log, result.decisions);
          emit(log.str(), log_path, force, out);
        }
        emit(io::canonical_json(j), output, force, out);
      }
    } else if (energy_cmd->parsed()) {
      const auto cal = energy::load_calibration(calibration_path);
      if (trace_args.empty()) {
        json j;
        j["codec_tag"] = cal.codec_tag;
        j["voltage"] = cal.voltage;
        j["idle_ma"] = cal.idle_ma;
        j["monotone"] = cal.monotone();
        j["diagnostics"] = cal.diagnostics();
        emit(io::canonical_json(j), output, force, out);
        return kOk;
      }
      std::map<std::string, energy::PlaybackTrace> traces;
      for (const auto& t : trace_args) {
        const auto eq = t.find('=');
        if (eq == std::string::npos || eq == 0) {
          throw ValidationError("--trace expects NAME=SPEC, got '" + t + "'");
        }
        if (!traces.emplace(t.substr(0, eq), parse_trace_arg(t.substr(eq + 1))).second) {
          throw ValidationError("duplicate trace name '" + t.substr(0, eq) + "'");
        }
      }
      const auto base = energy_baseline.empty()
                            ? trace_args.front().substr(0, trace_args.front().find('='))
                            : energy_baseline;
      for (const auto& d : cal.diagnostics()) err << "diagnostic: " << d << "\n";
      emit(io::canonical_json(io::to_json(energy::compare_policies(traces, base, cal))), output,
           force, out);
    } else if (report->parsed()) {
      const auto ds = load_dataset(data_dir);
      std::ostringstream csv_out;
      write_figure_csv(family, ds, csv_out);
      emit(csv_out.str(), output, force, out);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    switch (e.kind()) {
      case ErrorKind::kValidation: return kValidation;
      case ErrorKind::kParse: return kIoOrParse;
      case ErrorKind::kConvergence: return kNonConvergence;
    }
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kIoOrParse;
  }
  return kOk;
}

}  // namespace resadapt::cli
