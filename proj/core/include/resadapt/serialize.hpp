#pragma once

// Canonical JSON for results and saved models.

#include <filesystem>
#include <memory>
#include <string>
#include <variant>

#include <nlohmann/json.hpp>

#include "resadapt/energy.hpp"
#include "resadapt/predictor.hpp"
#include "resadapt/regression.hpp"
#include "resadapt/simulator.hpp"
#include "resadapt/stats.hpp"
#include "resadapt/video.hpp"

namespace resadapt::io {

/// Keys sorted, floats as %.17g, two-space indent, trailing newline.
/// Throws ValidationError on NaN or infinity.
std::string canonical_json(const nlohmann::json& j);

nlohmann::json to_json(const video::SiTiProfile& p, video::Aggregate agg,
                       const video::SiTiThresholds& thresholds);
nlohmann::json to_json(const stats::KwResult& r);
nlohmann::json to_json(const stats::OlsFit& fit);
nlohmann::json to_json(const stats::LmmFit& fit);
nlohmann::json to_json(const predict::Metrics& m);
nlohmann::json to_json(const predict::EvalMetrics& m);
nlohmann::json to_json(const energy::EnergyReport& r);
nlohmann::json to_json(const sim::ReplayReport& r);
nlohmann::json to_json(const sim::SessionResult& r);
nlohmann::json to_json(const energy::PlaybackTrace& t);
nlohmann::json to_json(const predict::FeatureOptions& f);
predict::FeatureOptions feature_options_from_json(const nlohmann::json& j);

/// A trained model together with the feature layout it expects.
struct ModelFile {
  predict::FeatureOptions features;
  std::variant<predict::ForestModel, predict::MeanRegressor> model;

  const predict::Regressor& regressor() const;
  std::string kind() const;
};

inline constexpr int kModelFormatVersion = 1;

nlohmann::json to_json(const ModelFile& m);
/// Throws ParseError/ValidationError on malformed or mismatched content.
ModelFile model_from_json(const nlohmann::json& j);
ModelFile load_model(const std::filesystem::path& path);

/// Reads a JSON document; syntax errors become ParseError with the byte offset.
nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace resadapt::io
