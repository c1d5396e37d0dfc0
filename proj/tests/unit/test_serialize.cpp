#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <random>

#include "fixtures.hpp"
#include "resadapt/error.hpp"
#include "resadapt/serialize.hpp"

using namespace resadapt;
using nlohmann::json;

namespace {

const predict::FeatureOptions kSlim{true, false, true, false};

// Random values under the real feature names of kSlim.
predict::FeatureTable table(std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0, 1);
  predict::FeatureTable t;
  t.names = predict::feature_names(kSlim);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < t.names.size(); ++c) t.values.push_back(u(rng));
    const double a = t.values[i * t.names.size() + 4], b = t.values[i * t.names.size() + 5];
    t.targets.push_back(300 + 500 * a * b + 0.1 / 3 * i);
    t.viewers.push_back("v" + std::to_string(i % 4));
  }
  return t;
}

}  // namespace

TEST(CanonicalJson, LayoutAndNumbers) {
  json j;
  j["zeta"] = 0.1;
  j["alpha"] = {1, 2.5, "x"};
  j["mid"] = json::object();
  j["arr"] = json::array();
  j["flag"] = true;
  j["none"] = nullptr;
  const std::string want =
      "{\n"
      "  \"alpha\": [\n"
      "    1,\n"
      "    2.5,\n"
      "    \"x\"\n"
      "  ],\n"
      "  \"arr\": [],\n"
      "  \"flag\": true,\n"
      "  \"mid\": {},\n"
      "  \"none\": null,\n"
      "  \"zeta\": 0.10000000000000001\n"
      "}\n";
  EXPECT_EQ(io::canonical_json(j), want);
}

TEST(CanonicalJson, DoublesRoundTripExactly) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 500; ++i) {
    const double v = u(rng) / 7.0;
    const json back = json::parse(io::canonical_json(json{{"v", v}}));
    EXPECT_EQ(back.at("v").get<double>(), v);
  }
}

TEST(CanonicalJson, IsIdempotent) {
  const json j = {{"b", {{"y", 1.25}, {"x", {3, 4}}}}, {"a", "s\"q"}};
  const auto once = io::canonical_json(j);
  EXPECT_EQ(io::canonical_json(json::parse(once)), once);
}

TEST(CanonicalJson, NonFiniteThrows) {
  EXPECT_THROW(io::canonical_json(json{{"x", std::nan("")}}), ValidationError);
  EXPECT_THROW(io::canonical_json(json::array({INFINITY})), ValidationError);
}

TEST(ModelFile, ForestRoundTripPredictsIdentically) {
  const auto t = table(80, 3);
  predict::ForestParams p;
  p.n_trees = 12;
  p.tree.max_depth = 5;
  p.tree.feature_subset = 1;
  io::ModelFile mf{kSlim,
                   predict::train_forest(t, p, 99)};
  const auto text = io::canonical_json(io::to_json(mf));
  const auto back = io::model_from_json(json::parse(text));
  EXPECT_EQ(back.kind(), "forest");
  EXPECT_EQ(back.features, mf.features);
  const auto& f = std::get<predict::ForestModel>(back.model);
  EXPECT_EQ(f.seed(), 99u);
  EXPECT_EQ(f.params().n_trees, 12);
  EXPECT_EQ(f.params().tree.feature_subset, 1u);
  EXPECT_EQ(f.trees().size(), 12u);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-0.5, 1.5);
  for (int i = 0; i < 300; ++i) {
    std::vector<double> x(t.cols());
    for (auto& v : x) v = u(rng);
    EXPECT_EQ(back.regressor().predict(x), mf.regressor().predict(x));
  }
  EXPECT_EQ(io::canonical_json(io::to_json(back)), text);
}

TEST(ModelFile, MeanRoundTripAndFile) {
  io::ModelFile mf{predict::FeatureOptions{}, predict::MeanRegressor(612.5, 20)};
  const auto dir = testsupport::scratch_dir("serialize");
  const auto path = dir / "mean.json";
  std::ofstream(path) << io::canonical_json(io::to_json(mf));
  const auto back = io::load_model(path);
  EXPECT_EQ(back.kind(), "mean");
  EXPECT_EQ(back.regressor().predict(std::vector<double>(20, 0.0)), 612.5);
  EXPECT_EQ(back.regressor().feature_count(), 20u);
}

TEST(ModelFile, Rejections) {
  io::ModelFile mf{predict::FeatureOptions{}, predict::MeanRegressor(612.5, 20)};
  auto j = io::to_json(mf);
  j["format_version"] = 2;
  EXPECT_THROW(io::model_from_json(j), ValidationError);
  j = io::to_json(mf);
  j["kind"] = "svm";
  EXPECT_THROW(io::model_from_json(j), ValidationError);
  j = io::to_json(mf);
  j.erase("features");
  EXPECT_THROW(io::model_from_json(j), ValidationError);
  EXPECT_THROW(io::load_model("/nonexistent/model.json"), IoError);
  const auto dir = testsupport::scratch_dir("serialize_bad");
  std::ofstream(dir / "bad.json") << "{ not json";
  EXPECT_THROW(io::load_model(dir / "bad.json"), ParseError);
}

TEST(Reports, EnergyReportShape) {
  energy::EnergyReport r;
  r.baseline = "fixed-1080";
  r.policies["fixed-1080"] = {157.5, 0.0};
  r.policies["events"] = {117.9, 25.1};
  const auto j = io::to_json(r);
  EXPECT_EQ(j.at("baseline"), "fixed-1080");
  EXPECT_EQ(j.at("policies").at("events").at("energy_mwh").get<double>(), 117.9);
  EXPECT_EQ(j.at("policies").at("events").at("savings_percent").get<double>(), 25.1);
}
