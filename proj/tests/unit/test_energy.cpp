#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "fixtures.hpp"
#include "resadapt/energy.hpp"
#include "resadapt/error.hpp"

using namespace resadapt;
using namespace resadapt::energy;

namespace {

EnergyCalibration synthetic_cal() {
  return load_calibration(testsupport::fixture("calibration_synthetic.csv"));
}

// Straight sum of d * (I + idle) * V / 3600.
double naive_energy(const PlaybackTrace& t, const EnergyCalibration& cal) {
  long double acc = 0;
  for (const auto& s : t.segments()) {
    acc += static_cast<long double>(s.duration_s) * (cal.current_ma.at(s.resolution) + cal.idle_ma);
  }
  return static_cast<double>(acc * cal.voltage / 3600.0L);
}

PlaybackTrace random_trace(std::mt19937_64& rng, const std::vector<int>& ladder, double total) {
  std::uniform_int_distribution<std::size_t> pick(0, ladder.size() - 1);
  std::uniform_real_distribution<double> cut(0, total);
  std::vector<double> cuts = {0, total};
  for (int i = 0; i < 5; ++i) cuts.push_back(cut(rng));
  std::sort(cuts.begin(), cuts.end());
  PlaybackTrace t;
  for (std::size_t i = 1; i < cuts.size(); ++i) {
    if (cuts[i] > cuts[i - 1]) t.append(ladder[pick(rng)], cuts[i] - cuts[i - 1]);
  }
  return t;
}

}  // namespace

TEST(Trace, MergesEqualNeighboursAndRejectsBadSegments) {
  PlaybackTrace t;
  t.append(360, 10);
  t.append(360, 5);
  t.append(720, 1);
  ASSERT_EQ(t.segments().size(), 2u);
  EXPECT_EQ(t.segments()[0], (Segment{360, 15}));
  EXPECT_DOUBLE_EQ(t.total_duration(), 16.0);
  EXPECT_THROW(t.append(480, 0.0), ValidationError);
  EXPECT_THROW(t.append(480, -1.0), ValidationError);
  EXPECT_THROW(t.append(0, 1.0), ValidationError);
  EXPECT_THROW(t.append(480, INFINITY), ValidationError);
}

TEST(Calibration, SyntheticFixture) {
  const auto cal = synthetic_cal();
  EXPECT_EQ(cal.codec_tag, "synthetic-h264-hw");
  EXPECT_EQ(cal.voltage, 4.2);
  EXPECT_EQ(cal.idle_ma, 0.0);
  EXPECT_EQ(cal.current_ma.size(), 4u);
  EXPECT_EQ(cal.current(720), 380.0);
  EXPECT_TRUE(cal.monotone());
  EXPECT_FALSE(cal.covers(240));
  EXPECT_THROW(cal.current(240), ValidationError);
}

TEST(Calibration, RoundTrip) {
  auto cal = synthetic_cal();
  cal.idle_ma = 12.5;
  cal.current_ma[144] = 0.1 + 0.2;
  std::stringstream ss;
  write_calibration(ss, cal);
  EXPECT_EQ(parse_calibration(ss, "rt"), cal);
}

TEST(Calibration, RejectsBadFiles) {
  const auto parse = [](const std::string& text) {
    std::istringstream in(text);
    return parse_calibration(in, "cal.csv");
  };
  try {
    parse("# voltage: 4\nresolution,current_ma\n360,1\n360,2\n");
    FAIL();
  } catch (const RowError& e) {
    EXPECT_EQ(e.row(), 4u);
  }
  EXPECT_THROW(parse("# voltage: 4\nresolution,current_ma\n360,0\n"), RowError);
  EXPECT_THROW(parse("# voltage: 4\nresolution,current_ma\n-360,5\n"), RowError);
  EXPECT_THROW(parse("resolution,current_ma\n360,5\n"), ValidationError);
  EXPECT_THROW(parse("# voltage: x\nresolution,current_ma\n360,5\n"), ValidationError);
  EXPECT_THROW(parse("# voltage: -1\nresolution,current_ma\n360,5\n"), ValidationError);
  EXPECT_THROW(parse("# voltage: 4\nresolution,current_ma\n"), ValidationError);
  EXPECT_THROW(parse("# voltage: 4\nresolution\n360\n"), ValidationError);
  EXPECT_THROW(load_calibration("/nonexistent/cal.csv"), IoError);
}

TEST(Calibration, NonMonotoneIsDiagnosedNotRejected) {
  std::istringstream in("# voltage: 4\nresolution,current_ma\n360,300\n480,290\n720,400\n");
  const auto cal = parse_calibration(in, "c");
  EXPECT_FALSE(cal.monotone());
  ASSERT_EQ(cal.diagnostics().size(), 1u);
  EXPECT_NE(cal.diagnostics()[0].find("480"), std::string::npos);
  // Equal neighbours still count as monotone.
  std::istringstream flat("# voltage: 4\nresolution,current_ma\n360,300\n480,300\n");
  EXPECT_TRUE(parse_calibration(flat, "c").monotone());
}

TEST(Energy, HandValue) {
  const auto cal = synthetic_cal();
  // 300 mA for 60 s at 4.2 V: 4.2 * 300 * 60 / 3600 = 21 mWh.
  EXPECT_DOUBLE_EQ(estimate_energy(PlaybackTrace({{360, 60}}), cal), 21.0);
  EXPECT_EQ(estimate_energy(PlaybackTrace{}, cal), 0.0);
  // 20 s at 380 + 25 s at 320 + 15 s at 380 = 21300 mA s.
  const PlaybackTrace mixed({{720, 20}, {480, 25}, {720, 15}});
  EXPECT_NEAR(estimate_energy(mixed, cal), 21300 * 4.2 / 3600, 1e-12);
}

TEST(Energy, IdleCurrentAddsLinearly) {
  auto cal = synthetic_cal();
  const PlaybackTrace t({{480, 30}, {1080, 30}});
  const double base = estimate_energy(t, cal);
  cal.idle_ma = 50;
  EXPECT_NEAR(estimate_energy(t, cal) - base, 50 * 60 * 4.2 / 3600, 1e-12);
}

TEST(Energy, RandomTracesMatchDirectSum) {
  const auto cal = synthetic_cal();
  std::mt19937_64 rng(77);
  const std::vector<int> ladder = {360, 480, 720, 1080};
  for (int i = 0; i < 200; ++i) {
    const auto t = random_trace(rng, ladder, 60.0);
    const double e = estimate_energy(t, cal);
    EXPECT_NEAR(e, naive_energy(t, cal), 1e-12 * e);
  }
}

TEST(Energy, AdditiveAndVoltageLinear) {
  auto cal = synthetic_cal();
  std::mt19937_64 rng(5);
  const std::vector<int> ladder = {360, 480, 720, 1080};
  for (int i = 0; i < 100; ++i) {
    const auto a = random_trace(rng, ladder, 30.0);
    const auto b = random_trace(rng, ladder, 45.0);
    PlaybackTrace ab = a;
    ab.append(b);
    const double ea = estimate_energy(a, cal), eb = estimate_energy(b, cal);
    EXPECT_NEAR(estimate_energy(ab, cal), ea + eb, 1e-12 * (ea + eb));
    auto hv = cal;
    hv.voltage *= 2;
    EXPECT_NEAR(estimate_energy(a, hv), 2 * ea, 1e-12 * ea);
  }
}

TEST(Energy, MonotoneCalibrationRespectsDominance) {
  const auto cal = synthetic_cal();
  std::mt19937_64 rng(9);
  const std::vector<int> ladder = {360, 480, 720, 1080};
  std::uniform_int_distribution<std::size_t> pick(0, 3);
  for (int i = 0; i < 100; ++i) {
    PlaybackTrace lo, hi;
    for (int s = 0; s < 6; ++s) {
      const std::size_t a = pick(rng), b = pick(rng);
      lo.append(ladder[std::min(a, b)], 10);
      hi.append(ladder[std::max(a, b)], 10);
    }
    EXPECT_LE(estimate_energy(lo, cal), estimate_energy(hi, cal));
  }
}

TEST(Compare, SavingsAndBaselines) {
  const auto cal = synthetic_cal();
  std::map<std::string, PlaybackTrace> traces;
  traces["fixed-1080"] = PlaybackTrace({{1080, 60}});
  traces["adaptive"] = PlaybackTrace({{360, 30}, {720, 30}});
  const auto r = compare_policies(traces, "fixed-1080", cal);
  EXPECT_EQ(r.baseline, "fixed-1080");
  EXPECT_EQ(r.policies.at("fixed-1080").savings_percent, 0.0);
  const double e_base = 450 * 60 * 4.2 / 3600, e_ad = (300 + 380) * 30 * 4.2 / 3600;
  EXPECT_NEAR(r.policies.at("adaptive").savings_percent, 100 * (e_base - e_ad) / e_base, 1e-10);
  EXPECT_TRUE(r.diagnostics.empty());

  traces["short"] = PlaybackTrace({{360, 59}});
  EXPECT_THROW(compare_policies(traces, "fixed-1080", cal), ValidationError);
  EXPECT_THROW(compare_policies(traces, "missing", cal), ValidationError);
}

TEST(Compare, FlatCalibrationGivesExactlyZero) {
  EnergyCalibration flat{"flat", 3.7, 0.0, {{360, 250}, {480, 250}, {720, 250}, {1080, 250}}};
  std::mt19937_64 rng(3);
  const std::vector<int> ladder = {360, 480, 720, 1080};
  for (int i = 0; i < 50; ++i) {
    std::map<std::string, PlaybackTrace> traces;
    traces["base"] = PlaybackTrace({{1080, 60}});
    traces["p"] = random_trace(rng, ladder, 60.0);
    if (traces["p"].total_duration() != 60.0) continue;
    EXPECT_EQ(compare_policies(traces, "base", flat).policies.at("p").savings_percent, 0.0);
  }
}

TEST(Compare, SavingsPercentEdges) {
  EXPECT_EQ(savings_percent(0.0, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(savings_percent(200.0, 150.0), 25.0);
  EXPECT_DOUBLE_EQ(savings_percent(100.0, 120.0), -20.0);
  EXPECT_THROW(savings_percent(0.0, 1.0), ValidationError);
}

TEST(Energy, MultiSegmentEqualsSumOfSingles) {
  const auto cal = synthetic_cal();
  const PlaybackTrace t({{360, 12}, {480, 18}, {720, 30}});
  double sum = 0;
  for (const auto& s : t.segments()) sum += estimate_energy(PlaybackTrace({s}), cal);
  EXPECT_NEAR(estimate_energy(t, cal), sum, 1e-12);
}

TEST(Compare, RandomTracesMatchRecomputedSavings) {
  const auto cal = synthetic_cal();
  std::mt19937_64 rng(41);
  const std::vector<int> ladder = {360, 480, 720, 1080};
  for (int i = 0; i < 100; ++i) {
    std::map<std::string, PlaybackTrace> traces;
    traces["base"] = PlaybackTrace({{1080, 60}});
    traces["p"] = random_trace(rng, ladder, 60.0);
    if (std::fabs(traces["p"].total_duration() - 60.0) > 1e-9) continue;
    const auto r = compare_policies(traces, "base", cal);
    const double eb = naive_energy(traces["base"], cal), ep = naive_energy(traces["p"], cal);
    EXPECT_NEAR(r.policies.at("p").savings_percent, 100 * (eb - ep) / eb, 1e-9);
  }
}
