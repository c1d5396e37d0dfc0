#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

#include "fixtures.hpp"
#include "resadapt/csv.hpp"
#include "resadapt/dataset.hpp"
#include "resadapt/error.hpp"

using namespace resadapt;
using namespace resadapt::data;
namespace fs = std::filesystem;

namespace {

void write(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

fs::path copy_sample(const std::string& name) {
  const auto dir = testsupport::scratch_dir(name);
  for (const auto& f : {"participants.csv", "videos.csv", "sessions.csv", "events.csv"}) {
    fs::copy_file(testsupport::fixture("sample") / f, dir / f);
  }
  return dir;
}

std::size_t error_row(const fs::path& dir) {
  try {
    ingest(DatasetPaths::in_directory(dir));
  } catch (const RowError& e) {
    return e.row();
  }
  return 0;
}

}  // namespace

TEST(Csv, QuotesCommentsAndBlankLines) {
  std::istringstream in("\xEF\xBB\xBF# a: 1\n#b\nx,y\n\n\"q,1\",\" s \"\n2, 3\n");
  const auto t = csv::parse(in, "mem");
  ASSERT_EQ(t.header, (std::vector<std::string>{"x", "y"}));
  ASSERT_EQ(t.comments.size(), 2u);
  EXPECT_EQ(t.comments[0], " a: 1");
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[0].fields[0], "q,1");
  EXPECT_EQ(t.rows[0].fields[1], " s ");
  EXPECT_EQ(t.rows[1].fields[1], "3");
  EXPECT_EQ(t.rows[1].line, 6u);
}

TEST(Csv, EscapeRoundTrip) {
  for (const std::string s : {"plain", "a,b", "say \"hi\"", ""}) {
    std::ostringstream out;
    csv::write_row(out, {s, "z"});
    std::istringstream in("h1,h2\n" + out.str());
    EXPECT_EQ(csv::parse(in, "mem").rows.at(0).fields[0], s);
  }
}

TEST(Csv, FormatDoubleRoundTrips) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> d(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double v = d(rng);
    EXPECT_EQ(std::stod(csv::format_double(v)), v);
  }
}

TEST(Ladder, PerStudy) {
  EXPECT_EQ(std::vector<int>(ladder(1).begin(), ladder(1).end()),
            (std::vector<int>{144, 240, 360, 480, 720, 1080}));
  EXPECT_EQ(std::vector<int>(ladder(2).begin(), ladder(2).end()),
            (std::vector<int>{360, 480, 720, 1080}));
  EXPECT_FALSE(on_ladder(2, 240));
  EXPECT_THROW(ladder(3), ValidationError);
}

TEST(Bfi10, KeyReversedItems) {
  const auto& key = bfi10_key();
  std::vector<int> reversed;
  for (int i = 0; i < 10; ++i) {
    if (key[i].reversed) reversed.push_back(i + 1);
  }
  EXPECT_EQ(reversed, (std::vector<int>{1, 3, 4, 5, 7}));
  EXPECT_EQ(key[0].trait, Trait::kExtraversion);
  EXPECT_EQ(key[5].trait, Trait::kExtraversion);
  EXPECT_EQ(key[1].trait, Trait::kAgreeableness);
  EXPECT_EQ(key[6].trait, Trait::kAgreeableness);
  EXPECT_EQ(key[2].trait, Trait::kConscientiousness);
  EXPECT_EQ(key[7].trait, Trait::kConscientiousness);
  EXPECT_EQ(key[3].trait, Trait::kNeuroticism);
  EXPECT_EQ(key[8].trait, Trait::kNeuroticism);
  EXPECT_EQ(key[4].trait, Trait::kOpenness);
  EXPECT_EQ(key[9].trait, Trait::kOpenness);
}

TEST(Bfi10, ScoresByHand) {
  // E = (6-4 + 3)/2, A = (2 + 6-4)/2, C = (6-3 + 2)/2, N = (6-2 + 4)/2, O = (6-5 + 3)/2.
  const std::vector<int> answers = {4, 2, 3, 2, 5, 3, 4, 2, 4, 3};
  const auto s = bfi10_score(answers);
  EXPECT_EQ(s, (TraitScores{2.5, 2.0, 2.5, 4.0, 2.0}));
}

TEST(Bfi10, RejectsBadAnswers) {
  EXPECT_THROW(bfi10_score(std::vector<int>(9, 3)), ValidationError);
  auto a = std::vector<int>(10, 3);
  a[4] = 6;
  EXPECT_THROW(bfi10_score(a), ValidationError);
  a[4] = 0;
  EXPECT_THROW(bfi10_score(a), ValidationError);
}

TEST(Bfi10, ScoresStayInRange) {
  std::mt19937 rng(5);
  std::uniform_int_distribution<int> d(1, 5);
  for (int i = 0; i < 500; ++i) {
    std::vector<int> a(10);
    for (auto& x : a) x = d(rng);
    for (double s : bfi10_score(a)) {
      EXPECT_GE(s, 1.0);
      EXPECT_LE(s, 5.0);
    }
  }
}

TEST(DominantTraits, MidRankPercentilesAndTieBreak) {
  const std::vector<TraitScores> scores = {
      {2.5, 2.0, 2.5, 4.0, 2.0}, {4.0, 4.0, 3.0, 3.0, 3.0}, {2.5, 3.0, 3.5, 2.0, 3.5}};
  const auto p = dominant_traits(scores);
  EXPECT_DOUBLE_EQ(p[0].percentiles[0], 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(p[1].percentiles[0], 2.5 / 3.0);
  EXPECT_DOUBLE_EQ(p[0].percentiles[3], 2.5 / 3.0);
  EXPECT_DOUBLE_EQ(p[2].percentiles[3], 0.5 / 3.0);
  EXPECT_EQ(p[0].dominant, Trait::kNeuroticism);
  EXPECT_EQ(p[1].dominant, Trait::kExtraversion);      // E ties A; E first
  EXPECT_EQ(p[2].dominant, Trait::kConscientiousness);  // C ties O; C first
}

TEST(DominantTraits, PercentilesInUnitInterval) {
  std::mt19937 rng(11);
  std::uniform_int_distribution<int> d(2, 10);
  std::vector<TraitScores> scores(40);
  for (auto& s : scores) {
    for (auto& v : s) v = d(rng) / 2.0;
  }
  for (const auto& p : dominant_traits(scores)) {
    for (double q : p.percentiles) {
      EXPECT_GT(q, 0.0);
      EXPECT_LE(q, 1.0);
    }
    const auto best = *std::max_element(p.percentiles.begin(), p.percentiles.end());
    EXPECT_EQ(p.percentiles[static_cast<std::size_t>(p.dominant)], best);
  }
}

TEST(FinalResolution, LatestEventOrStart) {
  ViewingSession s;
  s.start_resolution = 360;
  EXPECT_EQ(final_resolution(s), 360);
  s.events = {{1000, 480}, {5000, 1080}, {9000, 720}};
  EXPECT_EQ(final_resolution(s), 720);
}

TEST(Ingest, SampleFixture) {
  const auto ds = ingest(DatasetPaths::in_directory(testsupport::fixture("sample")));
  EXPECT_EQ(ds.participants().size(), 3u);
  EXPECT_EQ(ds.videos().size(), 3u);
  ASSERT_EQ(ds.sessions().size(), 5u);
  std::vector<int> finals;
  for (const auto& s : ds.sessions()) finals.push_back(final_resolution(s));
  EXPECT_EQ(finals, (std::vector<int>{720, 360, 480, 1080, 720}));
  EXPECT_EQ(ds.participant("p2").glasses, std::optional<bool>(true));
  EXPECT_DOUBLE_EQ(ds.video(2, "v2").si, 120.75);

  const auto rows = analysis_rows(ds);
  ASSERT_EQ(rows.size(), 5u);
  ASSERT_TRUE(rows[0].traits.has_value());
  EXPECT_EQ(rows[0].traits->dominant, Trait::kNeuroticism);
  EXPECT_EQ(rows[2].traits->dominant, Trait::kExtraversion);
  EXPECT_EQ(rows[4].traits->dominant, Trait::kConscientiousness);
  EXPECT_EQ(rows[1].final_resolution, 360);
}

TEST(Ingest, Study1HasNoTraits) {
  const auto ds = ingest(DatasetPaths::in_directory(testsupport::fixture("study1")));
  for (const auto& r : analysis_rows(ds)) EXPECT_FALSE(r.traits.has_value());
  EXPECT_EQ(ds.filter_study(2).sessions().size(), 0u);
}

TEST(Ingest, ExportRoundTrip) {
  const auto ds = ingest(DatasetPaths::in_directory(testsupport::fixture("sample")));
  const auto dir = testsupport::scratch_dir("export_roundtrip");
  export_canonical(ds, dir);
  EXPECT_EQ(ingest(DatasetPaths::in_directory(dir)), ds);
}

TEST(Ingest, HeaderOnlySessionsAccepted) {
  const auto dir = copy_sample("header_only");
  write(dir / "sessions.csv", "participant_id,video_id,activity,start_resolution\n");
  write(dir / "events.csv", "participant_id,video_id,t_ms,new_resolution\n");
  EXPECT_TRUE(ingest(DatasetPaths::in_directory(dir)).sessions().empty());
}

TEST(Ingest, RowErrorsCarryLineNumbers) {
  auto dir = copy_sample("bad_resolution");
  write(dir / "events.csv",
        "participant_id,video_id,t_ms,new_resolution\np1,v1,1000,480\np1,v1,2000,240\n");
  EXPECT_EQ(error_row(dir), 3u);

  dir = copy_sample("bad_order");
  write(dir / "events.csv",
        "participant_id,video_id,t_ms,new_resolution\np1,v1,3000,480\np1,v1,2000,720\n");
  EXPECT_EQ(error_row(dir), 3u);

  dir = copy_sample("in_vehicle_study2");
  write(dir / "sessions.csv",
        "participant_id,video_id,activity,start_resolution\np1,v1,in_vehicle,360\n");
  write(dir / "events.csv", "participant_id,video_id,t_ms,new_resolution\n");
  EXPECT_EQ(error_row(dir), 2u);

  dir = copy_sample("bad_start");
  write(dir / "sessions.csv",
        "participant_id,video_id,activity,start_resolution\np1,v1,still,360\np2,v1,still,480\n");
  write(dir / "events.csv", "participant_id,video_id,t_ms,new_resolution\n");
  EXPECT_EQ(error_row(dir), 3u);

  dir = copy_sample("unknown_video");
  write(dir / "sessions.csv",
        "participant_id,video_id,activity,start_resolution\np1,v9,still,360\n");
  write(dir / "events.csv", "participant_id,video_id,t_ms,new_resolution\n");
  EXPECT_EQ(error_row(dir), 2u);

  dir = copy_sample("partial_bfi");
  write(dir / "participants.csv",
        "id,study,gender,age,glasses,device,bfi1,bfi2,bfi3,bfi4,bfi5,bfi6,bfi7,bfi8,bfi9,bfi10\n"
        "p1,2,female,24,false,x,4,2,3,2,5,3,4,2,4,\n");
  EXPECT_EQ(error_row(dir), 2u);

  dir = copy_sample("missing_column");
  write(dir / "videos.csv", "id,study,si,category\nv1,2,4,x\n");
  EXPECT_EQ(error_row(dir), 1u);
}

TEST(Ingest, MissingFileIsIoError) {
  const auto dir = testsupport::scratch_dir("empty_dataset");
  EXPECT_THROW(ingest(DatasetPaths::in_directory(dir)), IoError);
}

TEST(Dataset, ConstructorValidates) {
  Participant p{"x", 2, Gender::kMale, 30.0, false, "d", std::nullopt};
  VideoMeta v{"v", 2, 10.0, 2.0, ""};
  ViewingSession s{"x", "v", Activity::kStill, 360, {{10, 480}, {5, 720}}, 2};
  EXPECT_THROW(Dataset({p}, {v}, {s}), ValidationError);
  s.events = {{10, 480}};
  EXPECT_NO_THROW(Dataset({p}, {v}, {s}));
  s.participant_id = "nobody";
  EXPECT_THROW(Dataset({p}, {v}, {s}), ValidationError);
}

TEST(Ingest, UnknownVideoIsNamed) {
  const auto dir = copy_sample("unknown_video_named");
  write(dir / "sessions.csv",
        "participant_id,video_id,activity,start_resolution\np1,v_absent,still,360\n");
  write(dir / "events.csv", "participant_id,video_id,t_ms,new_resolution\n");
  try {
    ingest(DatasetPaths::in_directory(dir));
    FAIL() << "dangling video accepted";
  } catch (const RowError& e) {
    EXPECT_NE(std::string(e.what()).find("v_absent"), std::string::npos);
  }
}

TEST(FinalResolution, UpwardAndDownwardChanges) {
  ViewingSession s;
  s.start_resolution = 360;
  s.events = {{20000, 480}, {45000, 720}};
  EXPECT_EQ(final_resolution(s), 720);
  s.start_resolution = 1080;
  s.events = {{5000, 480}};
  EXPECT_EQ(final_resolution(s), 480);
  EXPECT_EQ(final_resolution(s), final_resolution(s));
}

TEST(Bfi10, UniformAnswers) {
  EXPECT_EQ(bfi10_score(std::vector<int>(10, 3)), (TraitScores{3, 3, 3, 3, 3}));
  EXPECT_EQ(bfi10_score(std::vector<int>(10, 5)), (TraitScores{3, 3, 3, 3, 3}));
}

TEST(DominantTraits, SingleParticipantAndClearLeader) {
  const std::vector<TraitScores> one = {{3, 3, 3, 3, 3}};
  const auto p = dominant_traits(one);
  for (double q : p[0].percentiles) EXPECT_EQ(q, 0.5);
  EXPECT_EQ(p[0].dominant, Trait::kExtraversion);

  // Top on neuroticism only; everyone else ties or trails elsewhere.
  const std::vector<TraitScores> two = {{3, 3, 3, 4, 3}, {3, 3, 3, 2, 3}};
  EXPECT_EQ(dominant_traits(two)[0].dominant, Trait::kNeuroticism);
}

TEST(DominantTraits, PercentilesMatchSortAndRank) {
  std::mt19937 rng(23);
  std::uniform_int_distribution<int> d(2, 10);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<TraitScores> scores(5);
    for (auto& s : scores) {
      for (auto& v : s) v = d(rng) / 2.0;
    }
    const auto got = dominant_traits(scores);
    for (std::size_t t = 0; t < 5; ++t) {
      std::vector<double> col;
      for (const auto& s : scores) col.push_back(s[t]);
      std::sort(col.begin(), col.end());
      for (std::size_t i = 0; i < 5; ++i) {
        // Average 1-based position among equal values, shifted by a half.
        const auto [lo, hi] = std::equal_range(col.begin(), col.end(), scores[i][t]);
        const double first = static_cast<double>(lo - col.begin()) + 1;
        const double last = static_cast<double>(hi - col.begin());
        EXPECT_DOUBLE_EQ(got[i].percentiles[t], ((first + last) / 2 - 0.5) / 5.0);
      }
    }
  }
}
