#include "resadapt/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "resadapt/csv.hpp"
#include "resadapt/error.hpp"

namespace resadapt::data {
namespace detail {
extern const char kBfi10KeyCsv[];
}

namespace {

constexpr std::array<int, 6> kStudy1Ladder = {144, 240, 360, 480, 720, 1080};
constexpr std::array<int, 4> kStudy2Ladder = {360, 480, 720, 1080};
constexpr int kStudy2StartResolution = 360;

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::optional<bool> parse_bool(std::string_view s) {
  const auto v = lower(s);
  if (v == "1" || v == "true" || v == "yes" || v == "y") return true;
  if (v == "0" || v == "false" || v == "no" || v == "n") return false;
  return std::nullopt;
}

BfiKey load_bfi_key() {
  std::istringstream in{std::string(detail::kBfi10KeyCsv)};
  const auto table = csv::parse(in, "bfi10_key.csv");
  table.require_columns({"item", "trait", "reversed"});
  const auto item_col = *table.column("item");
  const auto trait_col = *table.column("trait");
  const auto rev_col = *table.column("reversed");
  BfiKey key{};
  std::array<bool, 10> seen{};
  for (const auto& row : table.rows) {
    const auto item = csv::parse_int(table, row, row.fields[item_col], "item");
    const auto trait = parse_trait(row.fields[trait_col]);
    const auto rev = parse_bool(row.fields[rev_col]);
    if (item < 1 || item > 10 || !trait || !rev || seen[item - 1]) {
      throw RowError(table.source, row.line, "invalid scoring-key entry");
    }
    seen[item - 1] = true;
    key[item - 1] = {*trait, *rev};
  }
  if (!std::all_of(seen.begin(), seen.end(), [](bool b) { return b; })) {
    throw ValidationError("BFI-10 scoring key does not cover all 10 items");
  }
  return key;
}

}  // namespace

std::string_view to_string(Activity a) {
  switch (a) {
    case Activity::kStill: return "still";
    case Activity::kWalking: return "walking";
    case Activity::kRunning: return "running";
    case Activity::kInVehicle: return "in_vehicle";
  }
  return "still";
}

std::string_view to_string(Gender g) { return g == Gender::kMale ? "male" : "female"; }

std::string_view to_string(Trait t) {
  switch (t) {
    case Trait::kExtraversion: return "extraversion";
    case Trait::kAgreeableness: return "agreeableness";
    case Trait::kConscientiousness: return "conscientiousness";
    case Trait::kNeuroticism: return "neuroticism";
    case Trait::kOpenness: return "openness";
  }
  return "extraversion";
}

std::optional<Activity> parse_activity(std::string_view s) {
  const auto v = lower(s);
  for (auto a : kActivities) {
    if (v == to_string(a)) return a;
  }
  if (v == "in vehicle" || v == "invehicle" || v == "vehicle") return Activity::kInVehicle;
  return std::nullopt;
}

std::optional<Gender> parse_gender(std::string_view s) {
  const auto v = lower(s);
  if (v == "male" || v == "m") return Gender::kMale;
  if (v == "female" || v == "f") return Gender::kFemale;
  return std::nullopt;
}

std::optional<Trait> parse_trait(std::string_view s) {
  const auto v = lower(s);
  for (auto t : kTraits) {
    if (v == to_string(t)) return t;
  }
  return std::nullopt;
}

std::span<const int> ladder(int study) {
  if (study == 1) return kStudy1Ladder;
  if (study == 2) return kStudy2Ladder;
  throw ValidationError("unknown study " + std::to_string(study));
}

bool on_ladder(int study, int resolution) {
  const auto l = ladder(study);
  return std::find(l.begin(), l.end(), resolution) != l.end();
}

int final_resolution(const ViewingSession& session) {
  if (session.events.empty()) return session.start_resolution;
  const auto last = std::max_element(
      session.events.begin(), session.events.end(),
      [](const ResolutionEvent& a, const ResolutionEvent& b) { return a.t_ms < b.t_ms; });
  return last->new_resolution;
}

const BfiKey& bfi10_key() {
  static const BfiKey key = load_bfi_key();
  return key;
}

TraitScores bfi10_score(std::span<const int> answers) {
  if (answers.size() != 10) {
    throw ValidationError("BFI-10 needs exactly 10 answers, got " +
                          std::to_string(answers.size()));
  }
  const auto& key = bfi10_key();
  TraitScores sum{};
  std::array<int, 5> count{};
  for (std::size_t i = 0; i < 10; ++i) {
    const int a = answers[i];
    if (a < 1 || a > 5) {
      throw ValidationError("BFI-10 answer " + std::to_string(i + 1) + " is " +
                            std::to_string(a) + ", expected 1..5");
    }
    const auto t = static_cast<std::size_t>(key[i].trait);
    sum[t] += key[i].reversed ? 6 - a : a;
    ++count[t];
  }
  for (std::size_t t = 0; t < 5; ++t) sum[t] /= count[t];
  return sum;
}

std::vector<TraitProfile> dominant_traits(std::span<const TraitScores> scores) {
  const auto n = static_cast<double>(scores.size());
  std::vector<TraitProfile> out(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    auto& p = out[i];
    p.scores = scores[i];
    for (std::size_t t = 0; t < 5; ++t) {
      double lower_count = 0.0, equal_count = 0.0;
      for (const auto& other : scores) {
        if (other[t] < scores[i][t]) lower_count += 1.0;
        else if (other[t] == scores[i][t]) equal_count += 1.0;
      }
      p.percentiles[t] = (lower_count + 0.5 * equal_count) / n;
    }
    std::size_t best = 0;
    for (std::size_t t = 1; t < 5; ++t) {
      if (p.percentiles[t] > p.percentiles[best]) best = t;
    }
    p.dominant = kTraits[best];
  }
  return out;
}

Dataset::Dataset(std::vector<Participant> participants, std::vector<VideoMeta> videos,
                 std::vector<ViewingSession> sessions)
    : participants_(std::move(participants)),
      videos_(std::move(videos)),
      sessions_(std::move(sessions)) {
  for (std::size_t i = 0; i < participants_.size(); ++i) {
    const auto& p = participants_[i];
    ladder(p.study);
    if (!participant_index_.emplace(p.id, i).second) {
      throw ValidationError("duplicate participant id '" + p.id + "'");
    }
    if (p.bfi) bfi10_score(*p.bfi);
  }
  for (std::size_t i = 0; i < videos_.size(); ++i) {
    const auto& v = videos_[i];
    ladder(v.study);
    if (!video_index_.emplace(std::pair{v.study, v.id}, i).second) {
      throw ValidationError("duplicate video id '" + v.id + "' in study " +
                            std::to_string(v.study));
    }
  }
  std::set<std::pair<std::string, std::string>> seen;
  for (auto& s : sessions_) {
    const auto& p = participant(s.participant_id);
    s.study = p.study;
    video(s.study, s.video_id);
    const std::string tag = "session (" + s.participant_id + ", " + s.video_id + ")";
    if (!seen.emplace(s.participant_id, s.video_id).second) {
      throw ValidationError("duplicate " + tag);
    }
    if (s.study == 2 && s.activity == Activity::kInVehicle) {
      throw ValidationError(tag + ": study 2 has no in_vehicle sessions");
    }
    if (s.study == 2 && s.start_resolution != kStudy2StartResolution) {
      throw ValidationError(tag + ": study 2 sessions start at 360, got " +
                            std::to_string(s.start_resolution));
    }
    if (!on_ladder(s.study, s.start_resolution)) {
      throw ValidationError(tag + ": start resolution " +
                            std::to_string(s.start_resolution) + " not on the ladder");
    }
    for (std::size_t k = 0; k < s.events.size(); ++k) {
      const auto& e = s.events[k];
      if (e.t_ms < 0) throw ValidationError(tag + ": negative event time");
      if (k > 0 && e.t_ms <= s.events[k - 1].t_ms) {
        throw ValidationError(tag + ": event times not strictly increasing");
      }
      if (!on_ladder(s.study, e.new_resolution)) {
        throw ValidationError(tag + ": event resolution " +
                              std::to_string(e.new_resolution) + " not on the ladder");
      }
    }
  }
}

const Participant& Dataset::participant(std::string_view id) const {
  const auto it = participant_index_.find(id);
  if (it == participant_index_.end()) {
    throw ValidationError("unknown participant id '" + std::string(id) + "'");
  }
  return participants_[it->second];
}

const VideoMeta& Dataset::video(int study, std::string_view id) const {
  const auto it = video_index_.find(std::pair{study, std::string(id)});
  if (it == video_index_.end()) {
    throw ValidationError("unknown video id '" + std::string(id) + "' in study " +
                          std::to_string(study));
  }
  return videos_[it->second];
}

std::map<std::string, TraitProfile> Dataset::trait_profiles(int study) const {
  std::vector<std::string> ids;
  std::vector<TraitScores> scores;
  for (const auto& p : participants_) {
    if (p.study != study || !p.bfi) continue;
    ids.push_back(p.id);
    scores.push_back(bfi10_score(*p.bfi));
  }
  const auto profiles = dominant_traits(scores);
  std::map<std::string, TraitProfile> out;
  for (std::size_t i = 0; i < ids.size(); ++i) out.emplace(ids[i], profiles[i]);
  return out;
}

Dataset Dataset::filter_study(int study) const {
  std::vector<Participant> ps;
  std::vector<VideoMeta> vs;
  std::vector<ViewingSession> ss;
  for (const auto& p : participants_) if (p.study == study) ps.push_back(p);
  for (const auto& v : videos_) if (v.study == study) vs.push_back(v);
  for (const auto& s : sessions_) if (s.study == study) ss.push_back(s);
  return Dataset(std::move(ps), std::move(vs), std::move(ss));
}

DatasetPaths DatasetPaths::in_directory(const std::filesystem::path& dir) {
  return {dir / "participants.csv", dir / "videos.csv", dir / "sessions.csv",
          dir / "events.csv"};
}

namespace {

std::vector<Participant> read_participants(const csv::Table& t) {
  std::vector<std::string> cols = {"id", "study", "gender", "age", "glasses", "device"};
  for (int i = 1; i <= 10; ++i) cols.push_back("bfi" + std::to_string(i));
  t.require_columns(cols);
  std::vector<std::size_t> idx;
  for (const auto& c : cols) idx.push_back(*t.column(c));

  std::vector<Participant> out;
  std::set<std::string> ids;
  for (const auto& row : t.rows) {
    const auto& f = row.fields;
    Participant p;
    p.id = f[idx[0]];
    if (p.id.empty()) throw RowError(t.source, row.line, "empty participant id");
    if (!ids.insert(p.id).second) {
      throw RowError(t.source, row.line, "duplicate participant id '" + p.id + "'");
    }
    p.study = static_cast<int>(csv::parse_int(t, row, f[idx[1]], "study"));
    if (p.study != 1 && p.study != 2) throw RowError(t.source, row.line, "study must be 1 or 2");
    const auto g = parse_gender(f[idx[2]]);
    if (!g) throw RowError(t.source, row.line, "bad gender '" + f[idx[2]] + "'");
    p.gender = *g;
    if (!f[idx[3]].empty()) p.age = csv::parse_double(t, row, f[idx[3]], "age");
    if (!f[idx[4]].empty()) {
      p.glasses = parse_bool(f[idx[4]]);
      if (!p.glasses) throw RowError(t.source, row.line, "bad glasses '" + f[idx[4]] + "'");
    }
    p.device = f[idx[5]];
    int filled = 0;
    BfiAnswers answers{};
    for (int i = 0; i < 10; ++i) {
      const auto& v = f[idx[6 + i]];
      if (v.empty()) continue;
      ++filled;
      const auto a = csv::parse_int(t, row, v, "bfi" + std::to_string(i + 1));
      if (a < 1 || a > 5) {
        throw RowError(t.source, row.line,
                       "bfi" + std::to_string(i + 1) + " = " + v + " outside 1..5");
      }
      answers[i] = static_cast<int>(a);
    }
    if (filled == 10) {
      p.bfi = answers;
    } else if (filled != 0) {
      throw RowError(t.source, row.line,
                     "malformed BFI answers: " + std::to_string(filled) + " of 10 present");
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<VideoMeta> read_videos(const csv::Table& t) {
  t.require_columns({"id", "study", "si", "ti", "category"});
  const auto c_id = *t.column("id"), c_study = *t.column("study"), c_si = *t.column("si"),
             c_ti = *t.column("ti"), c_cat = *t.column("category");
  std::vector<VideoMeta> out;
  std::set<std::pair<int, std::string>> keys;
  for (const auto& row : t.rows) {
    VideoMeta v;
    v.id = row.fields[c_id];
    v.study = static_cast<int>(csv::parse_int(t, row, row.fields[c_study], "study"));
    if (v.study != 1 && v.study != 2) throw RowError(t.source, row.line, "study must be 1 or 2");
    v.si = csv::parse_double(t, row, row.fields[c_si], "si");
    v.ti = csv::parse_double(t, row, row.fields[c_ti], "ti");
    if (v.si < 0 || v.ti < 0) throw RowError(t.source, row.line, "negative SI/TI");
    v.category = row.fields[c_cat];
    if (!keys.emplace(v.study, v.id).second) {
      throw RowError(t.source, row.line, "duplicate video id '" + v.id + "'");
    }
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace

Dataset ingest(const DatasetPaths& paths) {
  const auto pt = csv::read_file(paths.participants.string());
  const auto vt = csv::read_file(paths.videos.string());
  const auto st = csv::read_file(paths.sessions.string());
  const auto et = csv::read_file(paths.events.string());

  auto participants = read_participants(pt);
  auto videos = read_videos(vt);

  std::map<std::string, const Participant*> by_id;
  for (const auto& p : participants) by_id.emplace(p.id, &p);
  std::set<std::pair<int, std::string>> video_keys;
  for (const auto& v : videos) video_keys.emplace(v.study, v.id);

  std::vector<ViewingSession> sessions;
  std::map<std::pair<std::string, std::string>, std::size_t> session_index;
  if (!st.header.empty()) {
    st.require_columns({"participant_id", "video_id", "activity", "start_resolution"});
    const auto c_p = *st.column("participant_id"), c_v = *st.column("video_id"),
               c_a = *st.column("activity"), c_r = *st.column("start_resolution");
    for (const auto& row : st.rows) {
      ViewingSession s;
      s.participant_id = row.fields[c_p];
      s.video_id = row.fields[c_v];
      const auto pit = by_id.find(s.participant_id);
      if (pit == by_id.end()) {
        throw RowError(st.source, row.line, "unknown participant id '" + s.participant_id + "'");
      }
      s.study = pit->second->study;
      if (!video_keys.count({s.study, s.video_id})) {
        throw RowError(st.source, row.line,
                       "unknown video id '" + s.video_id + "' in study " +
                           std::to_string(s.study));
      }
      const auto a = parse_activity(row.fields[c_a]);
      if (!a) throw RowError(st.source, row.line, "bad activity '" + row.fields[c_a] + "'");
      s.activity = *a;
      if (s.study == 2 && s.activity == Activity::kInVehicle) {
        throw RowError(st.source, row.line, "study 2 has no in_vehicle sessions");
      }
      s.start_resolution =
          static_cast<int>(csv::parse_int(st, row, row.fields[c_r], "start_resolution"));
      if (!on_ladder(s.study, s.start_resolution)) {
        throw RowError(st.source, row.line,
                       "start resolution " + row.fields[c_r] + " not on the study " +
                           std::to_string(s.study) + " ladder");
      }
      if (s.study == 2 && s.start_resolution != kStudy2StartResolution) {
        throw RowError(st.source, row.line, "study 2 sessions must start at 360");
      }
      if (!session_index.emplace(std::pair{s.participant_id, s.video_id}, sessions.size())
               .second) {
        throw RowError(st.source, row.line, "duplicate session");
      }
      sessions.push_back(std::move(s));
    }
  }

  if (!et.header.empty()) {
    et.require_columns({"participant_id", "video_id", "t_ms", "new_resolution"});
    const auto c_p = *et.column("participant_id"), c_v = *et.column("video_id"),
               c_t = *et.column("t_ms"), c_r = *et.column("new_resolution");
    for (const auto& row : et.rows) {
      const auto it = session_index.find({row.fields[c_p], row.fields[c_v]});
      if (it == session_index.end()) {
        throw RowError(et.source, row.line,
                       "event for unknown session (" + row.fields[c_p] + ", " +
                           row.fields[c_v] + ")");
      }
      auto& s = sessions[it->second];
      ResolutionEvent e;
      e.t_ms = csv::parse_int(et, row, row.fields[c_t], "t_ms");
      e.new_resolution =
          static_cast<int>(csv::parse_int(et, row, row.fields[c_r], "new_resolution"));
      if (e.t_ms < 0) throw RowError(et.source, row.line, "negative t_ms");
      if (!on_ladder(s.study, e.new_resolution)) {
        throw RowError(et.source, row.line,
                       "resolution " + row.fields[c_r] + " not on the study " +
                           std::to_string(s.study) + " ladder");
      }
      if (!s.events.empty() && e.t_ms <= s.events.back().t_ms) {
        throw RowError(et.source, row.line, "non-monotone event time " + row.fields[c_t]);
      }
      s.events.push_back(e);
    }
  }
  return Dataset(std::move(participants), std::move(videos), std::move(sessions));
}

void export_canonical(const Dataset& dataset, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto open = [](const std::filesystem::path& p) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw IoError("cannot write '" + p.string() + "'");
    return out;
  };
  const auto paths = DatasetPaths::in_directory(dir);
  {
    auto out = open(paths.participants);
    std::vector<std::string> header = {"id", "study", "gender", "age", "glasses", "device"};
    for (int i = 1; i <= 10; ++i) header.push_back("bfi" + std::to_string(i));
    csv::write_row(out, header);
    for (const auto& p : dataset.participants()) {
      std::vector<std::string> row = {
          p.id, std::to_string(p.study), std::string(to_string(p.gender)),
          p.age ? csv::format_double(*p.age) : "",
          p.glasses ? (*p.glasses ? "1" : "0") : "", p.device};
      for (int i = 0; i < 10; ++i) row.push_back(p.bfi ? std::to_string((*p.bfi)[i]) : "");
      csv::write_row(out, row);
    }
  }
  {
    auto out = open(paths.videos);
    csv::write_row(out, {"id", "study", "si", "ti", "category"});
    for (const auto& v : dataset.videos()) {
      csv::write_row(out, {v.id, std::to_string(v.study), csv::format_double(v.si),
                           csv::format_double(v.ti), v.category});
    }
  }
  {
    auto out = open(paths.sessions);
    csv::write_row(out, {"participant_id", "video_id", "activity", "start_resolution"});
    for (const auto& s : dataset.sessions()) {
      csv::write_row(out, {s.participant_id, s.video_id, std::string(to_string(s.activity)),
                           std::to_string(s.start_resolution)});
    }
  }
  {
    auto out = open(paths.events);
    csv::write_row(out, {"participant_id", "video_id", "t_ms", "new_resolution"});
    for (const auto& s : dataset.sessions()) {
      for (const auto& e : s.events) {
        csv::write_row(out, {s.participant_id, s.video_id, std::to_string(e.t_ms),
                             std::to_string(e.new_resolution)});
      }
    }
  }
}

std::vector<AnalysisRow> analysis_rows(const Dataset& dataset) {
  std::map<int, std::map<std::string, TraitProfile>> traits;
  for (int study : {1, 2}) traits[study] = dataset.trait_profiles(study);

  std::vector<AnalysisRow> rows;
  rows.reserve(dataset.sessions().size());
  for (const auto& s : dataset.sessions()) {
    const auto& p = dataset.participant(s.participant_id);
    const auto& v = dataset.video(s.study, s.video_id);
    AnalysisRow r;
    r.participant_id = s.participant_id;
    r.video_id = s.video_id;
    r.study = s.study;
    r.activity = s.activity;
    r.final_resolution = final_resolution(s);
    r.si = v.si;
    r.ti = v.ti;
    r.gender = p.gender;
    r.age = p.age;
    r.glasses = p.glasses;
    const auto& tp = traits[s.study];
    if (const auto it = tp.find(p.id); it != tp.end()) r.traits = it->second;
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace resadapt::data
