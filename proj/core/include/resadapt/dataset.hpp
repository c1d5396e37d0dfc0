#pragma once

// Study logs and participant metadata: canonical CSV schema, validation,
// BFI-10 scoring, and the flattened rows used by the models.

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace resadapt::data {

enum class Activity { kStill, kWalking, kRunning, kInVehicle };
inline constexpr std::array<Activity, 4> kActivities = {
    Activity::kStill, Activity::kWalking, Activity::kRunning, Activity::kInVehicle};

enum class Gender { kFemale, kMale };

/// Fixed order; also the dominant-trait tie-break order.
enum class Trait { kExtraversion, kAgreeableness, kConscientiousness, kNeuroticism, kOpenness };
inline constexpr std::array<Trait, 5> kTraits = {
    Trait::kExtraversion, Trait::kAgreeableness, Trait::kConscientiousness,
    Trait::kNeuroticism, Trait::kOpenness};

std::string_view to_string(Activity a);
std::string_view to_string(Gender g);
std::string_view to_string(Trait t);
std::optional<Activity> parse_activity(std::string_view s);
std::optional<Gender> parse_gender(std::string_view s);
std::optional<Trait> parse_trait(std::string_view s);

/// Resolution ladder offered in each study (vertical lines, ascending).
std::span<const int> ladder(int study);
bool on_ladder(int study, int resolution);

using BfiAnswers = std::array<int, 10>;
using TraitScores = std::array<double, 5>;  // indexed by Trait

struct Participant {
  std::string id;
  int study = 1;
  Gender gender = Gender::kFemale;
  std::optional<double> age;
  std::optional<bool> glasses;
  std::string device;
  std::optional<BfiAnswers> bfi;

  friend bool operator==(const Participant&, const Participant&) = default;
};

struct VideoMeta {
  std::string id;
  int study = 1;
  double si = 0.0;
  double ti = 0.0;
  std::string category;

  friend bool operator==(const VideoMeta&, const VideoMeta&) = default;
};

struct ResolutionEvent {
  std::int64_t t_ms = 0;
  int new_resolution = 0;

  friend bool operator==(const ResolutionEvent&, const ResolutionEvent&) = default;
};

struct ViewingSession {
  std::string participant_id;
  std::string video_id;
  Activity activity = Activity::kStill;
  int start_resolution = 0;
  std::vector<ResolutionEvent> events;  // strictly increasing t_ms
  int study = 1;

  friend bool operator==(const ViewingSession&, const ViewingSession&) = default;
};

/// Resolution at which the session ended: the latest event's value, or the
/// start resolution when the viewer never switched.
int final_resolution(const ViewingSession& session);

/// One entry of the BFI-10 scoring key.
struct BfiItem {
  Trait trait;
  bool reversed;
};
using BfiKey = std::array<BfiItem, 10>;

/// The standard BFI-10 key, loaded from the bundled data file.
const BfiKey& bfi10_key();

/// Per-trait mean of the two keyed items; reversed items count as 6 - answer.
/// Throws ValidationError on answers outside [1, 5].
TraitScores bfi10_score(std::span<const int> answers);

struct TraitProfile {
  TraitScores scores{};
  std::array<double, 5> percentiles{};
  Trait dominant = Trait::kExtraversion;

  friend bool operator==(const TraitProfile&, const TraitProfile&) = default;
};

/// Within-sample mid-rank percentiles: (#lower + 0.5 * #equal) / n, counting
/// the participant itself among the equal ones. The dominant trait is the
/// highest percentile, ties resolved in kTraits order.
std::vector<TraitProfile> dominant_traits(std::span<const TraitScores> scores);

class Dataset {
 public:
  Dataset() = default;
  /// Validates referential integrity and every session invariant.
  Dataset(std::vector<Participant> participants, std::vector<VideoMeta> videos,
          std::vector<ViewingSession> sessions);

  const std::vector<Participant>& participants() const noexcept { return participants_; }
  const std::vector<VideoMeta>& videos() const noexcept { return videos_; }
  const std::vector<ViewingSession>& sessions() const noexcept { return sessions_; }

  const Participant& participant(std::string_view id) const;
  const VideoMeta& video(int study, std::string_view id) const;

  /// Trait profiles for the participants of `study` that carry BFI answers,
  /// ranked against each other.
  std::map<std::string, TraitProfile> trait_profiles(int study) const;

  Dataset filter_study(int study) const;

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  std::vector<Participant> participants_;
  std::vector<VideoMeta> videos_;
  std::vector<ViewingSession> sessions_;
  std::map<std::string, std::size_t, std::less<>> participant_index_;
  std::map<std::pair<int, std::string>, std::size_t, std::less<>> video_index_;
};

struct DatasetPaths {
  std::filesystem::path participants;
  std::filesystem::path videos;
  std::filesystem::path sessions;
  std::filesystem::path events;

  /// participants.csv, videos.csv, sessions.csv, events.csv under `dir`.
  static DatasetPaths in_directory(const std::filesystem::path& dir);
};

/// Reads and validates the canonical CSVs. Row-level problems raise
/// RowError with the file and line.
Dataset ingest(const DatasetPaths& paths);

/// Writes the canonical CSVs; ingest(export) reproduces the dataset.
void export_canonical(const Dataset& dataset, const std::filesystem::path& dir);

/// Flattened modeling record for one session.
struct AnalysisRow {
  std::string participant_id;
  std::string video_id;
  int study = 1;
  Activity activity = Activity::kStill;
  int final_resolution = 0;
  double si = 0.0;
  double ti = 0.0;
  Gender gender = Gender::kFemale;
  std::optional<double> age;
  std::optional<bool> glasses;
  std::optional<TraitProfile> traits;
};

/// One row per session, in session order. Trait profiles are ranked within
/// each study.
std::vector<AnalysisRow> analysis_rows(const Dataset& dataset);

}  // namespace resadapt::data
