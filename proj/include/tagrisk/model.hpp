#pragma once

// Domain types shared across the tag-to-risk pipeline.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tagrisk {

// ---------------------------------------------------------------------------
// Participants and risk groups
// ---------------------------------------------------------------------------

inline constexpr int kK10Min = 10;
inline constexpr int kK10Max = 50;
inline constexpr int kAtRiskMinScore = 29;
inline constexpr int kNoRiskBelowScore = 20;

/// Ordered by severity: NoRisk < Excluded < AtRisk.
enum class RiskLabel { NoRisk = 0, Excluded = 1, AtRisk = 2 };

/// K10 >= 29 is At-Risk, K10 < 20 is No-Risk, the band in between is
/// Excluded. Throws ValidationError outside [10, 50].
RiskLabel classify_risk(int k10);

std::string_view to_string(RiskLabel label);
RiskLabel risk_label_from_string(std::string_view text);

struct Personality {
  double openness = 0.0;
  double conscientiousness = 0.0;
  double extraversion = 0.0;
  double agreeableness = 0.0;
  double neuroticism = 0.0;
};

struct Participant {
  std::string user_id;
  int k10 = kK10Min;
  double hums_healthy = 0.0;
  double hums_unhealthy = 0.0;
  Personality personality;
  RiskLabel risk = RiskLabel::NoRisk;
  /// Unix seconds at which the questionnaire was filled in. Listening
  /// windows are centred here.
  std::int64_t survey_time = 0;
  /// Optional item-level responses, used for internal consistency checks.
  std::vector<int> k10_items;
  std::vector<double> hums_unhealthy_items;
};

/// Builds a participant and derives its risk label from the K10 score.
Participant make_participant(std::string user_id, int k10, double hums_healthy,
                             double hums_unhealthy, Personality personality,
                             std::int64_t survey_time = 0);

/// Throws ValidationError when the participant breaks an invariant
/// (empty id, K10 out of range, label inconsistent with K10).
void validate(const Participant& p);

// ---------------------------------------------------------------------------
// Tracks, tags and listening histories
// ---------------------------------------------------------------------------

inline constexpr std::size_t kMaxTagsPerTrack = 50;

struct TagAssignment {
  std::string tag;
  /// Number of times the tag was assigned to the track.
  long weight = 0;

  friend bool operator==(const TagAssignment&, const TagAssignment&) = default;
};

struct TrackRecord {
  std::string track_id;
  std::string artist;
  std::string title;
  /// At most kMaxTagsPerTrack entries, weight descending.
  std::vector<TagAssignment> tags;
};

/// Sorts by weight descending (tag name ascending on ties) and keeps the top
/// kMaxTagsPerTrack. Rejects empty tags and negative weights.
std::vector<TagAssignment> top_tags(std::vector<TagAssignment> tags);

struct PlayEntry {
  std::string track_id;
  long playcount = 0;

  friend bool operator==(const PlayEntry&, const PlayEntry&) = default;
};

struct TimeWindow {
  std::int64_t center = 0;
  int half_width_months = 3;
};

struct ListeningHistory {
  std::string user_id;
  /// Playcount descending, track id ascending on ties.
  std::vector<PlayEntry> entries;
  TimeWindow window;
  int top_n = 500;
};

void validate(const ListeningHistory& h);

/// Orders entries by playcount descending then track id ascending, and keeps
/// the first n.
std::vector<PlayEntry> top_entries(std::vector<PlayEntry> entries, std::size_t n);

// ---------------------------------------------------------------------------
// Emotion space
// ---------------------------------------------------------------------------

enum class EmotionSpace { VA, VAD };

inline constexpr double kEmotionMin = 1.0;
inline constexpr double kEmotionMax = 9.0;

std::size_t dims(EmotionSpace space);
std::string_view to_string(EmotionSpace space);
EmotionSpace emotion_space_from_string(std::string_view text);

/// A point in [1,9]^d, d = 2 (valence, arousal) or 3 (plus dominance).
class EmotionPoint {
 public:
  /// Throws ValidationError if the coordinate count does not match the space
  /// or any coordinate lies outside [1, 9].
  EmotionPoint(EmotionSpace space, std::span<const double> coords);
  EmotionPoint(EmotionSpace space, std::initializer_list<double> coords);

  /// Clamps each coordinate into [1, 9] instead of rejecting it.
  static EmotionPoint clamped(EmotionSpace space, std::span<const double> coords);

  EmotionSpace space() const noexcept { return space_; }
  std::size_t size() const noexcept { return dims(space_); }
  std::span<const double> coords() const noexcept { return {c_.data(), size()}; }
  double operator[](std::size_t i) const { return c_.at(i); }

  friend bool operator==(const EmotionPoint&, const EmotionPoint&) = default;

 private:
  EmotionSpace space_;
  std::array<double, 3> c_{};
};

/// Squared Euclidean distance; throws ValidationError on space mismatch.
double squared_distance(const EmotionPoint& a, const EmotionPoint& b);

// ---------------------------------------------------------------------------
// GEMS categories
// ---------------------------------------------------------------------------

inline constexpr std::array<std::string_view, 9> kGemsCategories = {
    "Wonder",       "Transcendence", "Tenderness",
    "Nostalgia",    "Peacefulness",  "Power",
    "Joyful Activation", "Tension",  "Sadness"};

inline constexpr std::array<std::string_view, 3> kGemsUmbrellas = {
    "Sublimity", "Vitality", "Unease"};

bool is_gems_category(std::string_view name);

struct TermLoading {
  std::string term;
  double loading = 1.0;
};

struct EmotionCategory {
  std::string name;
  std::string umbrella;
  std::vector<TermLoading> terms;
  EmotionPoint centroid;
};

/// Filtered emotion tags and their partition into categories.
struct TagVocabulary {
  std::set<std::string> tags;
  std::map<std::string, std::string> category_of;

  std::vector<std::string> tags_in(std::string_view category) const;
};

// ---------------------------------------------------------------------------
// Score tables and genre clusters
// ---------------------------------------------------------------------------

/// Users x classes matrix of prevalence scores, row-major.
class ScoreTable {
 public:
  ScoreTable() = default;
  ScoreTable(std::vector<std::string> rows, std::vector<std::string> cols);

  const std::vector<std::string>& rows() const noexcept { return rows_; }
  const std::vector<std::string>& cols() const noexcept { return cols_; }

  double& at(std::size_t r, std::size_t c) { return values_.at(r * cols_.size() + c); }
  double at(std::size_t r, std::size_t c) const {
    return values_.at(r * cols_.size() + c);
  }
  std::span<const double> row(std::size_t r) const {
    return {values_.data() + r * cols_.size(), cols_.size()};
  }
  std::vector<double> column(std::size_t c) const;

  std::optional<std::size_t> row_index(std::string_view id) const;
  std::optional<std::size_t> col_index(std::string_view name) const;

  void set_row(std::size_t r, std::span<const double> values);

 private:
  std::vector<std::string> rows_;
  std::vector<std::string> cols_;
  std::vector<double> values_;
};

struct GenreCluster {
  int id = 0;
  std::vector<std::string> members;
  /// Core tags in rank order; empty until labelled.
  std::vector<std::string> core;
  std::string label;
};

struct GenreClusterSet {
  std::vector<GenreCluster> clusters;
  /// Tag -> cluster id. Unassigned tags are absent.
  std::map<std::string, int> assignment;
  std::vector<std::string> unassigned;
};

}  // namespace tagrisk
