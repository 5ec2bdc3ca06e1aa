#include "tagrisk/model.hpp"

#include <algorithm>
#include <cmath>

#include "tagrisk/error.hpp"

namespace tagrisk {

RiskLabel classify_risk(int k10) {
  if (k10 < kK10Min || k10 > kK10Max) {
    throw ValidationError("K10 score " + std::to_string(k10) +
                          " outside [10, 50]");
  }
  if (k10 >= kAtRiskMinScore) return RiskLabel::AtRisk;
  if (k10 < kNoRiskBelowScore) return RiskLabel::NoRisk;
  return RiskLabel::Excluded;
}

std::string_view to_string(RiskLabel label) {
  switch (label) {
    case RiskLabel::NoRisk: return "NoRisk";
    case RiskLabel::Excluded: return "Excluded";
    case RiskLabel::AtRisk: return "AtRisk";
  }
  return "?";
}

RiskLabel risk_label_from_string(std::string_view text) {
  if (text == "NoRisk") return RiskLabel::NoRisk;
  if (text == "Excluded") return RiskLabel::Excluded;
  if (text == "AtRisk") return RiskLabel::AtRisk;
  throw ValidationError("unknown risk label '" + std::string(text) + "'");
}

Participant make_participant(std::string user_id, int k10, double hums_healthy,
                             double hums_unhealthy, Personality personality,
                             std::int64_t survey_time) {
  Participant p;
  p.user_id = std::move(user_id);
  p.k10 = k10;
  p.hums_healthy = hums_healthy;
  p.hums_unhealthy = hums_unhealthy;
  p.personality = personality;
  p.risk = classify_risk(k10);
  p.survey_time = survey_time;
  validate(p);
  return p;
}

void validate(const Participant& p) {
  if (p.user_id.empty()) throw ValidationError("participant with empty user_id");
  if (p.risk != classify_risk(p.k10)) {
    throw ValidationError("participant " + p.user_id +
                          ": risk label inconsistent with K10");
  }
  for (int item : p.k10_items) {
    if (item < 1 || item > 5) {
      throw ValidationError("participant " + p.user_id +
                            ": K10 item response outside [1, 5]");
    }
  }
}

std::vector<TagAssignment> top_tags(std::vector<TagAssignment> tags) {
  for (const auto& t : tags) {
    if (t.tag.empty()) throw ValidationError("empty tag");
    if (t.weight < 0) throw ValidationError("negative weight for tag '" + t.tag + "'");
  }
  std::stable_sort(tags.begin(), tags.end(), [](const auto& a, const auto& b) {
    if (a.weight != b.weight) return a.weight > b.weight;
    return a.tag < b.tag;
  });
  if (tags.size() > kMaxTagsPerTrack) tags.resize(kMaxTagsPerTrack);
  return tags;
}

std::vector<PlayEntry> top_entries(std::vector<PlayEntry> entries, std::size_t n) {
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    if (a.playcount != b.playcount) return a.playcount > b.playcount;
    return a.track_id < b.track_id;
  });
  if (entries.size() > n) entries.resize(n);
  return entries;
}

void validate(const ListeningHistory& h) {
  if (h.user_id.empty()) throw ValidationError("history with empty user_id");
  if (h.top_n < 1) throw ValidationError("history " + h.user_id + ": top_n < 1");
  if (h.entries.size() > static_cast<std::size_t>(h.top_n)) {
    throw ValidationError("history " + h.user_id + ": more entries than top_n");
  }
  std::set<std::string_view> seen;
  for (const auto& e : h.entries) {
    if (e.playcount < 1) {
      throw ValidationError("history " + h.user_id + ": playcount < 1 for " +
                            e.track_id);
    }
    if (!seen.insert(e.track_id).second) {
      throw ValidationError("history " + h.user_id + ": duplicate track " +
                            e.track_id);
    }
  }
}

std::size_t dims(EmotionSpace space) { return space == EmotionSpace::VA ? 2 : 3; }

std::string_view to_string(EmotionSpace space) {
  return space == EmotionSpace::VA ? "va" : "vad";
}

EmotionSpace emotion_space_from_string(std::string_view text) {
  if (text == "va" || text == "VA") return EmotionSpace::VA;
  if (text == "vad" || text == "VAD") return EmotionSpace::VAD;
  throw ConfigError("unknown emotion space '" + std::string(text) + "'");
}

EmotionPoint::EmotionPoint(EmotionSpace space, std::span<const double> coords)
    : space_(space) {
  if (coords.size() != dims(space)) {
    throw ValidationError("emotion point needs " + std::to_string(dims(space)) +
                          " coordinates, got " + std::to_string(coords.size()));
  }
  for (std::size_t i = 0; i < coords.size(); ++i) {
    if (!(coords[i] >= kEmotionMin && coords[i] <= kEmotionMax)) {
      throw ValidationError("emotion coordinate " + std::to_string(coords[i]) +
                            " outside [1, 9]");
    }
    c_[i] = coords[i];
  }
}

EmotionPoint::EmotionPoint(EmotionSpace space, std::initializer_list<double> coords)
    : EmotionPoint(space, std::span<const double>(coords.begin(), coords.size())) {}

EmotionPoint EmotionPoint::clamped(EmotionSpace space, std::span<const double> coords) {
  std::array<double, 3> c{};
  if (coords.size() != dims(space)) {
    throw ValidationError("emotion point dimension mismatch");
  }
  for (std::size_t i = 0; i < coords.size(); ++i) {
    double v = coords[i];
    if (std::isnan(v)) throw ValidationError("NaN emotion coordinate");
    c[i] = std::clamp(v, kEmotionMin, kEmotionMax);
  }
  return EmotionPoint(space, std::span<const double>(c.data(), coords.size()));
}

double squared_distance(const EmotionPoint& a, const EmotionPoint& b) {
  if (a.space() != b.space()) throw ValidationError("emotion space mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

bool is_gems_category(std::string_view name) {
  return std::find(kGemsCategories.begin(), kGemsCategories.end(), name) !=
         kGemsCategories.end();
}

std::vector<std::string> TagVocabulary::tags_in(std::string_view category) const {
  std::vector<std::string> out;
  for (const auto& [tag, cat] : category_of) {
    if (cat == category) out.push_back(tag);
  }
  return out;
}

ScoreTable::ScoreTable(std::vector<std::string> rows, std::vector<std::string> cols)
    : rows_(std::move(rows)), cols_(std::move(cols)),
      values_(rows_.size() * cols_.size(), 0.0) {}

std::vector<double> ScoreTable::column(std::size_t c) const {
  std::vector<double> out;
  out.reserve(rows_.size());
  for (std::size_t r = 0; r < rows_.size(); ++r) out.push_back(at(r, c));
  return out;
}

std::optional<std::size_t> ScoreTable::row_index(std::string_view id) const {
  auto it = std::find(rows_.begin(), rows_.end(), id);
  if (it == rows_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - rows_.begin());
}

std::optional<std::size_t> ScoreTable::col_index(std::string_view name) const {
  auto it = std::find(cols_.begin(), cols_.end(), name);
  if (it == cols_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - cols_.begin());
}

void ScoreTable::set_row(std::size_t r, std::span<const double> values) {
  if (values.size() != cols_.size()) throw ValidationError("score row width mismatch");
  for (std::size_t c = 0; c < values.size(); ++c) {
    if (values[c] < 0.0) throw ValidationError("negative prevalence score");
    at(r, c) = values[c];
  }
}

}  // namespace tagrisk
