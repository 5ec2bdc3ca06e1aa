#include "tagrisk/scoring.hpp"

#include <algorithm>
#include <cmath>

#include "tagrisk/error.hpp"

namespace tagrisk::scoring {

std::optional<TrackAssociation> track_association(
    const TrackRecord& track, const std::map<std::string, std::string>& class_of) {
  TrackAssociation assoc;
  double total = 0.0;
  for (const auto& t : track.tags) {
    auto it = class_of.find(t.tag);
    if (it == class_of.end() || t.weight <= 0) continue;
    assoc[it->second] += static_cast<double>(t.weight);
    total += static_cast<double>(t.weight);
  }
  if (total <= 0.0) return std::nullopt;
  for (auto& [cls, w] : assoc) w /= total;
  return assoc;
}

AssociationIndex associate_tracks(std::span<const TrackRecord> tracks,
                                  const std::map<std::string, std::string>& class_of) {
  AssociationIndex index;
  for (const auto& t : tracks) {
    if (auto a = track_association(t, class_of)) index.emplace(t.track_id, std::move(*a));
  }
  return index;
}

std::map<std::string, std::string> identity_classes(const std::set<std::string>& tags) {
  std::map<std::string, std::string> out;
  for (const auto& t : tags) out.emplace(t, t);
  return out;
}

namespace {

std::vector<double> prevalence(const ListeningHistory& history,
                               const AssociationIndex& associations,
                               std::span<const std::string> classes,
                               const std::set<std::string>* restrict_to, double& total) {
  std::map<std::string_view, std::size_t> col;
  for (std::size_t i = 0; i < classes.size(); ++i) col.emplace(classes[i], i);
  std::vector<double> row(classes.size(), 0.0);
  total = 0.0;
  for (const auto& e : history.entries) {
    if (restrict_to != nullptr && !restrict_to->contains(e.track_id)) continue;
    total += static_cast<double>(e.playcount);
    auto it = associations.find(e.track_id);
    if (it == associations.end()) continue;
    for (const auto& [cls, share] : it->second) {
      auto c = col.find(cls);
      if (c != col.end()) row[c->second] += share * static_cast<double>(e.playcount);
    }
  }
  if (total > 0.0) {
    for (auto& v : row) v /= total;
  }
  return row;
}

}  // namespace

std::vector<double> emotion_prevalence(const ListeningHistory& history,
                                       const AssociationIndex& associations,
                                       std::span<const std::string> classes) {
  double total = 0.0;
  auto row = prevalence(history, associations, classes, nullptr, total);
  if (total <= 0.0) {
    throw DataError("user " + history.user_id + " has zero total playcount");
  }
  return row;
}

std::optional<std::vector<double>> genre_prevalence(const ListeningHistory& history,
                                                    const AssociationIndex& genre_associations,
                                                    std::span<const std::string> clusters,
                                                    const std::set<std::string>* restrict_to) {
  double total = 0.0;
  auto row = prevalence(history, genre_associations, clusters, restrict_to, total);
  if (total <= 0.0) return std::nullopt;
  return row;
}

std::set<std::string> tracks_with_category(std::span<const TrackRecord> tracks,
                                           const TagVocabulary& vocabulary,
                                           std::string_view category) {
  std::set<std::string> out;
  for (const auto& t : tracks) {
    for (const auto& a : t.tags) {
      auto it = vocabulary.category_of.find(a.tag);
      if (it != vocabulary.category_of.end() && it->second == category && a.weight > 0) {
        out.insert(t.track_id);
        break;
      }
    }
  }
  return out;
}

namespace {

std::map<std::string, double> pooled_tag_mass(std::span<const ListeningHistory> histories,
                                              const AssociationIndex& tag_associations,
                                              double& total) {
  std::map<std::string, double> mass;
  total = 0.0;
  for (const auto& h : histories) {
    for (const auto& e : h.entries) {
      total += static_cast<double>(e.playcount);
      auto it = tag_associations.find(e.track_id);
      if (it == tag_associations.end()) continue;
      for (const auto& [tag, share] : it->second) {
        mass[tag] += share * static_cast<double>(e.playcount);
      }
    }
  }
  return mass;
}

}  // namespace

std::map<std::string, double> user_tag_scores(const ListeningHistory& history,
                                              const AssociationIndex& tag_associations) {
  double total = 0.0;
  auto mass = pooled_tag_mass(std::span<const ListeningHistory>(&history, 1),
                              tag_associations, total);
  if (total <= 0.0) throw DataError("user " + history.user_id + " has zero total playcount");
  for (auto& [tag, m] : mass) m /= total;
  return mass;
}

std::map<std::string, double> group_tag_scores(std::span<const ListeningHistory> group,
                                               const AssociationIndex& tag_associations) {
  double total = 0.0;
  auto mass = pooled_tag_mass(group, tag_associations, total);
  if (total <= 0.0) return {};
  for (auto& [tag, m] : mass) m /= total;
  return mass;
}

std::vector<RankedTag> rank_tags(const std::map<std::string, double>& norisk,
                                 const std::map<std::string, double>& atrisk,
                                 std::span<const std::string> category_tags) {
  auto score = [](const std::map<std::string, double>& m, const std::string& t) {
    auto it = m.find(t);
    return it == m.end() ? 0.0 : it->second;
  };
  std::vector<RankedTag> out;
  for (const auto& t : std::set<std::string>(category_tags.begin(), category_tags.end())) {
    const double a = score(norisk, t), b = score(atrisk, t);
    out.push_back({t, a, b, std::abs(a - b)});
  }
  std::stable_sort(out.begin(), out.end(), [](const RankedTag& x, const RankedTag& y) {
    if (x.delta != y.delta) return x.delta > y.delta;
    return x.tag < y.tag;
  });
  return out;
}

}  // namespace tagrisk::scoring
