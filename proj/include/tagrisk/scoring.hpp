#pragma once

// Playcount-weighted prevalence of tag classes in listening histories.
//
// The same construction serves emotion categories (class = GEMS category),
// genre clusters (class = cluster label) and single tags (class = the tag).

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "tagrisk/model.hpp"

namespace tagrisk::scoring {

/// Class -> share of the track's filtered tag weight. Sums to 1.
using TrackAssociation = std::map<std::string, double>;

/// track id -> association, holding only tracks with at least one
/// classified tag of positive weight.
using AssociationIndex = std::unordered_map<std::string, TrackAssociation>;

/// N_{j,c} = sum of weights of the track's tags in class c over the sum of
/// weights of all its classified tags. Tags missing from class_of are
/// ignored. nullopt when the track carries no classified weight.
std::optional<TrackAssociation> track_association(
    const TrackRecord& track, const std::map<std::string, std::string>& class_of);

AssociationIndex associate_tracks(std::span<const TrackRecord> tracks,
                                  const std::map<std::string, std::string>& class_of);

/// Identity classing over a tag set, for tag-level scores.
std::map<std::string, std::string> identity_classes(const std::set<std::string>& tags);

/// S_{u,c} = sum over the user's associated tracks of N_{j,c} * playcount,
/// over the user's total playcount (associated or not). Throws DataError
/// when the total playcount is zero.
std::vector<double> emotion_prevalence(const ListeningHistory& history,
                                       const AssociationIndex& associations,
                                       std::span<const std::string> classes);

/// Same as emotion_prevalence, restricted to tracks in restrict_to when
/// given. nullopt when the restricted history is empty.
std::optional<std::vector<double>> genre_prevalence(const ListeningHistory& history,
                                                    const AssociationIndex& genre_associations,
                                                    std::span<const std::string> clusters,
                                                    const std::set<std::string>* restrict_to);

/// Ids of tracks carrying at least one tag of the given category.
std::set<std::string> tracks_with_category(std::span<const TrackRecord> tracks,
                                           const TagVocabulary& vocabulary,
                                           std::string_view category);

/// Per-tag scores for a single user (ts_{u,t}); zero entries are omitted.
std::map<std::string, double> user_tag_scores(const ListeningHistory& history,
                                              const AssociationIndex& tag_associations);

/// G_{g,t}: per-tag playcount mass pooled over a group of users, over the
/// group's pooled playcount. Tags with no mass are omitted (score 0).
std::map<std::string, double> group_tag_scores(std::span<const ListeningHistory> group,
                                               const AssociationIndex& tag_associations);

struct RankedTag {
  std::string tag;
  double norisk = 0.0;
  double atrisk = 0.0;
  double delta = 0.0;  // |norisk - atrisk|
};

/// Category tags by |G_NoRisk - G_AtRisk| descending, tag name ascending on
/// ties.
std::vector<RankedTag> rank_tags(const std::map<std::string, double>& norisk,
                                 const std::map<std::string, double>& atrisk,
                                 std::span<const std::string> category_tags);

}  // namespace tagrisk::scoring
