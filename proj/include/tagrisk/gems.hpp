#pragma once

// GEMS category centroids and nearest-centroid tag assignment.

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "tagrisk/model.hpp"

namespace tagrisk::gems {

struct GemsCategory {
  std::string name;
  std::string umbrella;
  std::vector<TermLoading> terms;
  /// Published centroids, used unless recomputed from term points.
  std::vector<double> default_va;
  std::vector<double> default_vad;
};

struct GemsTable {
  std::vector<GemsCategory> categories;

  const GemsCategory& category(std::string_view name) const;
  /// Every term across categories, in table order.
  std::vector<std::string> terms() const;
};

/// The nine first-order factors with their 40 term loadings and the
/// published VA/VAD centroids.
GemsTable default_table();

/// Throws ConfigError unless the table has exactly the nine GEMS categories,
/// loadings in (0, 1] and a 1.0 loading in each category.
void validate(const GemsTable& table);

GemsTable load_table(const std::filesystem::path& path);
void save_table(const std::filesystem::path& path, const GemsTable& table);

using CentroidMap = std::map<std::string, EmotionPoint>;

/// The table's shipped centroids for the given space.
CentroidMap default_centroids(const GemsTable& table, EmotionSpace space);

/// Loading-weighted mean of term points per category (plain weighted sum when
/// normalize is false, clamped into [1, 9]). Throws ConfigError listing any
/// term without a point.
CentroidMap category_centroids(const std::map<std::string, EmotionPoint>& term_points,
                               const GemsTable& table, bool normalize = true);

/// Nearest centroid by Euclidean distance; ties go to the lexicographically
/// smallest category name. Throws ValidationError on a space mismatch.
std::string assign_category(const EmotionPoint& point, const CentroidMap& centroids);

TagVocabulary build_vocabulary(const std::map<std::string, EmotionPoint>& tag_points,
                               const CentroidMap& centroids);

std::vector<EmotionCategory> emotion_categories(const GemsTable& table,
                                                const CentroidMap& centroids);

}  // namespace tagrisk::gems
