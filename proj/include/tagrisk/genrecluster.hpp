#pragma once

// Genre-tag clustering: co-occurrence similarity over a binary
// track x tag matrix, Ward linkage and a top-down dynamic tree cut.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tagrisk/model.hpp"

namespace tagrisk::genrecluster {

/// One normalized tag per line; blank lines and '#' comments are skipped.
std::vector<std::string> parse_genre_list(std::istream& in);
std::vector<std::string> load_genre_list(const std::filesystem::path& path);

struct TermDocMatrix {
  std::vector<std::string> tracks;  // rows
  std::vector<std::string> tags;    // columns, ascending
  /// cells[row][col] in {0, 1}.
  std::vector<std::vector<std::uint8_t>> cells;
  /// Genre-list tags that occur on no track.
  std::vector<std::string> dropped;

  std::size_t rows() const noexcept { return tracks.size(); }
  std::size_t cols() const noexcept { return tags.size(); }
};

/// Cell (i, j) is 1 when genre tag j is on track i with positive weight.
/// Track tags and the genre list are compared after tagfilter::normalize.
/// Throws DataError when no genre tag occurs in the corpus.
TermDocMatrix build_term_doc(std::span<const TrackRecord> tracks,
                             std::span<const std::string> genre_list);

struct PairCounts {
  long a = 0;  // both present
  long b = 0;  // first only
  long c = 0;  // second only
  long d = 0;  // neither
};

PairCounts pair_counts(const TermDocMatrix& m, std::size_t i, std::size_t j);

/// ad / sqrt((a+b)(a+c)(b+d)(c+d)), 0 when the denominator is 0.
double similarity_coefficient(const PairCounts& k);

struct SimilarityMatrix {
  std::vector<std::string> tags;
  Eigen::MatrixXd values;
};

/// Pairwise coefficients; the diagonal is 1 for every tag that occurs.
/// Throws ValidationError for fewer than two columns.
SimilarityMatrix similarity(const TermDocMatrix& m);

enum class Dissimilarity { OneMinus, SqrtOneMinus };

std::string_view to_string(Dissimilarity d);
Dissimilarity dissimilarity_from_string(std::string_view text);

Eigen::MatrixXd dissimilarity(const SimilarityMatrix& s, Dissimilarity kind);

/// Node ids: leaves are 0..n-1, merge k creates node n + k.
struct Merge {
  int left = 0;   // smaller id
  int right = 0;  // larger id
  double height = 0.0;
  std::size_t size = 0;
};

struct Dendrogram {
  std::size_t leaves = 0;
  std::vector<Merge> merges;
};

/// Ward's minimum variance linkage by Lance-Williams updates on squared
/// dissimilarities; heights are the square roots. Among equal candidates the
/// pair with the smallest (min id, max id) merges first. Throws
/// ValidationError for fewer than two leaves or a non-square matrix.
Dendrogram ward_linkage(const Eigen::MatrixXd& dissim);

struct CutConfig {
  std::size_t min_cluster_size = 5;
  bool deep_split = false;
  /// A split is kept only when the branches join at least this many times
  /// higher than the tallest branch.
  double split_ratio = 1.5;
};

/// Per-leaf cluster ids, 1..K in order of each cluster's smallest leaf, and
/// 0 for unassigned leaves. Throws ConfigError when min_cluster_size < 1.
std::vector<int> dynamic_cut(const Dendrogram& tree, const CutConfig& config);

/// Clusters over the similarity's tags from per-leaf ids.
GenreClusterSet make_cluster_set(std::span<const std::string> tags, std::span<const int> ids);

/// Core tags: the top-k members by mean similarity to the other members
/// (name ascending on ties); the label joins them with '/'.
void label_clusters(GenreClusterSet& clusters, const SimilarityMatrix& s, std::size_t k = 5);

/// tag -> cluster label for assigned tags.
std::map<std::string, std::string> cluster_classes(const GenreClusterSet& clusters);

}  // namespace tagrisk::genrecluster
