#pragma once

// Seeded synthetic experiments: a tag world with known emotion coordinates,
// embeddings that encode them linearly, filter resources, genre families and
// a cohort whose At-Risk listeners can carry extra Sadness playcount.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tagrisk/induction.hpp"
#include "tagrisk/ingest.hpp"

namespace tagrisk::synthetic {

struct CohortSpec {
  std::uint64_t seed = 1;
  std::size_t at_risk = 60;
  std::size_t no_risk = 60;
  std::size_t excluded = 6;
  /// Multiplies each At-Risk listener's Sadness share; 1 gives the null.
  double sad_multiplier = 2.0;
  std::size_t catalog = 600;
  std::size_t min_tracks = 120;
  std::size_t max_tracks = 260;
  std::size_t min_plays = 600;
  std::size_t max_plays = 1200;
  /// Base Sadness share of a listener's plays, drawn uniformly.
  double sad_share_lo = 0.05;
  double sad_share_hi = 0.15;
};

struct WorldSpec {
  std::uint64_t seed = 7;
  std::size_t dim = 24;
  std::size_t lexicon_words = 400;
  double noise = 0.03;
};

/// Emotion tags designed around each GEMS category, category -> words.
const std::map<std::string, std::vector<std::string>>& emotion_tags();

/// Genre families, each a planted cluster of genre tags.
const std::vector<std::vector<std::string>>& genre_families();

struct World {
  induction::EmbeddingTable embeddings;
  induction::LexiconNorms lexicon;
  /// Designed coordinates of every emotion tag and GEMS term word.
  std::map<std::string, induction::Norms> designed;
};

World make_world(const WorldSpec& spec);

ingest::Cohort make_cohort(const CohortSpec& spec);

/// Writes config.ini, cohort.jsonl, embeddings.vec, lexicon.csv,
/// stopwords.txt, wordlist.txt, pos.tsv, blocklist.txt and genres.txt.
void write_experiment(const std::filesystem::path& dir, const CohortSpec& cohort,
                      const WorldSpec& world = {});

/// Linear ground truth for regressor checks: random norms in [1, 9] and
/// vectors M * norms + noise.
World linear_lexicon(std::size_t words, std::size_t dim, double noise, std::uint64_t seed);

struct SelectionProblem {
  Eigen::MatrixXd x;
  std::vector<int> labels;
  std::vector<std::size_t> informative;
};

/// Gaussian features; the first `informative` columns (after a seeded
/// permutation) drive a logistic label. With margin > 0 the label is the
/// sign of the linear score and points closer than margin are redrawn.
SelectionProblem selection_problem(std::size_t n, std::size_t p, std::size_t informative,
                                   std::uint64_t seed, double margin = 0.0);

}  // namespace tagrisk::synthetic
