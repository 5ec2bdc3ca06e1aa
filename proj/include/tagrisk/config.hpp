#pragma once

// Run configuration: an INI file with [paths], [grid], [induction], [stats],
// [genre], [classify], [api] and [run] sections, plus command line overrides.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tagrisk/classify.hpp"
#include "tagrisk/genrecluster.hpp"
#include "tagrisk/induction.hpp"
#include "tagrisk/model.hpp"
#include "tagrisk/stats.hpp"

namespace tagrisk::config {

struct Paths {
  std::filesystem::path fixture;
  std::filesystem::path cache;  // optional
  std::filesystem::path embeddings;
  std::filesystem::path subwords;  // optional
  std::filesystem::path lexicon;
  std::filesystem::path stopwords;
  std::filesystem::path wordlist;
  std::filesystem::path pos_lexicon;
  std::filesystem::path blocklist;
  std::filesystem::path genre_list;
  std::filesystem::path gems_table;  // optional; built-in table when empty
};

struct Grid {
  std::vector<int> top_n = {100, 200, 500};
  std::vector<int> window_months = {2, 3};
  std::vector<EmotionSpace> spaces = {EmotionSpace::VA, EmotionSpace::VAD};
};

struct Induction {
  std::vector<std::size_t> hidden = {256, 128};
  double learning_rate = 1e-3;
  int epochs = 200;
  int batch_size = 64;
  int patience = 20;
  double val_fraction = 0.2;
  double leak = 0.01;
  /// Category centroids from induced GEMS term points, or the published ones.
  bool induced_centroids = true;
};

struct Stats {
  std::size_t iterations = stats::kDefaultIterations;
  stats::BootstrapMode mode = stats::BootstrapMode::Permutation;
};

struct Genre {
  genrecluster::CutConfig cut;
  genrecluster::Dissimilarity dissimilarity = genrecluster::Dissimilarity::OneMinus;
  std::size_t core_size = 5;
};

struct Classify {
  bool enabled = true;
  std::size_t folds = 5;
  double c = classify::kReferenceC;
  double gamma = classify::kReferenceGamma;
  double svm_tol = 1e-3;
  std::optional<double> lambda;  // searched when absent
  std::size_t lambda_folds = 3;
  std::size_t lambda_grid = 20;
  double lambda_min_ratio = 1e-2;
  int top_n = 500;
  int window_months = 3;
};

struct Api {
  std::string base_url;  // empty: no network access
  double rate_limit = 5.0;
  int max_attempts = 3;
  int timeout_seconds = 10;
};

struct PipelineConfig {
  Paths paths;
  Grid grid;
  Induction induction;
  Stats stats;
  Genre genre;
  Classify classify;
  Api api;
  std::uint64_t seed = 0;

  /// Every effective setting as "section.key" -> value text.
  std::map<std::string, std::string> effective;
  /// SHA-256 over the effective settings outside [grid].
  std::string hash;
};

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<EmotionSpace> space;
  std::optional<int> top_n;
  std::optional<int> window_months;
  std::optional<std::size_t> iterations;
};

/// Reads and validates the file; relative paths resolve against its
/// directory. Throws ConfigError naming the offending key for unknown keys,
/// bad values, a missing seed or a referenced file that does not exist.
PipelineConfig load(const std::filesystem::path& path, const Overrides& overrides = {});

/// Stage seeds derived from the run seed.
std::uint64_t induction_seed(const PipelineConfig& c);
std::uint64_t bootstrap_seed(const PipelineConfig& c);
std::uint64_t classify_seed(const PipelineConfig& c);

induction::TrainConfig train_config(const PipelineConfig& c, EmotionSpace space);
classify::CvConfig cv_config(const PipelineConfig& c);

}  // namespace tagrisk::config
