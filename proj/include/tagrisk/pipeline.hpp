#pragma once

// Stage orchestration. Each stage writes stamped artifacts under the output
// directory and reads its inputs either from memory (when an earlier stage
// ran in the same process) or from the artifacts of an earlier run.
//
//   ingest/cohort.jsonl                       filter/{vocabulary,canonical,report,dropped}.csv
//   induce/<space>/{regressor.txt,tag_points.csv,training.csv,omitted.csv}
//   map/<space>/{centroids.csv,tag_categories.csv}
//   cluster/{genre_clusters.csv,dendrogram.csv}
//   cells/<space>/n<N>_t<T>/{emotion_scores.csv,group_test.csv,rank_<Category>.csv,
//                            genre_correlation.csv}
//   table2.csv  classify/{cv.csv,summary.csv,model.txt,standardizer.csv}  validity.csv

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "tagrisk/artifact.hpp"
#include "tagrisk/config.hpp"
#include "tagrisk/gems.hpp"
#include "tagrisk/ingest.hpp"
#include "tagrisk/induction.hpp"
#include "tagrisk/model.hpp"
#include "tagrisk/stats.hpp"

namespace tagrisk::pipeline {

struct Cell {
  EmotionSpace space = EmotionSpace::VAD;
  int top_n = 500;
  int window_months = 3;

  /// "n500_t3".
  std::string name() const;
  friend auto operator<=>(const Cell&, const Cell&) = default;
};

inline constexpr std::string_view kStages[] = {"ingest", "filter",  "induce", "map",
                                               "score",  "test",    "cluster", "rank",
                                               "classify", "pipeline"};

bool is_stage(std::string_view name);

/// "Joyful Activation" -> "rank_Joyful_Activation.csv".
std::string rank_file_name(std::string_view category);

class Pipeline {
 public:
  Pipeline(config::PipelineConfig config, std::filesystem::path out_dir);
  ~Pipeline();

  const config::PipelineConfig& config() const noexcept { return config_; }
  const artifact::Stamp& stamp() const noexcept { return stamp_; }
  const std::filesystem::path& out_dir() const noexcept { return out_; }

  /// The (space, n, t) grid in configuration order.
  std::vector<Cell> cells() const;
  std::filesystem::path cell_dir(const Cell& cell) const;

  void ingest();
  void filter();
  void induce(EmotionSpace space);
  void map(EmotionSpace space);
  void score(const Cell& cell);
  void test(const Cell& cell);
  void cluster();
  void rank(const Cell& cell);
  void table2();
  void classify();
  void validity();

  /// Runs one named stage over the grid; "pipeline" runs everything.
  void run(std::string_view stage);
  void run_all();

  const ingest::Cohort& cohort();
  const std::vector<stats::CategoryTest>& tests(const Cell& cell);

 private:
  struct FilterState;
  struct MapState;
  struct GenreState;

  const FilterState& filtered();
  const induction::EmbeddingTable& embeddings();
  const std::map<std::string, EmotionPoint>& tag_points(EmotionSpace space);
  const MapState& mapping(EmotionSpace space);
  const ScoreTable& scores(const Cell& cell);
  const GenreState& genres();
  const gems::GemsTable& gems_table();

  /// Resolved histories for the cell, in participant order; users without
  /// listening data are skipped with a warning.
  std::vector<ListeningHistory> histories(int top_n, int window_months);

  config::PipelineConfig config_;
  std::filesystem::path out_;
  artifact::Stamp stamp_;

  std::optional<ingest::Cohort> cohort_;
  std::unique_ptr<FilterState> filter_;
  std::optional<induction::EmbeddingTable> embeddings_;
  std::optional<gems::GemsTable> gems_;
  std::map<EmotionSpace, std::map<std::string, EmotionPoint>> points_;
  std::map<EmotionSpace, std::unique_ptr<MapState>> maps_;
  std::map<Cell, ScoreTable> scores_;
  std::map<Cell, std::vector<stats::CategoryTest>> tests_;
  std::unique_ptr<GenreState> genres_;
};

}  // namespace tagrisk::pipeline
