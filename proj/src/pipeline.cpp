#include "tagrisk/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "tagrisk/classify.hpp"
#include "tagrisk/error.hpp"
#include "tagrisk/genrecluster.hpp"
#include "tagrisk/log.hpp"
#include "tagrisk/scoring.hpp"
#include "tagrisk/tagfilter.hpp"

namespace tagrisk::pipeline {

namespace fs = std::filesystem;
using artifact::CsvWriter;
using artifact::fmt;
using artifact::fmt_exact;

std::string Cell::name() const {
  return "n" + std::to_string(top_n) + "_t" + std::to_string(window_months);
}

bool is_stage(std::string_view name) {
  return std::find(std::begin(kStages), std::end(kStages), name) != std::end(kStages);
}

std::string rank_file_name(std::string_view category) {
  std::string s(category);
  std::replace(s.begin(), s.end(), ' ', '_');
  return "rank_" + s + ".csv";
}

struct Pipeline::FilterState {
  std::set<std::string> vocabulary;
  std::map<std::string, std::string> canonical;  // raw -> vocabulary tag
};

struct Pipeline::MapState {
  gems::CentroidMap centroids;
  std::map<std::string, std::string> category_of;  // vocabulary tag -> category
  std::map<std::string, std::string> raw_category;  // raw tag -> category
};

struct Pipeline::GenreState {
  GenreClusterSet clusters;
};

namespace {

std::vector<std::string> category_names() {
  return {kGemsCategories.begin(), kGemsCategories.end()};
}

std::string umbrella_of(const gems::GemsTable& table, const std::string& category) {
  return table.category(category).umbrella;
}

const char* kDimNames[] = {"valence", "arousal", "dominance"};

}  // namespace

Pipeline::Pipeline(config::PipelineConfig config, fs::path out_dir)
    : config_(std::move(config)), out_(std::move(out_dir)) {
  stamp_.config_hash = config_.hash;
  stamp_.seed = config_.seed;
}

Pipeline::~Pipeline() = default;

std::vector<Cell> Pipeline::cells() const {
  std::vector<Cell> out;
  for (auto space : config_.grid.spaces) {
    for (int n : config_.grid.top_n) {
      for (int t : config_.grid.window_months) out.push_back({space, n, t});
    }
  }
  return out;
}

fs::path Pipeline::cell_dir(const Cell& cell) const {
  return out_ / "cells" / std::string(to_string(cell.space)) / cell.name();
}

// ---------------------------------------------------------------------------
// ingest

void Pipeline::ingest() {
  ingest::Cohort cohort = ingest::load_fixture(config_.paths.fixture);

  if (!config_.api.base_url.empty()) {
    ingest::ApiConfig api = ingest::api_config_from_env(config_.api.base_url);
    api.rate_limit = config_.api.rate_limit;
    api.max_attempts = config_.api.max_attempts;
    api.timeout = std::chrono::seconds(config_.api.timeout_seconds);
    std::optional<ingest::ResponseCache> cache;
    if (!config_.paths.cache.empty()) cache.emplace(config_.paths.cache);
    ingest::LastFmClient client(api, cache ? &*cache : nullptr);

    std::set<std::string> covered;
    for (const auto& h : cohort.histories) covered.insert(h.user_id);
    for (const auto& s : cohort.scrobbles) covered.insert(s.user_id);
    const int max_n = *std::max_element(config_.grid.top_n.begin(), config_.grid.top_n.end());
    std::vector<int> windows = config_.grid.window_months;
    windows.push_back(config_.classify.window_months);
    std::sort(windows.begin(), windows.end());
    windows.erase(std::unique(windows.begin(), windows.end()), windows.end());
    const int n = std::max(max_n, config_.classify.top_n);
    for (const auto& p : cohort.participants) {
      if (covered.contains(p.user_id)) continue;
      for (int t : windows) {
        cohort.histories.push_back(client.fetch_top_tracks(p.user_id, n, {p.survey_time, t}));
      }
    }
    std::set<std::string> known;
    for (const auto& t : cohort.tracks) known.insert(t.track_id);
    for (const auto& h : cohort.histories) {
      for (const auto& e : h.entries) {
        if (known.insert(e.track_id).second) {
          cohort.tracks.push_back(client.fetch_track_tags(e.track_id));
        }
      }
    }
    cohort.reindex();
  }

  std::ostringstream body;
  ingest::write_fixture(body, cohort);
  artifact::write_text(out_ / "ingest" / "cohort.jsonl", stamp_, body.str());

  CsvWriter summary(out_ / "ingest" / "participants.csv", stamp_,
                    {"user_id", "k10", "risk", "hums_healthy", "hums_unhealthy"});
  for (const auto& p : cohort.participants) {
    summary.row({p.user_id, std::to_string(p.k10), std::string(to_string(p.risk)),
                 fmt(p.hums_healthy), fmt(p.hums_unhealthy)});
  }
  summary.close();
  cohort_ = std::move(cohort);
}

const ingest::Cohort& Pipeline::cohort() {
  if (!cohort_) {
    std::istringstream in(artifact::read_text(out_ / "ingest" / "cohort.jsonl", stamp_));
    cohort_ = ingest::parse_fixture(in);
  }
  return *cohort_;
}

// ---------------------------------------------------------------------------
// filter

void Pipeline::filter() {
  const auto& c = cohort();
  std::vector<std::string> raw;
  for (const auto& t : c.tracks) {
    for (const auto& a : t.tags) raw.push_back(a.tag);
  }
  const auto resources = tagfilter::load_resources({config_.paths.stopwords,
                                                    config_.paths.wordlist,
                                                    config_.paths.pos_lexicon,
                                                    config_.paths.blocklist});
  const auto result = tagfilter::filter_tags(raw, resources);

  const fs::path dir = out_ / "filter";
  CsvWriter vocab(dir / "vocabulary.csv", stamp_, {"tag"});
  for (const auto& t : result.vocabulary) vocab.row({t});
  vocab.close();
  CsvWriter canon(dir / "canonical.csv", stamp_, {"raw_tag", "tag"});
  for (const auto& [r, t] : result.canonical) canon.row({r, t});
  canon.close();
  CsvWriter report(dir / "report.csv", stamp_, {"step", "count"});
  report.row({"input", std::to_string(result.report.input)});
  for (auto s : tagfilter::kAllStages) {
    report.row({"dropped_" + std::string(tagfilter::to_string(s)),
                std::to_string(result.report.dropped_per_stage.at(s))});
  }
  report.row({"output", std::to_string(result.report.output)});
  report.close();
  CsvWriter dropped(dir / "dropped.csv", stamp_, {"raw_tag", "stage"});
  for (const auto& [r, s] : result.report.dropped) {
    dropped.row({r, std::string(tagfilter::to_string(s))});
  }
  dropped.close();

  filter_ = std::make_unique<FilterState>();
  filter_->vocabulary = result.vocabulary;
  filter_->canonical = result.canonical;
}

const Pipeline::FilterState& Pipeline::filtered() {
  if (!filter_) {
    auto st = std::make_unique<FilterState>();
    const auto vocab = artifact::read_csv(out_ / "filter" / "vocabulary.csv", stamp_);
    for (const auto& r : vocab.rows) st->vocabulary.insert(r.at(0));
    const auto canon = artifact::read_csv(out_ / "filter" / "canonical.csv", stamp_);
    for (const auto& r : canon.rows) st->canonical[r.at(0)] = r.at(1);
    filter_ = std::move(st);
  }
  return *filter_;
}

// ---------------------------------------------------------------------------
// induce

const induction::EmbeddingTable& Pipeline::embeddings() {
  if (!embeddings_) {
    embeddings_ = induction::load_embeddings(config_.paths.embeddings);
    if (!config_.paths.subwords.empty()) {
      induction::load_subwords(*embeddings_, config_.paths.subwords);
    }
    if (!embeddings_->duplicates.empty()) {
      log::warn(std::to_string(embeddings_->duplicates.size()) +
                " duplicate embedding rows; the last occurrence was kept");
    }
  }
  return *embeddings_;
}

const gems::GemsTable& Pipeline::gems_table() {
  if (!gems_) {
    gems_ = config_.paths.gems_table.empty() ? gems::default_table()
                                             : gems::load_table(config_.paths.gems_table);
  }
  return *gems_;
}

void Pipeline::induce(EmotionSpace space) {
  const auto& table = embeddings();
  const auto lexicon = induction::load_lexicon(config_.paths.lexicon);
  const auto trained = induction::train_regressor(lexicon, table, config::train_config(config_, space));

  std::set<std::string> wanted = filtered().vocabulary;
  for (const auto& term : gems_table().terms()) wanted.insert(term);
  std::vector<std::string> omitted;
  auto points = induction::induce_tag_points(wanted, table, trained.regressor, &omitted);

  const fs::path dir = out_ / "induce" / std::string(to_string(space));
  std::ostringstream model;
  induction::save_regressor(model, trained.regressor);
  artifact::write_text(dir / "regressor.txt", stamp_, model.str());

  std::vector<std::string> cols = {"tag"};
  for (std::size_t d = 0; d < dims(space); ++d) cols.emplace_back(kDimNames[d]);
  CsvWriter pts(dir / "tag_points.csv", stamp_, cols);
  for (const auto& [tag, p] : points) {
    std::vector<std::string> row = {tag};
    for (std::size_t d = 0; d < p.size(); ++d) row.push_back(fmt_exact(p[d]));
    pts.row(row);
  }
  pts.close();

  CsvWriter info(dir / "training.csv", stamp_, {"key", "value"});
  info.row({"train_size", std::to_string(trained.train_size)});
  info.row({"val_size", std::to_string(trained.val_size)});
  info.row({"epochs", std::to_string(trained.regressor.meta.epochs)});
  info.row({"val_loss", fmt(trained.regressor.meta.val_loss)});
  for (std::size_t d = 0; d < trained.val_pearson.size(); ++d) {
    info.row({std::string("val_pearson_") + kDimNames[d], fmt(trained.val_pearson[d])});
  }
  info.close();

  CsvWriter om(dir / "omitted.csv", stamp_, {"tag"});
  for (const auto& t : omitted) om.row({t});
  om.close();

  points_.erase(space);
  points_.emplace(space, std::move(points));
}

const std::map<std::string, EmotionPoint>& Pipeline::tag_points(EmotionSpace space) {
  auto it = points_.find(space);
  if (it != points_.end()) return it->second;
  const auto t = artifact::read_csv(out_ / "induce" / std::string(to_string(space)) /
                                        "tag_points.csv",
                                    stamp_);
  if (t.columns.size() != dims(space) + 1) throw DataError("tag_points.csv has the wrong width");
  std::map<std::string, EmotionPoint> points;
  for (const auto& r : t.rows) {
    std::vector<double> v;
    for (std::size_t d = 1; d < r.size(); ++d) v.push_back(artifact::parse_double(r[d]));
    points.emplace(r[0], EmotionPoint(space, v));
  }
  return points_.emplace(space, std::move(points)).first->second;
}

// ---------------------------------------------------------------------------
// map

void Pipeline::map(EmotionSpace space) {
  const auto& table = gems_table();
  const auto& points = tag_points(space);
  auto st = std::make_unique<MapState>();
  st->centroids = config_.induction.induced_centroids
                      ? gems::category_centroids(points, table)
                      : gems::default_centroids(table, space);

  const auto& f = filtered();
  for (const auto& tag : f.vocabulary) {
    auto it = points.find(tag);
    if (it != points.end()) st->category_of[tag] = gems::assign_category(it->second, st->centroids);
  }
  for (const auto& [raw, tag] : f.canonical) {
    auto it = st->category_of.find(tag);
    if (it != st->category_of.end()) st->raw_category[raw] = it->second;
  }

  const fs::path dir = out_ / "map" / std::string(to_string(space));
  std::vector<std::string> cols = {"category", "umbrella"};
  for (std::size_t d = 0; d < dims(space); ++d) cols.emplace_back(kDimNames[d]);
  CsvWriter cw(dir / "centroids.csv", stamp_, cols);
  for (const auto& name : category_names()) {
    const auto& p = st->centroids.at(name);
    std::vector<std::string> row = {name, umbrella_of(table, name)};
    for (std::size_t d = 0; d < p.size(); ++d) row.push_back(fmt_exact(p[d]));
    cw.row(row);
  }
  cw.close();
  CsvWriter tw(dir / "tag_categories.csv", stamp_, {"tag", "category", "umbrella"});
  for (const auto& [tag, cat] : st->category_of) tw.row({tag, cat, umbrella_of(table, cat)});
  tw.close();

  maps_[space] = std::move(st);
}

const Pipeline::MapState& Pipeline::mapping(EmotionSpace space) {
  auto it = maps_.find(space);
  if (it != maps_.end()) return *it->second;
  auto st = std::make_unique<MapState>();
  const fs::path dir = out_ / "map" / std::string(to_string(space));
  const auto cents = artifact::read_csv(dir / "centroids.csv", stamp_);
  for (const auto& r : cents.rows) {
    std::vector<double> v;
    for (std::size_t d = 2; d < r.size(); ++d) v.push_back(artifact::parse_double(r[d]));
    st->centroids.emplace(r[0], EmotionPoint(space, v));
  }
  const auto cats = artifact::read_csv(dir / "tag_categories.csv", stamp_);
  for (const auto& r : cats.rows) st->category_of[r.at(0)] = r.at(1);
  for (const auto& [raw, tag] : filtered().canonical) {
    auto c = st->category_of.find(tag);
    if (c != st->category_of.end()) st->raw_category[raw] = c->second;
  }
  return *(maps_[space] = std::move(st));
}

// ---------------------------------------------------------------------------
// score / test

std::vector<ListeningHistory> Pipeline::histories(int top_n, int window_months) {
  const auto& c = cohort();
  std::vector<ListeningHistory> out;
  std::size_t missing = 0;
  for (const auto& p : c.participants) {
    auto h = ingest::resolve_history(c, p.user_id, top_n, window_months);
    if (!h) {
      ++missing;
      continue;
    }
    out.push_back(std::move(*h));
  }
  if (missing > 0) {
    log::warn(std::to_string(missing) + " participants have no listening data for n=" +
              std::to_string(top_n) + ", t=" + std::to_string(window_months));
  }
  return out;
}

void Pipeline::score(const Cell& cell) {
  const auto& c = cohort();
  const auto& m = mapping(cell.space);
  const auto assoc = scoring::associate_tracks(c.tracks, m.raw_category);
  const auto classes = category_names();

  std::vector<std::string> users;
  std::vector<std::vector<double>> rows;
  for (const auto& h : histories(cell.top_n, cell.window_months)) {
    try {
      rows.push_back(scoring::emotion_prevalence(h, assoc, classes));
      users.push_back(h.user_id);
    } catch (const DataError& e) {
      log::warn(std::string(e.what()) + "; user skipped");
    }
  }
  ScoreTable table(users, classes);
  for (std::size_t r = 0; r < rows.size(); ++r) table.set_row(r, rows[r]);

  std::vector<std::string> cols = {"user_id", "risk"};
  cols.insert(cols.end(), classes.begin(), classes.end());
  CsvWriter w(cell_dir(cell) / "emotion_scores.csv", stamp_, cols);
  for (std::size_t r = 0; r < users.size(); ++r) {
    std::vector<std::string> row = {users[r],
                                    std::string(to_string(c.participant(users[r])->risk))};
    for (double v : rows[r]) row.push_back(fmt_exact(v));
    w.row(row);
  }
  w.close();
  scores_[cell] = std::move(table);
}

const ScoreTable& Pipeline::scores(const Cell& cell) {
  auto it = scores_.find(cell);
  if (it != scores_.end()) return it->second;
  const auto t = artifact::read_csv(cell_dir(cell) / "emotion_scores.csv", stamp_);
  const std::vector<std::string> classes(t.columns.begin() + 2, t.columns.end());
  std::vector<std::string> users;
  for (const auto& r : t.rows) users.push_back(r.at(0));
  ScoreTable table(users, classes);
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    std::vector<double> v;
    for (std::size_t k = 2; k < t.rows[r].size(); ++k) v.push_back(artifact::parse_double(t.rows[r][k]));
    table.set_row(r, v);
  }
  return scores_.emplace(cell, std::move(table)).first->second;
}

void Pipeline::test(const Cell& cell) {
  const auto& table = scores(cell);
  const auto classes = category_names();
  if (config_.stats.iterations < stats::kMinRecommendedIterations) {
    log::warn("bootstrap iterations below " + std::to_string(stats::kMinRecommendedIterations));
  }
  auto report = stats::group_difference_report(table, cohort().participants, classes,
                                               config_.stats.iterations,
                                               config::bootstrap_seed(config_), config_.stats.mode);
  CsvWriter w(cell_dir(cell) / "group_test.csv", stamp_,
              {"category", "U", "mean_rank_norisk", "mean_rank_atrisk", "p_mwu", "p_bootstrap",
               "direction", "flagged"});
  for (const auto& t : report) {
    w.row({t.category, fmt_exact(t.mwu.u), fmt_exact(t.mwu.mean_rank_x),
           fmt_exact(t.mwu.mean_rank_y), fmt_exact(t.mwu.p_value),
           t.bootstrap ? fmt_exact(t.bootstrap->p_value) : "",
           std::string(stats::to_string(t.direction)), t.flagged ? "1" : "0"});
  }
  w.close();
  tests_[cell] = std::move(report);
}

const std::vector<stats::CategoryTest>& Pipeline::tests(const Cell& cell) {
  auto it = tests_.find(cell);
  if (it != tests_.end()) return it->second;
  const auto t = artifact::read_csv(cell_dir(cell) / "group_test.csv", stamp_);
  std::vector<stats::CategoryTest> out;
  for (const auto& r : t.rows) {
    stats::CategoryTest ct;
    ct.category = r.at(t.column("category"));
    ct.mwu.u = artifact::parse_double(r.at(t.column("U")));
    ct.mwu.mean_rank_x = artifact::parse_double(r.at(t.column("mean_rank_norisk")));
    ct.mwu.mean_rank_y = artifact::parse_double(r.at(t.column("mean_rank_atrisk")));
    ct.mwu.p_value = artifact::parse_double(r.at(t.column("p_mwu")));
    const auto& pb = r.at(t.column("p_bootstrap"));
    if (!pb.empty()) {
      stats::BootstrapResult b;
      b.p_value = artifact::parse_double(pb);
      ct.bootstrap = b;
    }
    const auto& dir = r.at(t.column("direction"));
    ct.direction = dir == "NoRisk"   ? stats::Direction::NoRisk
                   : dir == "AtRisk" ? stats::Direction::AtRisk
                                     : stats::Direction::None;
    ct.flagged = r.at(t.column("flagged")) == "1";
    out.push_back(std::move(ct));
  }
  return tests_.emplace(cell, std::move(out)).first->second;
}

void Pipeline::table2() {
  CsvWriter w(out_ / "table2.csv", stamp_,
              {"space", "top_n", "window_months", "category", "U", "p_mwu", "p_bootstrap",
               "direction", "flagged"});
  for (const auto& cell : cells()) {
    for (const auto& t : tests(cell)) {
      w.row({std::string(to_string(cell.space)), std::to_string(cell.top_n),
             std::to_string(cell.window_months), t.category, fmt(t.mwu.u), fmt(t.mwu.p_value),
             t.bootstrap ? fmt(t.bootstrap->p_value) : "",
             std::string(stats::to_string(t.direction)), t.flagged ? "1" : "0"});
    }
  }
  w.close();
}

// ---------------------------------------------------------------------------
// cluster

void Pipeline::cluster() {
  const auto genre_list = genrecluster::load_genre_list(config_.paths.genre_list);
  const auto tdm = genrecluster::build_term_doc(cohort().tracks, genre_list);
  const auto sim = genrecluster::similarity(tdm);
  const auto tree =
      genrecluster::ward_linkage(genrecluster::dissimilarity(sim, config_.genre.dissimilarity));
  const auto ids = genrecluster::dynamic_cut(tree, config_.genre.cut);
  auto set = genrecluster::make_cluster_set(sim.tags, ids);
  genrecluster::label_clusters(set, sim, config_.genre.core_size);

  const fs::path dir = out_ / "cluster";
  CsvWriter d(dir / "dendrogram.csv", stamp_, {"step", "left", "right", "height", "size"});
  for (std::size_t k = 0; k < tree.merges.size(); ++k) {
    const auto& m = tree.merges[k];
    d.row({std::to_string(k), std::to_string(m.left), std::to_string(m.right), fmt(m.height),
           std::to_string(m.size)});
  }
  d.close();

  CsvWriter w(dir / "genre_clusters.csv", stamp_, {"tag", "cluster_id", "is_core", "cluster_label"});
  for (const auto& c : set.clusters) {
    for (const auto& m : c.members) {
      const bool core = std::find(c.core.begin(), c.core.end(), m) != c.core.end();
      w.row({m, std::to_string(c.id), core ? "1" : "0", c.label});
    }
  }
  for (const auto& u : set.unassigned) w.row({u, "0", "0", ""});
  w.close();

  genres_ = std::make_unique<GenreState>();
  genres_->clusters = std::move(set);
}

const Pipeline::GenreState& Pipeline::genres() {
  if (!genres_) {
    auto st = std::make_unique<GenreState>();
    const auto t = artifact::read_csv(out_ / "cluster" / "genre_clusters.csv", stamp_);
    std::map<int, GenreCluster> by_id;
    for (const auto& r : t.rows) {
      const int id = std::stoi(r.at(1));
      if (id == 0) {
        st->clusters.unassigned.push_back(r[0]);
        continue;
      }
      auto& c = by_id[id];
      c.id = id;
      c.label = r.at(3);
      c.members.push_back(r[0]);
      st->clusters.assignment[r[0]] = id;
    }
    for (auto& [id, c] : by_id) {
      std::stringstream parts(c.label);
      for (std::string core; std::getline(parts, core, '/');) c.core.push_back(core);
      st->clusters.clusters.push_back(std::move(c));
    }
    genres_ = std::move(st);
  }
  return *genres_;
}

// ---------------------------------------------------------------------------
// rank

void Pipeline::rank(const Cell& cell) {
  const auto& c = cohort();
  const auto& f = filtered();
  const auto& m = mapping(cell.space);
  const auto& report = tests(cell);
  const auto hs = histories(cell.top_n, cell.window_months);

  std::vector<ListeningHistory> norisk, atrisk;
  for (const auto& h : hs) {
    const auto risk = c.participant(h.user_id)->risk;
    if (risk == RiskLabel::NoRisk) norisk.push_back(h);
    if (risk == RiskLabel::AtRisk) atrisk.push_back(h);
  }

  // Tag-level scores: every raw tag stands for its vocabulary entry.
  std::map<std::string, std::string> tag_of;
  for (const auto& [raw, tag] : f.canonical) {
    if (m.category_of.contains(tag)) tag_of[raw] = tag;
  }
  const auto tag_assoc = scoring::associate_tracks(c.tracks, tag_of);
  const auto g_no = scoring::group_tag_scores(norisk, tag_assoc);
  const auto g_at = scoring::group_tag_scores(atrisk, tag_assoc);

  // Genre prevalence, optionally restricted to tracks of one emotion category.
  const auto genre_set = genres().clusters;
  std::map<std::string, std::string> genre_of;
  for (const auto& t : c.tracks) {
    for (const auto& a : t.tags) {
      auto it = genre_set.assignment.find(tagfilter::normalize(a.tag));
      if (it == genre_set.assignment.end()) continue;
      for (const auto& gc : genre_set.clusters) {
        if (gc.id == it->second) genre_of[a.tag] = gc.label;
      }
    }
  }
  const auto genre_assoc = scoring::associate_tracks(c.tracks, genre_of);
  std::vector<std::string> cluster_labels;
  for (const auto& gc : genre_set.clusters) cluster_labels.push_back(gc.label);
  TagVocabulary raw_vocab;
  raw_vocab.category_of = m.raw_category;

  const fs::path dir = cell_dir(cell);
  CsvWriter gw(dir / "genre_correlation.csv", stamp_,
               {"emotion_category", "cluster_id", "cluster_label", "r", "n_users"});
  auto correlate = [&](const std::string& label, const std::set<std::string>* restrict) {
    std::vector<std::vector<double>> rows;
    std::vector<int> risk;
    for (const auto* group : {&norisk, &atrisk}) {
      for (const auto& h : *group) {
        auto row = scoring::genre_prevalence(h, genre_assoc, cluster_labels, restrict);
        if (!row) continue;
        rows.push_back(std::move(*row));
        risk.push_back(group == &atrisk ? 1 : 0);
      }
    }
    const bool both = std::count(risk.begin(), risk.end(), 1) > 0 &&
                      std::count(risk.begin(), risk.end(), 0) > 0;
    for (std::size_t k = 0; k < cluster_labels.size(); ++k) {
      std::string r = "nan";
      if (both) {
        std::vector<double> x;
        for (const auto& row : rows) x.push_back(row[k]);
        if (auto v = stats::point_biserial(x, risk)) r = fmt(*v);
      }
      gw.row({label, std::to_string(genre_set.clusters[k].id), cluster_labels[k], r,
              std::to_string(rows.size())});
    }
  };
  correlate("all", nullptr);

  for (const auto& t : report) {
    if (!t.flagged) continue;
    std::vector<std::string> members;
    for (const auto& [tag, cat] : m.category_of) {
      if (cat == t.category) members.push_back(tag);
    }
    CsvWriter rw(dir / rank_file_name(t.category), stamp_, {"tag", "g_norisk", "g_atrisk", "delta"});
    for (const auto& r : scoring::rank_tags(g_no, g_at, members)) {
      rw.row({r.tag, fmt(r.norisk), fmt(r.atrisk), fmt(r.delta)});
    }
    rw.close();
    const auto tracks = scoring::tracks_with_category(c.tracks, raw_vocab, t.category);
    correlate(t.category, &tracks);
  }
  gw.close();
}

// ---------------------------------------------------------------------------
// classify

void Pipeline::classify() {
  const auto& c = cohort();
  const auto& f = filtered();
  const auto& table = embeddings();

  const auto vectors = classify::tag_vectors(f.vocabulary, table);
  std::map<std::string, std::string> tag_of;
  for (const auto& [raw, tag] : f.canonical) {
    if (vectors.contains(tag)) tag_of[raw] = tag;
  }
  const auto assoc = scoring::associate_tracks(c.tracks, tag_of);

  std::vector<std::pair<std::string, int>> users;
  std::vector<Eigen::VectorXd> feats;
  for (const auto& h : histories(config_.classify.top_n, config_.classify.window_months)) {
    const auto risk = c.participant(h.user_id)->risk;
    if (risk == RiskLabel::Excluded) continue;
    try {
      feats.push_back(classify::user_embedding(h, assoc, vectors, table.dim).embedding);
      users.emplace_back(h.user_id, risk == RiskLabel::AtRisk ? 1 : 0);
    } catch (const DataError& e) {
      log::warn(std::string(e.what()) + "; user skipped");
    }
  }
  // Fold assignment depends on the user id list, so fix its order.
  std::vector<std::size_t> order(users.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return users[a].first < users[b].first; });
  Eigen::MatrixXd x(static_cast<Eigen::Index>(users.size()), static_cast<Eigen::Index>(table.dim));
  std::vector<int> labels;
  for (std::size_t k = 0; k < order.size(); ++k) {
    x.row(static_cast<Eigen::Index>(k)) = feats[order[k]].transpose();
    labels.push_back(users[order[k]].second);
  }

  const auto cv_cfg = config::cv_config(config_);
  const auto cv = classify::cross_validate(x, labels, cv_cfg);
  const fs::path dir = out_ / "classify";
  CsvWriter w(dir / "cv.csv", stamp_, {"fold", "test_size", "lambda", "n_selected", "accuracy"});
  for (std::size_t k = 0; k < cv.folds.size(); ++k) {
    const auto& fr = cv.folds[k];
    w.row({std::to_string(k), std::to_string(fr.test_size), fmt(fr.lambda),
           std::to_string(fr.selected.size()), fmt(fr.accuracy)});
  }
  w.close();

  // Final model on every user.
  const auto st = classify::Standardizer::fit(x);
  const Eigen::MatrixXd z = st.apply(x);
  const double lambda = cv_cfg.lambda ? *cv_cfg.lambda
                                      : classify::choose_lambda(z, labels, cv_cfg.search).lambda;
  const auto fit = classify::l1_logistic_fit(z, labels, lambda);
  CsvWriter sw(dir / "standardizer.csv", stamp_, {"dim", "mean", "scale", "selected"});
  for (Eigen::Index d = 0; d < x.cols(); ++d) {
    const bool sel = std::find(fit.selected.begin(), fit.selected.end(),
                               static_cast<std::size_t>(d)) != fit.selected.end();
    sw.row({std::to_string(d), fmt_exact(st.mean(d)), fmt_exact(st.scale(d)), sel ? "1" : "0"});
  }
  sw.close();
  std::ostringstream model;
  if (!fit.selected.empty()) {
    Eigen::MatrixXd zs(z.rows(), static_cast<Eigen::Index>(fit.selected.size()));
    for (std::size_t k = 0; k < fit.selected.size(); ++k) {
      zs.col(static_cast<Eigen::Index>(k)) = z.col(static_cast<Eigen::Index>(fit.selected[k]));
    }
    classify::save_model(model, classify::svm_train(zs, labels, cv_cfg.svm));
  }
  artifact::write_text(dir / "model.txt", stamp_, model.str());

  CsvWriter sm(dir / "summary.csv", stamp_, {"key", "value"});
  sm.row({"users", std::to_string(labels.size())});
  sm.row({"at_risk", std::to_string(std::count(labels.begin(), labels.end(), 1))});
  sm.row({"folds", std::to_string(cv_cfg.folds)});
  sm.row({"c", fmt(cv_cfg.svm.c)});
  sm.row({"gamma", fmt(cv_cfg.svm.gamma)});
  sm.row({"lambda_full", fmt(lambda)});
  sm.row({"selected_full", std::to_string(fit.selected.size())});
  sm.row({"mean_accuracy", fmt(cv.mean_accuracy)});
  sm.row({"reference_accuracy", fmt(classify::kReferenceAccuracy)});
  sm.close();
}

// ---------------------------------------------------------------------------
// validity

void Pipeline::validity() {
  const auto& c = cohort();
  CsvWriter w(out_ / "validity.csv", stamp_, {"statistic", "group", "value", "n"});
  auto write = [&](const std::string& stat, const std::string& group, std::optional<double> v,
                   std::size_t n) { w.row({stat, group, v ? fmt(*v) : "nan", std::to_string(n)}); };

  auto alpha = [&](const std::string& name, auto items_of) {
    std::vector<std::vector<double>> rows;
    std::size_t width = 0;
    for (const auto& p : c.participants) {
      auto items = items_of(p);
      if (items.empty()) continue;
      if (width == 0) width = items.size();
      if (items.size() == width) rows.push_back(std::move(items));
    }
    std::optional<double> v;
    if (rows.size() >= 2 && width >= 2) v = stats::cronbach_alpha(rows);
    write("cronbach_alpha_" + name, "all", v, rows.size());
  };
  alpha("k10", [](const Participant& p) {
    return std::vector<double>(p.k10_items.begin(), p.k10_items.end());
  });
  alpha("hums_unhealthy", [](const Participant& p) { return p.hums_unhealthy_items; });

  auto correlations = [&](const std::string& group, auto keep) {
    std::vector<double> k10, healthy, unhealthy;
    std::vector<std::vector<double>> controls(5);
    for (const auto& p : c.participants) {
      if (!keep(p)) continue;
      k10.push_back(p.k10);
      healthy.push_back(p.hums_healthy);
      unhealthy.push_back(p.hums_unhealthy);
      const auto& b = p.personality;
      const double traits[] = {b.openness, b.conscientiousness, b.extraversion, b.agreeableness,
                               b.neuroticism};
      for (std::size_t k = 0; k < 5; ++k) controls[k].push_back(traits[k]);
    }
    const std::size_t n = k10.size();
    auto safe = [&](auto f) -> std::optional<double> {
      try {
        return f();
      } catch (const ValidationError&) {
        return std::nullopt;
      }
    };
    write("pearson_k10_unhealthy", group, safe([&] { return stats::pearson(k10, unhealthy); }), n);
    write("pearson_k10_healthy", group, safe([&] { return stats::pearson(k10, healthy); }), n);
    write("partial_k10_unhealthy", group,
          safe([&] { return stats::partial_correlation(k10, unhealthy, controls); }), n);
    write("partial_k10_healthy", group,
          safe([&] { return stats::partial_correlation(k10, healthy, controls); }), n);
  };
  correlations("all", [](const Participant&) { return true; });
  correlations("NoRisk", [](const Participant& p) { return p.risk == RiskLabel::NoRisk; });
  correlations("AtRisk", [](const Participant& p) { return p.risk == RiskLabel::AtRisk; });
  w.close();
}

// ---------------------------------------------------------------------------

void Pipeline::run(std::string_view stage) {
  if (stage == "pipeline") return run_all();
  if (stage == "ingest") return ingest();
  if (stage == "filter") return filter();
  if (stage == "cluster") return cluster();
  if (stage == "classify") return classify();
  if (stage == "induce" || stage == "map") {
    for (auto space : config_.grid.spaces) stage == "induce" ? induce(space) : map(space);
    return;
  }
  if (stage == "score" || stage == "test" || stage == "rank") {
    for (const auto& cell : cells()) {
      if (stage == "score") score(cell);
      else if (stage == "test") test(cell);
      else rank(cell);
    }
    if (stage == "test") {
      table2();
      validity();
    }
    return;
  }
  throw ConfigError("unknown stage '" + std::string(stage) + "'");
}

void Pipeline::run_all() {
  ingest();
  filter();
  for (auto space : config_.grid.spaces) {
    induce(space);
    map(space);
  }
  cluster();
  for (const auto& cell : cells()) {
    score(cell);
    test(cell);
    rank(cell);
  }
  table2();
  validity();
  if (config_.classify.enabled) classify();
}

}  // namespace tagrisk::pipeline
