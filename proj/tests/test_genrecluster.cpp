#include "doctest.h"

#include <algorithm>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "tagrisk/error.hpp"
#include "tagrisk/genrecluster.hpp"
#include "tagrisk/log.hpp"

using namespace tagrisk;
using namespace tagrisk::genrecluster;

namespace {

TrackRecord track(std::string id, std::vector<TagAssignment> tags) {
  return {std::move(id), "", "", std::move(tags)};
}

Eigen::MatrixXd euclidean(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd pts(n, 3);
  for (Eigen::Index i = 0; i < pts.size(); ++i) pts(i) = g(rng);
  Eigen::MatrixXd d(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) d(i, j) = (pts.row(i) - pts.row(j)).norm();
  }
  return d;
}

Eigen::MatrixXd planted(std::mt19937_64& rng, const std::vector<int>& truth) {
  const auto n = static_cast<Eigen::Index>(truth.size());
  std::uniform_real_distribution<double> near(0.01, 0.1), far(0.9, 1.0);
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      d(i, j) = d(j, i) = truth[static_cast<std::size_t>(i)] == truth[static_cast<std::size_t>(j)]
                              ? near(rng)
                              : far(rng);
    }
  }
  return d;
}

}  // namespace

TEST_CASE("genre list parsing") {
  std::istringstream in("# genres\nHouse\n\nDream-Pop\nhouse\n");
  CHECK(parse_genre_list(in) == std::vector<std::string>{"house", "dream pop"});
}

TEST_CASE("term document matrix") {
  std::vector<TrackRecord> one = {track("1", {{"house", 10}})};
  const std::vector<std::string> genres = {"house", "techno"};
  std::vector<std::string> warnings;
  auto old = log::set_warning_sink([&](std::string_view m) { warnings.emplace_back(m); });
  auto m = build_term_doc(one, genres);
  log::set_warning_sink(old);
  CHECK(m.rows() == 1);
  CHECK(m.cols() == 1);
  CHECK(m.cells[0][0] == 1);
  CHECK(m.dropped == std::vector<std::string>{"techno"});
  CHECK(!warnings.empty());

  std::vector<TrackRecord> three = {track("a", {{"Rock", 5}, {"indie", 0}, {"sad", 9}}),
                                    track("b", {{"indie", 3}, {"pop", 1}}),
                                    track("c", {{"pop", 2}, {"rock", 1}})};
  const std::vector<std::string> g3 = {"indie", "pop", "rock"};
  auto m3 = build_term_doc(three, g3);
  REQUIRE(m3.tags == g3);
  const std::vector<std::vector<std::uint8_t>> want = {{0, 0, 1}, {1, 1, 0}, {0, 1, 1}};
  CHECK(m3.cells == want);

  std::vector<TrackRecord> none = {track("x", {{"sad", 1}})};
  old = log::set_warning_sink({});
  CHECK_THROWS_AS(build_term_doc(none, genres), DataError);
  log::set_warning_sink(old);
}

TEST_CASE("similarity coefficient") {
  CHECK(similarity_coefficient({2, 0, 0, 2}) == 1.0);
  CHECK(similarity_coefficient({0, 3, 2, 1}) == 0.0);
  CHECK(similarity_coefficient({1, 1, 1, 1}) == doctest::Approx(0.25));
  CHECK(similarity_coefficient({0, 0, 0, 0}) == 0.0);

  for (long a = 0; a <= 6; ++a) {
    for (long b = 0; b <= 6; ++b) {
      for (long c = 0; c <= 6; ++c) {
        for (long d = 0; d <= 6; ++d) {
          const double s = similarity_coefficient({a, b, c, d});
          CHECK(s >= 0.0);
          CHECK(s <= 1.0);
          CHECK((s == 1.0) == (b == 0 && c == 0 && a > 0 && d > 0));
          CHECK(s == similarity_coefficient({a, c, b, d}));
        }
      }
    }
  }
}

TEST_CASE("similarity ignores track order") {
  std::mt19937_64 rng(4);
  TermDocMatrix m;
  m.tags = {"a", "b", "c", "d"};
  for (int r = 0; r < 30; ++r) {
    m.tracks.push_back("t" + std::to_string(r));
    std::vector<std::uint8_t> row(4);
    for (auto& v : row) v = static_cast<std::uint8_t>(rng() % 2);
    row[static_cast<std::size_t>(r % 4)] = 1;
    m.cells.push_back(row);
  }
  auto s = similarity(m);
  auto shuffled = m;
  std::shuffle(shuffled.cells.begin(), shuffled.cells.end(), rng);
  auto s2 = similarity(shuffled);
  CHECK(s.values.isApprox(s2.values, 0.0));
  CHECK(s.values.isApprox(s.values.transpose(), 0.0));
  for (int i = 0; i < 4; ++i) CHECK(s.values(i, i) == 1.0);

  TermDocMatrix thin = m;
  thin.tags = {"a"};
  for (auto& row : thin.cells) row.resize(1);
  CHECK_THROWS_AS(similarity(thin), ValidationError);
}

TEST_CASE("dissimilarity transforms") {
  SimilarityMatrix s{{"a", "b"}, Eigen::MatrixXd(2, 2)};
  s.values << 1, 0.36, 0.36, 1;
  auto one = dissimilarity(s, Dissimilarity::OneMinus);
  CHECK(one(0, 1) == doctest::Approx(0.64));
  CHECK(one(0, 0) == 0.0);
  CHECK(dissimilarity(s, Dissimilarity::SqrtOneMinus)(1, 0) == doctest::Approx(0.8));
  CHECK(dissimilarity_from_string("sqrt_one_minus") == Dissimilarity::SqrtOneMinus);
}

TEST_CASE("ward examples") {
  Eigen::MatrixXd d(4, 4);
  d << 0, 0.1, 0.9, 0.9,
       0.1, 0, 0.9, 0.9,
       0.9, 0.9, 0, 0.1,
       0.9, 0.9, 0.1, 0;
  auto t = ward_linkage(d);
  REQUIRE(t.merges.size() == 3);
  CHECK(t.merges[0].left == 0);
  CHECK(t.merges[0].right == 1);
  CHECK(t.merges[1].left == 2);
  CHECK(t.merges[1].right == 3);
  CHECK(t.merges[0].height == doctest::Approx(0.1));
  CHECK(t.merges[2].size == 4);

  Eigen::MatrixXd two(2, 2);
  two << 0, 0.7, 0.7, 0;
  auto t2 = ward_linkage(two);
  REQUIRE(t2.merges.size() == 1);
  CHECK(t2.merges[0].height == doctest::Approx(0.7));

  CHECK_THROWS_AS(ward_linkage(Eigen::MatrixXd::Zero(1, 1)), ValidationError);
  CHECK_THROWS_AS(ward_linkage(Eigen::MatrixXd::Zero(2, 3)), ValidationError);
}

TEST_CASE("ward agrees with the recompute oracle") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 15);
    auto d = euclidean(rng, n);
    auto got = ward_linkage(d);
    auto want = oracle::ward(d);
    REQUIRE(got.merges.size() == want.size());
    for (std::size_t k = 0; k < want.size(); ++k) {
      CHECK(got.merges[k].left == want[k].left);
      CHECK(got.merges[k].right == want[k].right);
      CHECK(got.merges[k].height == doctest::Approx(want[k].height).epsilon(1e-9));
      if (k > 0) CHECK(got.merges[k].height >= got.merges[k - 1].height - 1e-12);
    }
  }
}

TEST_CASE("dynamic cut") {
  std::mt19937_64 rng(2);
  std::vector<int> truth;
  for (int c = 0; c < 3; ++c) {
    for (int i = 0; i < 10; ++i) truth.push_back(c);
  }
  std::shuffle(truth.begin(), truth.end(), rng);
  auto tree = ward_linkage(planted(rng, truth));
  auto ids = dynamic_cut(tree, {5, false, 1.5});
  CHECK(std::set<int>(ids.begin(), ids.end()).size() == 3);
  CHECK(std::count(ids.begin(), ids.end(), 0) == 0);
  CHECK(oracle::adjusted_rand(ids, truth) == doctest::Approx(1.0));

  // ids run 1..K by smallest leaf
  int next = 1;
  for (int id : ids) {
    if (id >= next) {
      CHECK(id == next);
      ++next;
    }
  }

  Dendrogram star{4, {{0, 1, 1.0, 2}, {2, 4, 1.0, 3}, {3, 5, 1.0, 4}}};
  auto one = dynamic_cut(star, {10, false, 1.5});
  CHECK(one == std::vector<int>{1, 1, 1, 1});
  CHECK_THROWS_AS(dynamic_cut(star, {0, false, 1.5}), ConfigError);
}

TEST_CASE("cut clusters respect the minimum size") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 6 + static_cast<int>(rng() % 25);
    auto tree = ward_linkage(euclidean(rng, n));
    for (bool deep : {false, true}) {
      const std::size_t min = 2 + rng() % 4;
      auto ids = dynamic_cut(tree, {min, deep, 1.5});
      CHECK(ids.size() == static_cast<std::size_t>(n));
      std::map<int, std::size_t> sizes;
      for (int id : ids) ++sizes[id];
      const bool whole = sizes.size() == 1 && sizes.begin()->first == 1;
      for (auto& [id, size] : sizes) {
        if (id != 0 && !whole) CHECK(size >= min);
      }
    }
  }
}

TEST_CASE("cluster labels") {
  std::vector<std::string> tags = {"a", "b", "c", "d", "e", "f", "solo"};
  SimilarityMatrix s{tags, Eigen::MatrixXd::Identity(7, 7)};
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 6; ++i) {
    for (int j = i + 1; j < 6; ++j) s.values(i, j) = s.values(j, i) = u(rng);
  }
  const std::vector<int> ids = {1, 1, 1, 1, 1, 1, 2};
  auto set = make_cluster_set(tags, ids);
  label_clusters(set, s, 3);
  REQUIRE(set.clusters.size() == 2);
  CHECK(set.clusters[1].label == "solo");

  std::vector<std::pair<double, std::string>> brute;
  for (int i = 0; i < 6; ++i) {
    double m = 0.0;
    for (int j = 0; j < 6; ++j) {
      if (j != i) m += s.values(i, j);
    }
    brute.push_back({-m / 5.0, tags[static_cast<std::size_t>(i)]});
  }
  std::sort(brute.begin(), brute.end());
  REQUIRE(set.clusters[0].core.size() == 3);
  for (std::size_t k = 0; k < 3; ++k) CHECK(set.clusters[0].core[k] == brute[k].second);
  CHECK(set.clusters[0].label ==
        brute[0].second + "/" + brute[1].second + "/" + brute[2].second);

  auto classes = cluster_classes(set);
  CHECK(classes.at("solo") == "solo");
  CHECK(classes.size() == 7);

  const std::vector<int> partial = {1, 1, 0, 1, 1, 1, 0};
  auto p = make_cluster_set(tags, partial);
  CHECK(p.unassigned == std::vector<std::string>{"c", "solo"});
  CHECK(!p.assignment.contains("c"));
}
