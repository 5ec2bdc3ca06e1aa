#include "doctest.h"

#include <random>

#include "oracles.hpp"
#include "tagrisk/error.hpp"
#include "tagrisk/log.hpp"
#include "tagrisk/stats.hpp"

using namespace tagrisk;
using namespace tagrisk::stats;

namespace {

std::vector<double> normal_sample(std::mt19937_64& rng, std::size_t n, double mean = 0.0) {
  std::normal_distribution<double> d(mean, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

}  // namespace

TEST_CASE("mwu examples") {
  const std::vector<double> a = {1, 2, 3}, b = {4, 5, 6};
  auto r = mwu(a, b);
  CHECK(r.u == 0.0);
  CHECK(r.method == MwuMethod::Exact);
  CHECK(r.p_value == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(r.mean_rank_x == 2.0);
  CHECK(r.mean_rank_y == 5.0);

  auto same = mwu(a, a);
  CHECK(same.u == 4.5);
  CHECK(same.p_value == 1.0);
  CHECK(same.method == MwuMethod::NormalApprox);

  const std::vector<double> empty;
  CHECK_THROWS_AS(mwu(empty, a), ValidationError);
}

TEST_CASE("exact p matches enumeration for small samples") {
  std::mt19937_64 rng(21);
  for (std::size_t n1 = 1; n1 <= 9; ++n1) {
    for (std::size_t n2 = 1; n1 + n2 <= 10; ++n2) {
      for (int rep = 0; rep < 5; ++rep) {
        std::vector<double> all(n1 + n2);
        std::iota(all.begin(), all.end(), 1.0);
        std::shuffle(all.begin(), all.end(), rng);
        std::vector<double> x(all.begin(), all.begin() + static_cast<long>(n1));
        std::vector<double> y(all.begin() + static_cast<long>(n1), all.end());
        auto r = mwu(x, y);
        CHECK(r.method == MwuMethod::Exact);
        CHECK(std::abs(r.p_value - oracle::mwu_enumeration_p(x, y)) <= 1e-12);
      }
    }
  }
}

TEST_CASE("mwu symmetry properties") {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> coarse(0, 6);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n1 = 1 + rng() % 25, n2 = 1 + rng() % 25;
    std::vector<double> x(n1), y(n2);
    for (auto& v : x) v = coarse(rng);  // plenty of ties
    for (auto& v : y) v = coarse(rng);
    auto xy = mwu(x, y);
    auto yx = mwu(y, x);
    CHECK(xy.u + yx.u == doctest::Approx(static_cast<double>(n1 * n2)));
    CHECK(xy.u == doctest::Approx(oracle::u_of(x, y)));
    CHECK(xy.p_value == doctest::Approx(yx.p_value));
    CHECK(xy.mean_rank_x == doctest::Approx(yx.mean_rank_y));
    CHECK(xy.p_value > 0.0);
    CHECK(xy.p_value <= 1.0);
    CHECK(xy.u >= 0.0);
    CHECK(xy.u <= static_cast<double>(n1 * n2));
  }
}

TEST_CASE("bootstrap examples") {
  std::vector<double> x(20), y(20);
  std::iota(x.begin(), x.end(), 1.0);
  std::iota(y.begin(), y.end(), 101.0);
  auto sep = bootstrap_p(x, y, 2000, 5);
  CHECK(sep.p_value <= 0.001);
  CHECK(sep.p_value == doctest::Approx((1.0 + sep.extreme) / 2001.0));

  auto same = bootstrap_p(x, x, 2000, 5);
  CHECK(same.p_value >= 0.99);

  auto again = bootstrap_p(x, y, 2000, 5);
  CHECK(again.p_value == sep.p_value);
  CHECK(again.null_sd == sep.null_sd);

  std::vector<std::string> seen;
  auto old = log::set_warning_sink([&](std::string_view m) { seen.emplace_back(m); });
  auto few = bootstrap_p(x, y, 50, 5);
  log::set_warning_sink(old);
  CHECK(few.low_iterations);
  CHECK(!seen.empty());

  auto wr = bootstrap_p(x, y, 500, 5, BootstrapMode::WithReplacement);
  CHECK(wr.mode == BootstrapMode::WithReplacement);
  CHECK(wr.p_value <= 0.01);
  CHECK(bootstrap_mode_from_string("with_replacement") == BootstrapMode::WithReplacement);
}

TEST_CASE("bootstrap is calibrated under the null") {
  std::mt19937_64 rng(1234);
  int rejections = 0;
  const int trials = 100;
  for (int t = 0; t < trials; ++t) {
    auto x = normal_sample(rng, 30), y = normal_sample(rng, 30);
    if (bootstrap_p(x, y, 1000, static_cast<std::uint64_t>(t)).p_value < kSignificance) ++rejections;
  }
  CHECK(rejections >= 1);
  CHECK(rejections <= 12);
}

TEST_CASE("correlations") {
  const std::vector<double> scores = {0, 0, 0, 1, 1, 1};
  const std::vector<int> labels = {0, 0, 0, 1, 1, 1};
  CHECK(*point_biserial(scores, labels) == doctest::Approx(1.0));
  const std::vector<double> flat_means = {1, 3, 2, 2, 1, 3};
  CHECK(*point_biserial(flat_means, labels) == doctest::Approx(0.0));
  const std::vector<int> one_class = {1, 1, 1, 1, 1, 1};
  CHECK_THROWS_AS(point_biserial(scores, one_class), ValidationError);
  const std::vector<double> constant(6, 2.0);
  CHECK(!point_biserial(constant, labels));

  const std::vector<double> a = {1.2, 3.4, 2.2, 5.0, 4.1, 0.3}, b = {2.0, 2.9, 3.3, 4.8, 3.9, 1.1};
  CHECK(std::abs(*pearson(a, b) - oracle::pearson(a, b)) < 1e-12);
  CHECK(!pearson(a, constant));

  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    auto s = normal_sample(rng, 12);
    std::vector<int> l(12);
    for (int i = 0; i < 12; ++i) l[static_cast<std::size_t>(i)] = i % 2;
    auto r = *point_biserial(s, l);
    CHECK(r >= -1.0);
    CHECK(r <= 1.0);
  }
}

TEST_CASE("partial correlation") {
  std::mt19937_64 rng(8);
  auto x = normal_sample(rng, 40), z1 = normal_sample(rng, 40), z2 = normal_sample(rng, 40);
  std::vector<double> y(40);
  for (std::size_t i = 0; i < 40; ++i) y[i] = 0.5 * x[i] + z1[i] - 0.3 * z2[i] + 0.2 * normal_sample(rng, 1)[0];

  CHECK(*partial_correlation(x, y, {}) == doctest::Approx(*pearson(x, y)));
  CHECK(*partial_correlation(x, x, {z1, z2}) == doctest::Approx(1.0));
  auto got = *partial_correlation(x, y, {z1, z2});
  CHECK(std::abs(got - oracle::partial_from_precision({x, y, z1, z2})) < 1e-10);

  std::vector<double> twice(40);
  for (std::size_t i = 0; i < 40; ++i) twice[i] = 2 * z1[i];
  CHECK_THROWS_AS(partial_correlation(x, y, {z1, twice}), ValidationError);
}

TEST_CASE("cronbach alpha") {
  std::vector<std::vector<double>> same = {{1, 1, 1}, {2, 2, 2}, {4, 4, 4}, {3, 3, 3}};
  CHECK(*cronbach_alpha(same) == doctest::Approx(1.0));

  // item variances 1, 1/3, 1; totals 6, 9, 11 -> var 19/3
  // alpha = 3/2 * (1 - (7/3)/(19/3)) = 18/19
  std::vector<std::vector<double>> hand = {{1, 2, 3}, {2, 3, 4}, {3, 3, 5}};
  CHECK(*cronbach_alpha(hand) == doctest::Approx(18.0 / 19.0));

  std::mt19937_64 rng(19);
  std::vector<std::vector<double>> noise(10000, std::vector<double>(5));
  std::normal_distribution<double> n;
  for (auto& row : noise) {
    for (auto& v : row) v = n(rng);
  }
  CHECK(std::abs(*cronbach_alpha(noise)) <= 0.05);

  auto shifted = hand;
  for (auto& row : shifted) row[1] += 7.5;
  CHECK(*cronbach_alpha(shifted) == doctest::Approx(*cronbach_alpha(hand)));

  std::vector<std::vector<double>> constant = {{2, 2}, {2, 2}, {2, 2}};
  CHECK(!cronbach_alpha(constant));
}

TEST_CASE("group difference report") {
  std::vector<Participant> people;
  ScoreTable scores;
  std::vector<std::string> ids;
  for (int i = 0; i < 40; ++i) ids.push_back("u" + std::to_string(i));
  ids.push_back("excluded");
  scores = ScoreTable(ids, {"Sadness", "Wonder"});
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 0.1);
  for (int i = 0; i < 40; ++i) {
    const bool at_risk = i % 2 == 1;
    people.push_back(make_participant(ids[static_cast<std::size_t>(i)], at_risk ? 35 : 14, 0, 0, {}));
    const double row[] = {u(rng) + (at_risk ? 0.1 : 0.0), 0.05};
    scores.set_row(static_cast<std::size_t>(i), row);
  }
  people.push_back(make_participant("excluded", 24, 0, 0, {}));
  const double big[] = {100.0, 100.0};
  scores.set_row(40, big);

  const std::vector<std::string> cats = {"Sadness", "Wonder"};
  auto report = group_difference_report(scores, people, cats, 1000, 3);
  REQUIRE(report.size() == 2);
  CHECK(report[0].flagged);
  CHECK(report[0].direction == Direction::AtRisk);
  CHECK(report[0].mwu.n1 == 20);
  CHECK(report[0].mwu.n2 == 20);
  CHECK(report[0].bootstrap);
  CHECK(!report[1].flagged);
  CHECK(!report[1].bootstrap);

  std::vector<Participant> only_norisk;
  for (const auto& p : people) {
    if (p.risk == RiskLabel::NoRisk) only_norisk.push_back(p);
  }
  CHECK_THROWS_AS(group_difference_report(scores, only_norisk, cats, 100, 1), DataError);

  CHECK(!is_significant(0.05));
  CHECK(is_significant(0.0499999));
}
