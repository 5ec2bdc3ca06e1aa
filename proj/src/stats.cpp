#include "tagrisk/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>

#include <Eigen/Dense>

#include "tagrisk/error.hpp"
#include "tagrisk/log.hpp"

namespace tagrisk::stats {

std::string_view to_string(MwuMethod method) {
  return method == MwuMethod::Exact ? "exact" : "normal";
}

std::string_view to_string(BootstrapMode mode) {
  return mode == BootstrapMode::Permutation ? "permutation" : "with_replacement";
}

BootstrapMode bootstrap_mode_from_string(std::string_view text) {
  if (text == "permutation") return BootstrapMode::Permutation;
  if (text == "with_replacement") return BootstrapMode::WithReplacement;
  throw ConfigError("unknown bootstrap mode '" + std::string(text) + "'");
}

std::string_view to_string(Direction d) {
  switch (d) {
    case Direction::NoRisk: return "NoRisk";
    case Direction::AtRisk: return "AtRisk";
    case Direction::None: return "None";
  }
  return "None";
}

namespace {

struct Ranking {
  std::vector<double> ranks;  // midranks, in input order
  double tie_term = 0.0;      // sum of t^3 - t over tie groups
  bool has_ties = false;
};

Ranking midranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  Ranking r;
  r.ranks.assign(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && values[idx[j]] == values[idx[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + 1 + j);  // mean of i+1 .. j
    for (std::size_t k = i; k < j; ++k) r.ranks[idx[k]] = rank;
    const auto t = static_cast<double>(j - i);
    if (j - i > 1) {
      r.has_ties = true;
      r.tie_term += t * t * t - t;
    }
    i = j;
  }
  return r;
}

double clamp_p(double p) {
  if (!(p > 0.0)) return std::numeric_limits<double>::min();
  return std::min(p, 1.0);
}

/// Counts of U values under the null: counts[u] for u in [0, n1*n2].
std::vector<double> u_distribution(std::size_t n1, std::size_t n2) {
  // f[m][n][u]: number of arrangements of m x's and n y's with U = u,
  // built up by removing the largest observation.
  const std::size_t max_u = n1 * n2;
  std::vector<std::vector<std::vector<double>>> f(
      n1 + 1, std::vector<std::vector<double>>(n2 + 1, std::vector<double>(max_u + 1, 0.0)));
  for (std::size_t m = 0; m <= n1; ++m) {
    for (std::size_t n = 0; n <= n2; ++n) {
      if (m == 0 || n == 0) {
        f[m][n][0] = 1.0;
        continue;
      }
      for (std::size_t u = 0; u <= m * n; ++u) {
        double c = f[m][n - 1][u];  // largest is a y: no new pairs
        if (u >= n) c += f[m - 1][n][u - n];  // largest is an x: beats all n y's
        f[m][n][u] = c;
      }
    }
  }
  return f[n1][n2];
}

}  // namespace

double exact_mwu_p(std::size_t n1, std::size_t n2, double u) {
  const auto counts = u_distribution(n1, n2);
  const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
  double lower = 0.0, upper = 0.0;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    const auto kd = static_cast<double>(k);
    if (kd <= u + 1e-9) lower += counts[k];
    if (kd >= u - 1e-9) upper += counts[k];
  }
  return clamp_p(2.0 * std::min(lower, upper) / total);
}

MwuResult mwu(std::span<const double> x, std::span<const double> y) {
  if (x.empty() || y.empty()) throw ValidationError("Mann-Whitney U needs two non-empty samples");
  std::vector<double> pooled(x.begin(), x.end());
  pooled.insert(pooled.end(), y.begin(), y.end());
  for (double v : pooled) {
    if (std::isnan(v)) throw ValidationError("NaN in Mann-Whitney sample");
  }
  const Ranking rk = midranks(pooled);
  const auto n1 = static_cast<double>(x.size());
  const auto n2 = static_cast<double>(y.size());
  double rx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) rx += rk.ranks[i];
  const double ry = std::accumulate(rk.ranks.begin() + static_cast<long>(x.size()),
                                    rk.ranks.end(), 0.0);

  MwuResult r;
  r.n1 = x.size();
  r.n2 = y.size();
  r.u = rx - n1 * (n1 + 1.0) / 2.0;
  r.mean_rank_x = rx / n1;
  r.mean_rank_y = ry / n2;

  if (!rk.has_ties && pooled.size() <= kExactMaxTotal) {
    r.method = MwuMethod::Exact;
    r.p_value = exact_mwu_p(x.size(), y.size(), r.u);
    return r;
  }
  r.method = MwuMethod::NormalApprox;
  const double n = n1 + n2;
  const double mu = n1 * n2 / 2.0;
  const double var = n1 * n2 / 12.0 * ((n + 1.0) - rk.tie_term / (n * (n - 1.0)));
  if (var <= 0.0) {
    r.p_value = 1.0;
    return r;
  }
  const double z = std::max(0.0, std::abs(r.u - mu) - 0.5) / std::sqrt(var);
  r.p_value = clamp_p(std::erfc(z / std::sqrt(2.0)));
  return r;
}

BootstrapResult bootstrap_p(std::span<const double> x, std::span<const double> y,
                            std::size_t iterations, std::uint64_t seed, BootstrapMode mode) {
  if (x.empty() || y.empty()) throw ValidationError("bootstrap needs two non-empty samples");
  if (iterations == 0) throw ConfigError("bootstrap needs at least one iteration");
  const std::size_t n1 = x.size(), n2 = y.size(), n = n1 + n2;
  const double center = static_cast<double>(n1) * static_cast<double>(n2) / 2.0;
  const double offset = static_cast<double>(n1) * static_cast<double>(n1 + 1) / 2.0;

  BootstrapResult res;
  res.observed_u = mwu(x, y).u;
  res.iterations = iterations;
  res.seed = seed;
  res.mode = mode;
  res.low_iterations = iterations < kMinRecommendedIterations;
  if (res.low_iterations) {
    log::warn("bootstrap with " + std::to_string(iterations) + " iterations; at least " +
              std::to_string(kMinRecommendedIterations) + " recommended");
  }
  const double observed_dev = std::abs(res.observed_u - center);

  std::vector<double> pooled(x.begin(), x.end());
  pooled.insert(pooled.end(), y.begin(), y.end());
  // Label permutations leave the pooled ranks unchanged.
  const Ranking rk = midranks(pooled);
  std::vector<std::size_t> idx(n);
  std::vector<double> xs(n1), ys(n2);

  double sum = 0.0, sum_sq = 0.0;
  res.null_min = std::numeric_limits<double>::infinity();
  res.null_max = -std::numeric_limits<double>::infinity();
  for (std::size_t it = 0; it < iterations; ++it) {
    std::mt19937_64 rng(seed ^ static_cast<std::uint64_t>(it));
    double u = 0.0;
    if (mode == BootstrapMode::Permutation) {
      std::iota(idx.begin(), idx.end(), 0);
      double rank_sum = 0.0;
      for (std::size_t k = 0; k < n1; ++k) {
        std::uniform_int_distribution<std::size_t> pick(k, n - 1);
        std::swap(idx[k], idx[pick(rng)]);
        rank_sum += rk.ranks[idx[k]];
      }
      u = rank_sum - offset;
    } else {
      std::uniform_int_distribution<std::size_t> pick(0, n - 1);
      for (auto& v : xs) v = pooled[pick(rng)];
      for (auto& v : ys) v = pooled[pick(rng)];
      u = mwu(xs, ys).u;
    }
    if (std::abs(u - center) >= observed_dev - 1e-9) ++res.extreme;
    sum += u;
    sum_sq += u * u;
    res.null_min = std::min(res.null_min, u);
    res.null_max = std::max(res.null_max, u);
  }
  const auto iters = static_cast<double>(iterations);
  res.null_mean = sum / iters;
  res.null_sd = iterations > 1
                    ? std::sqrt(std::max(0.0, (sum_sq - iters * res.null_mean * res.null_mean) /
                                                  (iters - 1.0)))
                    : 0.0;
  res.p_value = (1.0 + static_cast<double>(res.extreme)) / (1.0 + iters);
  return res;
}

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ValidationError("pearson: length mismatch");
  if (x.size() < 2) throw ValidationError("pearson: need at least two observations");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::optional<double> point_biserial(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw ValidationError("point_biserial: length mismatch");
  bool zero = false, one = false;
  std::vector<double> coded;
  coded.reserve(labels.size());
  for (int l : labels) {
    if (l != 0 && l != 1) throw ValidationError("point_biserial: labels must be 0 or 1");
    zero = zero || l == 0;
    one = one || l == 1;
    coded.push_back(static_cast<double>(l));
  }
  if (!zero || !one) throw ValidationError("point_biserial: both labels must be present");
  return pearson(scores, coded);
}

std::optional<double> partial_correlation(std::span<const double> x, std::span<const double> y,
                                          const std::vector<std::vector<double>>& controls) {
  const std::size_t n = x.size();
  if (y.size() != n) throw ValidationError("partial_correlation: length mismatch");
  for (const auto& c : controls) {
    if (c.size() != n) throw ValidationError("partial_correlation: control length mismatch");
  }
  if (n < controls.size() + 3) {
    throw ValidationError("partial_correlation: need at least controls + 3 observations");
  }
  if (controls.empty()) return pearson(x, y);

  const auto rows = static_cast<Eigen::Index>(n);
  const auto cols = static_cast<Eigen::Index>(controls.size() + 1);
  Eigen::MatrixXd design(rows, cols);
  design.col(0).setOnes();
  for (std::size_t j = 0; j < controls.size(); ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      design(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j + 1)) = controls[j][i];
    }
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  qr.setThreshold(1e-10);
  if (qr.rank() < cols) throw ValidationError("partial_correlation: controls are rank deficient");
  Eigen::Map<const Eigen::VectorXd> vx(x.data(), rows), vy(y.data(), rows);
  const Eigen::VectorXd rx = vx - design * qr.solve(vx);
  const Eigen::VectorXd ry = vy - design * qr.solve(vy);
  return pearson(std::span<const double>(rx.data(), n), std::span<const double>(ry.data(), n));
}

std::optional<double> cronbach_alpha(const std::vector<std::vector<double>>& rows) {
  if (rows.size() < 2) throw ValidationError("cronbach_alpha: need at least two participants");
  const std::size_t k = rows.front().size();
  if (k < 2) throw ValidationError("cronbach_alpha: need at least two items");
  for (const auto& r : rows) {
    if (r.size() != k) throw ValidationError("cronbach_alpha: ragged item matrix");
  }
  const double n = static_cast<double>(rows.size());
  auto sample_var = [&](auto value_of) {
    double mean = 0.0;
    for (const auto& r : rows) mean += value_of(r);
    mean /= n;
    double ss = 0.0;
    for (const auto& r : rows) {
      const double d = value_of(r) - mean;
      ss += d * d;
    }
    return ss / (n - 1.0);
  };
  double item_var = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    item_var += sample_var([j](const std::vector<double>& r) { return r[j]; });
  }
  const double total_var = sample_var(
      [](const std::vector<double>& r) { return std::accumulate(r.begin(), r.end(), 0.0); });
  if (total_var <= 0.0) return std::nullopt;
  const double kd = static_cast<double>(k);
  return kd / (kd - 1.0) * (1.0 - item_var / total_var);
}

std::vector<CategoryTest> group_difference_report(const ScoreTable& scores,
                                                  std::span<const Participant> participants,
                                                  std::span<const std::string> categories,
                                                  std::size_t iterations, std::uint64_t seed,
                                                  BootstrapMode mode) {
  std::map<std::string_view, RiskLabel> risk;
  for (const auto& p : participants) risk.emplace(p.user_id, p.risk);

  std::vector<std::size_t> norisk_rows, atrisk_rows;
  for (std::size_t r = 0; r < scores.rows().size(); ++r) {
    auto it = risk.find(scores.rows()[r]);
    if (it == risk.end()) continue;
    if (it->second == RiskLabel::NoRisk) norisk_rows.push_back(r);
    if (it->second == RiskLabel::AtRisk) atrisk_rows.push_back(r);
  }
  if (norisk_rows.empty() || atrisk_rows.empty()) {
    throw DataError("group test needs both No-Risk and At-Risk users");
  }

  std::vector<CategoryTest> out;
  for (const auto& category : categories) {
    auto col = scores.col_index(category);
    if (!col) throw DataError("score table has no column '" + category + "'");
    std::vector<double> x, y;
    for (auto r : norisk_rows) x.push_back(scores.at(r, *col));
    for (auto r : atrisk_rows) y.push_back(scores.at(r, *col));

    CategoryTest t;
    t.category = category;
    t.mwu = mwu(x, y);
    if (t.mwu.mean_rank_x > t.mwu.mean_rank_y) {
      t.direction = Direction::NoRisk;
    } else if (t.mwu.mean_rank_y > t.mwu.mean_rank_x) {
      t.direction = Direction::AtRisk;
    }
    if (is_significant(t.mwu.p_value)) {
      t.bootstrap = bootstrap_p(x, y, iterations, seed, mode);
      t.flagged = is_significant(t.bootstrap->p_value);
    }
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace tagrisk::stats
