#pragma once

// Group tests and validity statistics.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tagrisk/model.hpp"

namespace tagrisk::stats {

enum class MwuMethod { Exact, NormalApprox };

std::string_view to_string(MwuMethod method);

struct MwuResult {
  /// U for the first sample: pairs (x_i, y_j) with x_i > y_j, ties counting
  /// one half.
  double u = 0.0;
  double mean_rank_x = 0.0;
  double mean_rank_y = 0.0;
  /// Two-tailed, in (0, 1].
  double p_value = 1.0;
  MwuMethod method = MwuMethod::Exact;
  std::size_t n1 = 0;
  std::size_t n2 = 0;
};

/// Exact enumeration is used up to this many observations when there are no
/// ties.
inline constexpr std::size_t kExactMaxTotal = 16;

/// Midranks for ties. Exact null distribution when n1 + n2 <= 16 and no ties,
/// otherwise the normal approximation with tie and continuity corrections.
/// Throws ValidationError on an empty sample.
MwuResult mwu(std::span<const double> x, std::span<const double> y);

/// Two-tailed exact p for U under the no-ties null with sample sizes n1, n2.
double exact_mwu_p(std::size_t n1, std::size_t n2, double u);

enum class BootstrapMode {
  /// Reassign group labels without replacement, preserving group sizes.
  Permutation,
  /// Draw both groups with replacement from the pooled sample.
  WithReplacement,
};

std::string_view to_string(BootstrapMode mode);
BootstrapMode bootstrap_mode_from_string(std::string_view text);

inline constexpr std::size_t kDefaultIterations = 10000;
inline constexpr std::size_t kMinRecommendedIterations = 100;

struct BootstrapResult {
  double observed_u = 0.0;
  std::size_t iterations = 0;
  std::uint64_t seed = 0;
  BootstrapMode mode = BootstrapMode::Permutation;
  /// Resamples at least as far from n1*n2/2 as the observed U.
  std::size_t extreme = 0;
  /// (1 + extreme) / (1 + iterations).
  double p_value = 1.0;
  double null_mean = 0.0;
  double null_sd = 0.0;
  double null_min = 0.0;
  double null_max = 0.0;
  /// Set when iterations < kMinRecommendedIterations.
  bool low_iterations = false;
};

/// Resampling p-value for the observed U. Iteration i draws from a generator
/// seeded with seed ^ i, so results do not depend on evaluation order.
BootstrapResult bootstrap_p(std::span<const double> x, std::span<const double> y,
                            std::size_t iterations, std::uint64_t seed,
                            BootstrapMode mode = BootstrapMode::Permutation);

/// nullopt when either variable has zero variance.
std::optional<double> pearson(std::span<const double> x, std::span<const double> y);

/// Pearson correlation against a 0/1 coding. Throws ValidationError unless
/// both labels occur; nullopt when the scores have zero variance.
std::optional<double> point_biserial(std::span<const double> scores, std::span<const int> labels);

/// Correlation of the residuals of x and y after least squares on the
/// controls plus an intercept. Throws ValidationError for short vectors or
/// rank-deficient controls.
std::optional<double> partial_correlation(std::span<const double> x, std::span<const double> y,
                                          const std::vector<std::vector<double>>& controls);

/// rows[participant][item]. Sample variances (n - 1). nullopt when the
/// total score has zero variance.
std::optional<double> cronbach_alpha(const std::vector<std::vector<double>>& rows);

inline constexpr double kSignificance = 0.05;

/// Strictly below kSignificance.
inline bool is_significant(double p) { return p < kSignificance; }

enum class Direction { NoRisk, AtRisk, None };

std::string_view to_string(Direction d);

struct CategoryTest {
  std::string category;
  /// First sample No-Risk, second At-Risk.
  MwuResult mwu;
  /// Only run when the MWU p is significant.
  std::optional<BootstrapResult> bootstrap;
  /// Group with the higher mean rank.
  Direction direction = Direction::None;
  /// Significant under both the MWU and the bootstrap.
  bool flagged = false;
};

/// One test per category over the score table rows, grouped by the
/// participants' risk labels; Excluded participants and rows without a
/// participant are skipped. Throws DataError when a group is empty.
std::vector<CategoryTest> group_difference_report(const ScoreTable& scores,
                                                  std::span<const Participant> participants,
                                                  std::span<const std::string> categories,
                                                  std::size_t iterations, std::uint64_t seed,
                                                  BootstrapMode mode = BootstrapMode::Permutation);

}  // namespace tagrisk::stats
