#pragma once

// Risk-group prediction from tag-weighted user embeddings: L1-logistic
// feature selection followed by an RBF-kernel SVM, evaluated by stratified
// cross-validation. Labels are 0 (No-Risk) and 1 (At-Risk).

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tagrisk/induction.hpp"
#include "tagrisk/model.hpp"
#include "tagrisk/scoring.hpp"

namespace tagrisk::classify {

using TagVectors = std::map<std::string, std::vector<double>>;

/// Vectors for the tags that can be embedded; the rest are skipped.
TagVectors tag_vectors(const std::set<std::string>& tags, const induction::EmbeddingTable& table);

struct UserFeature {
  std::string user_id;
  Eigen::VectorXd embedding;
  /// ts_{u,t}; zero scores omitted.
  std::map<std::string, double> tag_scores;
  std::optional<std::vector<std::size_t>> selected_dims;
};

/// E_u = sum_t ts_{u,t} * ft_t over the tags that have a vector. A user
/// with no such tag gets the zero vector and a warning.
UserFeature user_embedding(const ListeningHistory& history,
                           const scoring::AssociationIndex& tag_associations,
                           const TagVectors& vectors, std::size_t dim);

/// Column means and standard deviations; zero deviations become 1.
struct Standardizer {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd scale;

  static Standardizer fit(const Eigen::MatrixXd& x);
  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
};

// ---------------------------------------------------------------------------
// L1-regularized logistic regression
// ---------------------------------------------------------------------------

struct LogisticFit {
  /// Coefficients on standardized features.
  Eigen::VectorXd coef_std;
  double intercept_std = 0.0;
  /// The same model expressed on the raw features.
  Eigen::VectorXd coef;
  double intercept = 0.0;
  std::vector<std::size_t> selected;
  double lambda = 0.0;
  int sweeps = 0;
};

struct LogisticConfig {
  double tol = 1e-6;
  int max_sweeps = 5000;
};

/// Minimizes the mean logistic loss plus lambda * |w|_1 (intercept not
/// penalized) by coordinate descent with Newton steps and a line search, on
/// internally standardized features. Throws ValidationError unless both
/// labels occur.
LogisticFit l1_logistic_fit(const Eigen::MatrixXd& x, std::span<const int> labels, double lambda,
                            const LogisticConfig& config = {},
                            const LogisticFit* warm_start = nullptr);

/// Smallest lambda at which every coefficient is zero.
double lambda_max(const Eigen::MatrixXd& x, std::span<const int> labels);

struct LambdaSearch {
  std::size_t folds = 3;
  std::size_t grid_size = 20;
  double min_ratio = 1e-2;
  std::uint64_t seed = 0;
};

struct LambdaChoice {
  double lambda = 0.0;
  std::vector<double> grid;
  /// Mean held-out log loss per grid value.
  std::vector<double> cv_loss;
};

/// Log-spaced grid from lambda_max down; picks the largest lambda whose
/// held-out loss is within one standard error of the best.
LambdaChoice choose_lambda(const Eigen::MatrixXd& x, std::span<const int> labels,
                           const LambdaSearch& search);

// ---------------------------------------------------------------------------
// SVM
// ---------------------------------------------------------------------------

struct SvmConfig {
  double c = 2301.0;
  double gamma = 101.0;
  /// Stop once the maximal KKT violation pair gap falls below this.
  double tol = 1e-3;
  std::size_t max_iterations = 10'000'000;
  bool record_objective = false;
};

struct SvmModel {
  double c = 0.0;
  double gamma = 0.0;
  double tol = 0.0;
  /// Rows are support vectors.
  Eigen::MatrixXd support;
  /// alpha_i * y_i per support vector, y in {-1, +1}.
  Eigen::VectorXd coef;
  double bias = 0.0;
  /// Dual variables for every training point.
  Eigen::VectorXd alpha;
  std::size_t iterations = 0;
  /// Dual objective sum(alpha) - 0.5 alpha'Q alpha after each iteration.
  std::vector<double> objective;
};

double rbf_kernel(std::span<const double> a, std::span<const double> b, double gamma);

/// SMO with second-order working set selection on the full kernel matrix.
/// Throws ValidationError for non-finite features or a single class, and
/// ConvergenceError when max_iterations is reached.
SvmModel svm_train(const Eigen::MatrixXd& x, std::span<const int> labels, const SvmConfig& config);

/// Dual objective for the given multipliers.
double svm_dual_objective(const Eigen::MatrixXd& x, std::span<const int> labels,
                          const Eigen::VectorXd& alpha, double gamma);

struct SvmPrediction {
  int label = 0;
  double decision = 0.0;
};

/// Decision value sum_i coef_i K(sv_i, x) + bias; label 1 when >= 0.
SvmPrediction svm_predict(const SvmModel& model, std::span<const double> x);

void save_model(std::ostream& out, const SvmModel& model);
SvmModel load_model(std::istream& in);

// ---------------------------------------------------------------------------
// Cross-validation
// ---------------------------------------------------------------------------

/// Fold index per sample. Each class is shuffled with a generator seeded by
/// seed and dealt round robin, so every fold holds its share of each class
/// to within one sample. Throws ValidationError when a class has fewer
/// samples than folds.
std::vector<std::size_t> stratified_folds(std::span<const int> labels, std::size_t folds,
                                          std::uint64_t seed);

struct CvConfig {
  std::size_t folds = 5;
  std::uint64_t seed = 0;
  SvmConfig svm;
  /// Fixed lambda; searched on each training fold when absent.
  std::optional<double> lambda;
  LambdaSearch search;
};

struct FoldResult {
  double accuracy = 0.0;
  std::size_t test_size = 0;
  double lambda = 0.0;
  std::vector<std::size_t> selected;
};

struct CvResult {
  double mean_accuracy = 0.0;
  std::vector<FoldResult> folds;
};

/// Standardization, lambda choice and selection are fit on each training
/// fold only. An empty selection predicts the training fold's majority
/// label (1 on ties).
CvResult cross_validate(const Eigen::MatrixXd& x, std::span<const int> labels,
                        const CvConfig& config);

/// Reference accuracy and hyperparameters reported for the original cohort.
inline constexpr double kReferenceAccuracy = 0.664;
inline constexpr double kReferenceC = 2301.0;
inline constexpr double kReferenceGamma = 101.0;

}  // namespace tagrisk::classify
