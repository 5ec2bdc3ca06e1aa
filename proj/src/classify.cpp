#include "tagrisk/classify.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "tagrisk/error.hpp"
#include "tagrisk/log.hpp"

namespace tagrisk::classify {

TagVectors tag_vectors(const std::set<std::string>& tags, const induction::EmbeddingTable& table) {
  TagVectors out;
  for (const auto& t : tags) {
    if (auto v = induction::embed_phrase(table, t)) out.emplace(t, std::move(*v));
  }
  return out;
}

UserFeature user_embedding(const ListeningHistory& history,
                           const scoring::AssociationIndex& tag_associations,
                           const TagVectors& vectors, std::size_t dim) {
  UserFeature f;
  f.user_id = history.user_id;
  f.tag_scores = scoring::user_tag_scores(history, tag_associations);
  f.embedding = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
  bool any = false;
  for (const auto& [tag, ts] : f.tag_scores) {
    auto it = vectors.find(tag);
    if (it == vectors.end()) continue;
    if (it->second.size() != dim) throw ValidationError("tag vector for '" + tag + "' has wrong size");
    f.embedding += ts * Eigen::Map<const Eigen::VectorXd>(it->second.data(),
                                                           static_cast<Eigen::Index>(dim));
    any = true;
  }
  if (!any) log::warn("user " + history.user_id + " has no embeddable tags; using a zero vector");
  return f;
}

Standardizer Standardizer::fit(const Eigen::MatrixXd& x) {
  if (x.rows() == 0) throw ValidationError("cannot standardize an empty matrix");
  Standardizer s;
  s.mean = x.colwise().mean();
  const Eigen::MatrixXd centered = x.rowwise() - s.mean;
  const double denom = x.rows() > 1 ? static_cast<double>(x.rows() - 1) : 1.0;
  s.scale = (centered.array().square().colwise().sum() / denom).sqrt().matrix();
  for (Eigen::Index j = 0; j < s.scale.size(); ++j) {
    if (!(s.scale(j) > 1e-12)) s.scale(j) = 1.0;
  }
  return s;
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& x) const {
  if (x.cols() != mean.size()) throw ValidationError("standardizer dimension mismatch");
  return ((x.rowwise() - mean).array().rowwise() / scale.array()).matrix();
}

namespace {

void check_binary(std::span<const int> labels, Eigen::Index rows) {
  if (static_cast<Eigen::Index>(labels.size()) != rows) {
    throw ValidationError("label count does not match the feature rows");
  }
  bool zero = false, one = false;
  for (int l : labels) {
    if (l != 0 && l != 1) throw ValidationError("labels must be 0 or 1");
    zero = zero || l == 0;
    one = one || l == 1;
  }
  if (!zero || !one) throw ValidationError("both classes must be present");
}

void check_finite(const Eigen::MatrixXd& x) {
  if (!x.allFinite()) throw ValidationError("non-finite feature value");
}

// log(1 + exp(-m)) without overflow.
double log1pexp_neg(double m) {
  return m > 0 ? std::log1p(std::exp(-m)) : -m + std::log1p(std::exp(m));
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

struct LogisticState {
  const Eigen::MatrixXd& z;  // standardized features
  Eigen::VectorXd sign;      // +1 / -1
  Eigen::VectorXd margin;    // b + z w
  double n;

  double loss_with(Eigen::Index col, double step) const {
    double s = 0.0;
    for (Eigen::Index i = 0; i < margin.size(); ++i) {
      const double m = margin(i) + (col < 0 ? step : step * z(i, col));
      s += log1pexp_neg(sign(i) * m);
    }
    return s / n;
  }
};

}  // namespace

double lambda_max(const Eigen::MatrixXd& x, std::span<const int> labels) {
  check_binary(labels, x.rows());
  const Eigen::MatrixXd z = Standardizer::fit(x).apply(x);
  const double n = static_cast<double>(x.rows());
  Eigen::VectorXd y(x.rows());
  for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = labels[static_cast<std::size_t>(i)];
  const double ybar = y.mean();
  return ((z.transpose() * (y.array() - ybar).matrix()).cwiseAbs().maxCoeff()) / n;
}

LogisticFit l1_logistic_fit(const Eigen::MatrixXd& x, std::span<const int> labels, double lambda,
                            const LogisticConfig& config, const LogisticFit* warm_start) {
  check_binary(labels, x.rows());
  check_finite(x);
  if (lambda < 0.0) throw ConfigError("lambda must be non-negative");
  const auto p = x.cols();
  const Standardizer st = Standardizer::fit(x);
  const Eigen::MatrixXd z = st.apply(x);

  LogisticState s{z, Eigen::VectorXd(x.rows()), Eigen::VectorXd(x.rows()),
                  static_cast<double>(x.rows())};
  double pos = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    s.sign(i) = labels[static_cast<std::size_t>(i)] == 1 ? 1.0 : -1.0;
    pos += labels[static_cast<std::size_t>(i)];
  }

  Eigen::VectorXd w = Eigen::VectorXd::Zero(p);
  double b = std::log(pos / (s.n - pos));
  if (warm_start && warm_start->coef_std.size() == p) {
    w = warm_start->coef_std;
    b = warm_start->intercept_std;
  }
  s.margin = (z * w).array() + b;
  double loss = s.loss_with(-1, 0.0);

  constexpr double kSigma = 0.01;
  constexpr int kMaxHalvings = 40;
  Eigen::VectorXd prob(x.rows());
  auto refresh_prob = [&] {
    for (Eigen::Index i = 0; i < prob.size(); ++i) prob(i) = sigmoid(s.margin(i));
  };
  // One Newton step with line search on coordinate col (-1: intercept).
  // Returns the size of the accepted change.
  auto step = [&](Eigen::Index col) -> double {
    double g = 0.0, h = 0.0;
    for (Eigen::Index i = 0; i < prob.size(); ++i) {
      const double xi = col < 0 ? 1.0 : z(i, col);
      const double yi = s.sign(i) > 0 ? 1.0 : 0.0;
      g += (prob(i) - yi) * xi;
      h += prob(i) * (1.0 - prob(i)) * xi * xi;
    }
    g /= s.n;
    h = h / s.n + 1e-12;
    const double wj = col < 0 ? b : w(col);
    const double pen = col < 0 ? 0.0 : lambda;
    double d;
    if (g + pen <= h * wj) d = -(g + pen) / h;
    else if (g - pen >= h * wj) d = -(g - pen) / h;
    else d = -wj;
    if (d == 0.0) return 0.0;
    const double delta = g * d + pen * (std::abs(wj + d) - std::abs(wj));
    double a = 1.0;
    for (int k = 0; k < kMaxHalvings; ++k, a *= 0.5) {
      const double trial = s.loss_with(col, a * d);
      if (trial + pen * std::abs(wj + a * d) - loss - pen * std::abs(wj) <= kSigma * a * delta) {
        loss = trial;
        if (col < 0) {
          b += a * d;
          s.margin.array() += a * d;
        } else {
          w(col) += a * d;
          s.margin += (a * d) * z.col(col);
        }
        refresh_prob();
        return std::abs(a * d);
      }
    }
    return 0.0;
  };

  refresh_prob();
  LogisticFit fit;
  int sweep = 0;
  auto objective = [&] { return loss + lambda * w.lpNorm<1>(); };
  for (; sweep < config.max_sweeps; ++sweep) {
    const double before = objective();
    double biggest = step(-1);
    for (Eigen::Index j = 0; j < p; ++j) biggest = std::max(biggest, step(j));
    if (biggest < config.tol) break;
    // correlated columns make steps shrink slowly long after the objective settles
    if (before - objective() <= config.tol * 1e-2 * std::max(1.0, std::abs(before))) break;
  }
  if (sweep == config.max_sweeps) {
    log::warn("L1 logistic fit stopped at the sweep limit");
  }

  fit.lambda = lambda;
  fit.sweeps = sweep + 1;
  fit.coef_std = w;
  fit.intercept_std = b;
  fit.coef = (w.array() / st.scale.transpose().array()).matrix();
  fit.intercept = b - (fit.coef.array() * st.mean.transpose().array()).sum();
  for (Eigen::Index j = 0; j < p; ++j) {
    if (w(j) != 0.0) fit.selected.push_back(static_cast<std::size_t>(j));
  }
  return fit;
}

std::vector<std::size_t> stratified_folds(std::span<const int> labels, std::size_t folds,
                                          std::uint64_t seed) {
  if (folds < 2) throw ConfigError("need at least two folds");
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw ValidationError("labels must be 0 or 1");
    by_class[labels[i]].push_back(i);
  }
  for (const auto& c : by_class) {
    if (c.size() < folds) {
      throw ValidationError("too few samples: each class needs at least one per fold");
    }
  }
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> out(labels.size(), 0);
  std::size_t next = 0;
  for (auto& c : by_class) {
    std::shuffle(c.begin(), c.end(), rng);
    for (auto i : c) out[i] = next++ % folds;
  }
  return out;
}

namespace {

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& x, const std::vector<std::size_t>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    out.row(static_cast<Eigen::Index>(k)) = x.row(static_cast<Eigen::Index>(rows[k]));
  }
  return out;
}

Eigen::MatrixXd take_cols(const Eigen::MatrixXd& x, const std::vector<std::size_t>& cols) {
  Eigen::MatrixXd out(x.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) {
    out.col(static_cast<Eigen::Index>(k)) = x.col(static_cast<Eigen::Index>(cols[k]));
  }
  return out;
}

std::vector<int> take(std::span<const int> v, const std::vector<std::size_t>& idx) {
  std::vector<int> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(v[i]);
  return out;
}

}  // namespace

LambdaChoice choose_lambda(const Eigen::MatrixXd& x, std::span<const int> labels,
                           const LambdaSearch& search) {
  if (search.grid_size < 1) throw ConfigError("lambda grid needs at least one value");
  if (!(search.min_ratio > 0.0 && search.min_ratio < 1.0)) {
    throw ConfigError("lambda min_ratio must lie in (0, 1)");
  }
  LambdaChoice choice;
  const double top = lambda_max(x, labels);
  for (std::size_t k = 0; k < search.grid_size; ++k) {
    const double e = search.grid_size > 1
                         ? static_cast<double>(k) / static_cast<double>(search.grid_size - 1)
                         : 0.0;
    choice.grid.push_back(top * std::pow(search.min_ratio, e));
  }

  const auto fold_of = stratified_folds(labels, search.folds, search.seed);
  std::vector<std::vector<double>> losses(search.grid_size);
  for (std::size_t f = 0; f < search.folds; ++f) {
    std::vector<std::size_t> tr, te;
    for (std::size_t i = 0; i < fold_of.size(); ++i) (fold_of[i] == f ? te : tr).push_back(i);
    const Eigen::MatrixXd xtr = take_rows(x, tr), xte = take_rows(x, te);
    const auto ytr = take(labels, tr), yte = take(labels, te);
    std::optional<LogisticFit> prev;
    for (std::size_t k = 0; k < search.grid_size; ++k) {
      prev = l1_logistic_fit(xtr, ytr, choice.grid[k], {}, prev ? &*prev : nullptr);
      for (std::size_t i = 0; i < te.size(); ++i) {
        const double m = prev->intercept + xte.row(static_cast<Eigen::Index>(i)).dot(prev->coef);
        losses[k].push_back(log1pexp_neg(yte[i] == 1 ? m : -m));
      }
    }
  }

  // standard error over the pooled held-out samples; three fold means give a noisy one
  std::vector<double> se(search.grid_size);
  for (std::size_t k = 0; k < search.grid_size; ++k) {
    const auto& l = losses[k];
    const double mean = std::accumulate(l.begin(), l.end(), 0.0) / static_cast<double>(l.size());
    double ss = 0.0;
    for (double v : l) ss += (v - mean) * (v - mean);
    choice.cv_loss.push_back(mean);
    se[k] = std::sqrt(ss / static_cast<double>(l.size() - 1) / static_cast<double>(l.size()));
  }
  const auto best = static_cast<std::size_t>(
      std::min_element(choice.cv_loss.begin(), choice.cv_loss.end()) - choice.cv_loss.begin());
  std::size_t pick = best;
  for (std::size_t k = 0; k <= best; ++k) {
    if (choice.cv_loss[k] <= choice.cv_loss[best] + se[best]) {
      pick = k;
      break;
    }
  }
  choice.lambda = choice.grid[pick];
  return choice;
}

double rbf_kernel(std::span<const double> a, std::span<const double> b, double gamma) {
  if (a.size() != b.size()) throw ValidationError("kernel inputs differ in dimension");
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] - b[i]) * (a[i] - b[i]);
  return std::exp(-gamma * d);
}

namespace {

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& x, double gamma) {
  const Eigen::VectorXd sq = x.rowwise().squaredNorm();
  Eigen::MatrixXd k = x * x.transpose();
  k = ((-2.0 * k).colwise() + sq).rowwise() + sq.transpose();
  return (-gamma * k.array().max(0.0)).exp().matrix();
}

}  // namespace

double svm_dual_objective(const Eigen::MatrixXd& x, std::span<const int> labels,
                          const Eigen::VectorXd& alpha, double gamma) {
  const Eigen::MatrixXd k = kernel_matrix(x, gamma);
  Eigen::VectorXd ya(alpha.size());
  for (Eigen::Index i = 0; i < ya.size(); ++i) {
    ya(i) = alpha(i) * (labels[static_cast<std::size_t>(i)] == 1 ? 1.0 : -1.0);
  }
  return alpha.sum() - 0.5 * ya.dot(k * ya);
}

SvmModel svm_train(const Eigen::MatrixXd& x, std::span<const int> labels, const SvmConfig& cfg) {
  check_binary(labels, x.rows());
  check_finite(x);
  if (!(cfg.c > 0.0) || !(cfg.gamma > 0.0) || !(cfg.tol > 0.0)) {
    throw ConfigError("SVM C, gamma and tol must be positive");
  }
  const Eigen::Index n = x.rows();
  const Eigen::MatrixXd k = kernel_matrix(x, cfg.gamma);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) y(i) = labels[static_cast<std::size_t>(i)] == 1 ? 1.0 : -1.0;
  const double c = cfg.c;
  constexpr double kTau = 1e-12;

  Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd g = Eigen::VectorXd::Constant(n, -1.0);
  auto upper = [&](Eigen::Index t) { return a(t) >= c; };
  auto lower = [&](Eigen::Index t) { return a(t) <= 0.0; };
  auto q = [&](Eigen::Index i, Eigen::Index j) { return y(i) * y(j) * k(i, j); };

  SvmModel m;
  m.c = c;
  m.gamma = cfg.gamma;
  m.tol = cfg.tol;
  std::size_t iter = 0;
  for (;; ++iter) {
    if (iter >= cfg.max_iterations) {
      throw ConvergenceError("SMO did not converge within " + std::to_string(cfg.max_iterations) +
                             " iterations");
    }
    double gmax = -std::numeric_limits<double>::infinity();
    Eigen::Index i = -1;
    for (Eigen::Index t = 0; t < n; ++t) {
      if (y(t) > 0 ? !upper(t) : !lower(t)) {
        const double v = -y(t) * g(t);
        if (v >= gmax) {
          gmax = v;
          i = t;
        }
      }
    }
    double gmax2 = -std::numeric_limits<double>::infinity();
    double best_obj = std::numeric_limits<double>::infinity();
    Eigen::Index j = -1;
    for (Eigen::Index t = 0; t < n; ++t) {
      if (y(t) > 0 ? lower(t) : upper(t)) continue;
      const double v = y(t) * g(t);
      gmax2 = std::max(gmax2, v);
      const double diff = gmax + v;
      if (i >= 0 && diff > 0.0) {
        double quad = k(i, i) + k(t, t) - 2.0 * k(i, t);
        if (quad <= 0.0) quad = kTau;
        const double obj = -diff * diff / quad;
        if (obj <= best_obj) {
          best_obj = obj;
          j = t;
        }
      }
    }
    if (i < 0 || j < 0 || gmax + gmax2 < cfg.tol) break;

    const double ai = a(i), aj = a(j);
    if (y(i) != y(j)) {
      double quad = k(i, i) + k(j, j) + 2.0 * q(i, j);
      if (quad <= 0.0) quad = kTau;
      const double delta = (-g(i) - g(j)) / quad;
      const double diff = ai - aj;
      a(i) += delta;
      a(j) += delta;
      if (diff > 0.0) {
        if (a(j) < 0.0) {
          a(j) = 0.0;
          a(i) = diff;
        }
      } else if (a(i) < 0.0) {
        a(i) = 0.0;
        a(j) = -diff;
      }
      if (diff > 0.0) {
        if (a(i) > c) {
          a(i) = c;
          a(j) = c - diff;
        }
      } else if (a(j) > c) {
        a(j) = c;
        a(i) = c + diff;
      }
    } else {
      double quad = k(i, i) + k(j, j) - 2.0 * q(i, j);
      if (quad <= 0.0) quad = kTau;
      const double delta = (g(i) - g(j)) / quad;
      const double sum = ai + aj;
      a(i) -= delta;
      a(j) += delta;
      if (sum > c) {
        if (a(i) > c) {
          a(i) = c;
          a(j) = sum - c;
        }
      } else if (a(j) < 0.0) {
        a(j) = 0.0;
        a(i) = sum;
      }
      if (sum > c) {
        if (a(j) > c) {
          a(j) = c;
          a(i) = sum - c;
        }
      } else if (a(i) < 0.0) {
        a(i) = 0.0;
        a(j) = sum;
      }
    }
    const double di = a(i) - ai, dj = a(j) - aj;
    for (Eigen::Index t = 0; t < n; ++t) g(t) += q(t, i) * di + q(t, j) * dj;
    if (cfg.record_objective) m.objective.push_back(-0.5 * a.dot(g - Eigen::VectorXd::Ones(n)));
  }

  double ub = std::numeric_limits<double>::infinity(), lb = -ub, sum = 0.0;
  int free = 0;
  for (Eigen::Index t = 0; t < n; ++t) {
    const double yg = y(t) * g(t);
    if (upper(t)) {
      if (y(t) < 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else if (lower(t)) {
      if (y(t) > 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else {
      ++free;
      sum += yg;
    }
  }
  const double rho = free > 0 ? sum / free : 0.5 * (ub + lb);

  m.bias = -rho;
  m.alpha = a;
  m.iterations = iter;
  std::vector<Eigen::Index> sv;
  for (Eigen::Index t = 0; t < n; ++t) {
    if (a(t) > 0.0) sv.push_back(t);
  }
  m.support.resize(static_cast<Eigen::Index>(sv.size()), x.cols());
  m.coef.resize(static_cast<Eigen::Index>(sv.size()));
  for (std::size_t s = 0; s < sv.size(); ++s) {
    m.support.row(static_cast<Eigen::Index>(s)) = x.row(sv[s]);
    m.coef(static_cast<Eigen::Index>(s)) = a(sv[s]) * y(sv[s]);
  }
  return m;
}

SvmPrediction svm_predict(const SvmModel& model, std::span<const double> x) {
  if (static_cast<Eigen::Index>(x.size()) != model.support.cols()) {
    throw ValidationError("feature has " + std::to_string(x.size()) + " dimensions, model expects " +
                          std::to_string(model.support.cols()));
  }
  double f = model.bias;
  const Eigen::Map<const Eigen::RowVectorXd> v(x.data(), static_cast<Eigen::Index>(x.size()));
  for (Eigen::Index s = 0; s < model.support.rows(); ++s) {
    f += model.coef(s) * std::exp(-model.gamma * (model.support.row(s) - v).squaredNorm());
  }
  return {f >= 0.0 ? 1 : 0, f};
}

void save_model(std::ostream& out, const SvmModel& m) {
  out.precision(17);
  out << "tagrisk-svm 1\n"
      << "kernel rbf\n"
      << "gamma " << m.gamma << "\n"
      << "c " << m.c << "\n"
      << "tol " << m.tol << "\n"
      << "bias " << m.bias << "\n"
      << "support " << m.support.rows() << ' ' << m.support.cols() << "\n";
  for (Eigen::Index s = 0; s < m.support.rows(); ++s) {
    out << m.coef(s);
    for (Eigen::Index d = 0; d < m.support.cols(); ++d) out << ' ' << m.support(s, d);
    out << '\n';
  }
}

SvmModel load_model(std::istream& in) {
  long line = 0;
  std::string text;
  auto next = [&](std::string_view key) {
    ++line;
    if (!std::getline(in, text)) throw ParseError("truncated SVM model", line);
    std::istringstream s(text);
    std::string k;
    s >> k;
    if (k != key) throw ParseError("expected '" + std::string(key) + "'", line);
    return s;
  };
  auto version = next("tagrisk-svm");
  int v = 0;
  version >> v;
  if (v != 1) throw ParseError("unsupported SVM model version", line);
  std::string kernel;
  next("kernel") >> kernel;
  if (kernel != "rbf") throw ParseError("unsupported kernel '" + kernel + "'", line);
  SvmModel m;
  if (!(next("gamma") >> m.gamma) || !(next("c") >> m.c) || !(next("tol") >> m.tol) ||
      !(next("bias") >> m.bias)) {
    throw ParseError("bad SVM parameter", line);
  }
  Eigen::Index rows = 0, cols = 0;
  if (!(next("support") >> rows >> cols) || rows < 0 || cols < 0) {
    throw ParseError("bad support header", line);
  }
  m.support.resize(rows, cols);
  m.coef.resize(rows);
  for (Eigen::Index s = 0; s < rows; ++s) {
    ++line;
    if (!std::getline(in, text)) throw ParseError("truncated support vectors", line);
    std::istringstream row(text);
    if (!(row >> m.coef(s))) throw ParseError("bad coefficient", line);
    for (Eigen::Index d = 0; d < cols; ++d) {
      if (!(row >> m.support(s, d))) throw ParseError("short support vector", line);
    }
  }
  return m;
}

CvResult cross_validate(const Eigen::MatrixXd& x, std::span<const int> labels,
                        const CvConfig& config) {
  check_binary(labels, x.rows());
  check_finite(x);
  const auto fold_of = stratified_folds(labels, config.folds, config.seed);
  CvResult result;
  double total = 0.0;
  for (std::size_t f = 0; f < config.folds; ++f) {
    std::vector<std::size_t> tr, te;
    for (std::size_t i = 0; i < fold_of.size(); ++i) (fold_of[i] == f ? te : tr).push_back(i);
    const auto ytr = take(labels, tr), yte = take(labels, te);
    const Standardizer st = Standardizer::fit(take_rows(x, tr));
    const Eigen::MatrixXd ztr = st.apply(take_rows(x, tr));
    const Eigen::MatrixXd zte = st.apply(take_rows(x, te));

    FoldResult fr;
    fr.test_size = te.size();
    if (config.lambda) {
      fr.lambda = *config.lambda;
    } else {
      LambdaSearch search = config.search;
      search.seed = config.search.seed ^ (config.seed + f + 1);
      fr.lambda = choose_lambda(ztr, ytr, search).lambda;
    }
    fr.selected = l1_logistic_fit(ztr, ytr, fr.lambda).selected;

    std::size_t correct = 0;
    if (fr.selected.empty()) {
      const auto pos = static_cast<std::size_t>(std::count(ytr.begin(), ytr.end(), 1));
      const int majority = 2 * pos >= ytr.size() ? 1 : 0;
      correct = static_cast<std::size_t>(std::count(yte.begin(), yte.end(), majority));
    } else {
      const SvmModel model = svm_train(take_cols(ztr, fr.selected), ytr, config.svm);
      const Eigen::MatrixXd sel = take_cols(zte, fr.selected);
      for (Eigen::Index i = 0; i < sel.rows(); ++i) {
        const Eigen::RowVectorXd row = sel.row(i);
        const auto pred = svm_predict(model, std::span<const double>(row.data(), row.size()));
        if (pred.label == yte[static_cast<std::size_t>(i)]) ++correct;
      }
    }
    fr.accuracy = static_cast<double>(correct) / static_cast<double>(te.size());
    total += fr.accuracy;
    result.folds.push_back(std::move(fr));
  }
  result.mean_accuracy = total / static_cast<double>(config.folds);
  return result;
}

}  // namespace tagrisk::classify
