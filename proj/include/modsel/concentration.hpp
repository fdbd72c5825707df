#pragma once
// Anytime-valid confidence radii and elliptical-potential utilities.

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "modsel/core.hpp"

namespace modsel {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Constants of the polynomial stitched boundary (s = 1.4, eta = 2).
struct StitchedConfig {
  double eta = 2.0;
  double s = 1.4;
  double a0 = 1.44;
  double a1 = 0.41;
  double a2 = 5.2;
  double floor = 1.0;

  void validate() const {
    if (!(eta > 1.0)) throw ParameterError("stitched boundary: eta must exceed 1");
    if (!(s > 0.0 && a0 > 0.0 && a1 > 0.0 && a2 > 0.0))
      throw ParameterError("stitched boundary: constants must be positive");
    if (!(floor > 0.0)) throw ParameterError("stitched boundary: floor m must be positive");
  }
};

namespace detail {
inline void check_delta(double delta, const char* who) {
  if (!(delta > 0.0 && delta < 1.0))
    throw ParameterError(std::string(who) + ": delta must lie in (0, 1)");
}
}  // namespace detail

/// One-sided stitched Hoeffding radius for a [-1, 1]-bounded martingale with n
/// increments, union-bounded over M learners:
///   max(3, 0.85 sqrt(n (ln_+ ln_+(n/2) + 0.72 ln(10.4 M / delta)))).
inline double hoeffding_radius(PlayCount n, std::size_t learners, double delta) {
  detail::check_delta(delta, "hoeffding_radius");
  if (n < 1) throw ParameterError("hoeffding_radius: n must be >= 1");
  if (learners < 1) throw ParameterError("hoeffding_radius: M must be >= 1");
  const double nd = static_cast<double>(n);
  const double inner = ln_plus(ln_plus(nd / 2.0)) +
                       0.72 * std::log(10.4 * static_cast<double>(learners) / delta);
  return std::max(3.0, 0.85 * std::sqrt(nd * inner));
}

/// Radius on the sum of t rewards used by the epoch test:
///   0.85 sqrt(t (ln_+ ln_+(4t) + 0.72 ln(10.4 / delta))).
inline double epoch_hoeffding_radius(std::int64_t t, double delta) {
  detail::check_delta(delta, "epoch_hoeffding_radius");
  if (t < 1) throw ParameterError("epoch_hoeffding_radius: t must be >= 1");
  const double td = static_cast<double>(t);
  return 0.85 * std::sqrt(td * (ln_plus(ln_plus(4.0 * td)) + 0.72 * std::log(10.4 / delta)));
}

/// Uniform empirical-Bernstein boundary for a sub-psi_P process with scale c and
/// variance process value V.
inline double empirical_bernstein_bound(double variance, double scale, double delta,
                                        const StitchedConfig& cfg) {
  cfg.validate();
  if (!(variance >= 0.0)) throw ParameterError("empirical_bernstein_bound: V must be >= 0");
  if (!(scale > 0.0)) throw ParameterError("empirical_bernstein_bound: c must be positive");
  if (!(delta > 0.0)) throw ParameterError("empirical_bernstein_bound: delta must be positive");
  const double ratio = std::max(variance / cfg.floor, 1.0);
  const double ell = cfg.s * ln_plus(ln_plus(cfg.eta * ratio)) + std::log(cfg.a2 / delta);
  return cfg.a0 * std::sqrt(std::max(variance, cfg.floor) * ell) + cfg.a1 * scale * ell;
}

inline double empirical_bernstein_bound(double variance, double scale, double delta,
                                        double floor) {
  StitchedConfig cfg;
  cfg.floor = floor;
  return empirical_bernstein_bound(variance, scale, delta, cfg);
}

/// max(3 t p, 8.12 ln(5.2 M ln_+(2t) / delta))
inline double playcount_upper_bound(std::int64_t t, double p, std::size_t learners,
                                    double delta) {
  detail::check_delta(delta, "playcount_upper_bound");
  if (t < 1) throw ParameterError("playcount_upper_bound: t must be >= 1");
  if (!(p > 0.0 && p <= 1.0)) throw ParameterError("playcount_upper_bound: p must lie in (0, 1]");
  if (learners < 1) throw ParameterError("playcount_upper_bound: M must be >= 1");
  const double td = static_cast<double>(t);
  return std::max(3.0 * td * p,
                  8.12 * std::log(5.2 * static_cast<double>(learners) * ln_plus(2.0 * td) / delta));
}

/// max(1, (4/p)(1+b) ln(ln_+(2bn v 2) * 5.2 * detV_ratio / delta))
inline double randomized_elliptical_bound(std::int64_t n, double cap, double p, double delta,
                                          double det_ratio) {
  detail::check_delta(delta, "randomized_elliptical_bound");
  if (!(p > 0.0 && p <= 1.0))
    throw ParameterError("randomized_elliptical_bound: p must lie in (0, 1]");
  if (!(cap > 0.0)) throw ParameterError("randomized_elliptical_bound: b must be positive");
  if (!(det_ratio >= 1.0 - kTolerance))
    throw ParameterError("randomized_elliptical_bound: det ratio must be >= 1");
  const double nd = static_cast<double>(std::max<std::int64_t>(n, 0));
  const double inner = ln_plus(std::max(2.0 * cap * nd, 2.0)) * 5.2 * det_ratio / delta;
  return std::max(1.0, (4.0 / p) * (1.0 + cap) * std::log(inner));
}

/// V_t = V_0 + sum of weighted outer products, with its Cholesky factor and
/// ln det V_t kept current by rank-one updates. The factor is rebuilt from the
/// exact matrix every `refactor_period` updates.
class GramAccumulator {
 public:
  static constexpr long kDefaultRefactorPeriod = 512;

  GramAccumulator() = default;

  explicit GramAccumulator(Matrix v0, long refactor_period = kDefaultRefactorPeriod)
      : matrix_(std::move(v0)), refactor_period_(refactor_period) {
    if (matrix_.rows() != matrix_.cols() || matrix_.rows() == 0)
      throw ParameterError("Gram matrix must be square and non-empty");
    if (!matrix_.isApprox(matrix_.transpose(), 1e-12))
      throw ParameterError("Gram matrix must be symmetric");
    factor_.compute(matrix_);
    if (factor_.info() != Eigen::Success || !positive_pivots())
      throw ParameterError("Gram matrix must be positive definite");
    log_det_ = factor_log_det();
    log_det0_ = log_det_;
  }

  static GramAccumulator scaled_identity(Eigen::Index dim, double lambda) {
    if (!(lambda > 0.0)) throw ParameterError("regularization must be positive");
    return GramAccumulator(lambda * Matrix::Identity(dim, dim));
  }

  Eigen::Index dim() const { return matrix_.rows(); }
  long updates() const { return updates_; }
  const Matrix& matrix() const { return matrix_; }
  double log_det() const { return log_det_; }
  double log_det_initial() const { return log_det0_; }
  double log_det_ratio() const { return log_det_ - log_det0_; }

  /// x^T V^{-1} x
  double inverse_norm_sq(const Eigen::Ref<const Vector>& x) const {
    Vector y = factor_.matrixL().solve(x);
    return y.squaredNorm();
  }

  /// Column-wise x^T V^{-1} x for every column of xs.
  Vector inverse_norms_sq(const Eigen::Ref<const Matrix>& xs) const {
    Matrix y = factor_.matrixL().solve(xs);
    return y.colwise().squaredNorm().transpose();
  }

  Vector solve(const Eigen::Ref<const Vector>& b) const { return factor_.solve(b); }

  /// V <- V + w x x^T. Returns x^T V_prev^{-1} x.
  double update(const Eigen::Ref<const Vector>& x, double weight = 1.0) {
    const double q = inverse_norm_sq(x);
    matrix_.noalias() += weight * x * x.transpose();
    ++updates_;
    if (refactor_period_ > 0 && updates_ % refactor_period_ == 0) {
      factor_.compute(matrix_);
      log_det_ = factor_log_det();
    } else {
      factor_.rankUpdate(x, weight);
      log_det_ += std::log1p(weight * q);
    }
    return q;
  }

 private:
  bool positive_pivots() const {
    const auto diag = factor_.matrixLLT().diagonal();
    return (diag.array() > 0.0).all() && diag.allFinite();
  }
  double factor_log_det() const {
    return 2.0 * factor_.matrixLLT().diagonal().array().log().sum();
  }

  Matrix matrix_;
  Eigen::LLT<Matrix> factor_;
  double log_det_ = 0.0;
  double log_det0_ = 0.0;
  long updates_ = 0;
  long refactor_period_ = kDefaultRefactorPeriod;
};

struct EllipticalPotentialResult {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = true;
};

/// Deterministic elliptical potential inequality
///   sum_t min(b, |x_t|^2_{V_{t-1}^{-1}}) <= (1 + b) ln(det V_n / det V_0).
inline EllipticalPotentialResult elliptical_potential_check(std::span<const Vector> xs,
                                                            const Matrix& v0, double cap) {
  if (!(cap > 0.0)) throw ParameterError("elliptical_potential_check: b must be positive");
  GramAccumulator gram(v0);
  EllipticalPotentialResult out;
  for (const auto& x : xs) {
    if (x.size() != gram.dim())
      throw ParameterError("elliptical_potential_check: dimension mismatch");
    out.lhs += std::min(cap, gram.update(x));
  }
  out.rhs = (1.0 + cap) * gram.log_det_ratio();
  out.holds = out.lhs <= out.rhs + 1e-9 * std::max(1.0, out.rhs);
  return out;
}

}  // namespace modsel
