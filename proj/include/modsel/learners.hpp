#pragma once
// Base-learner contract, OFUL with its variants, and scripted test learners.

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <string>

#include "modsel/concentration.hpp"
#include "modsel/core.hpp"

namespace modsel {

/// What a learner would play on the current action set.
struct Proposal {
  std::size_t index = 0;        ///< column of the action set
  double mean_estimate = 0.0;   ///< <theta_hat, a>
  double width = 0.0;           ///< beta * |a|_{Sigma^{-1}}
  double score = 0.0;           ///< optimistic value, capped at +R^max
  double lower = 0.0;           ///< lower-confidence value B, floored at -R^max
};

struct LearnerDescriptor {
  std::string name;
  Eigen::Index dim = 1;   ///< d_i
  double param_norm = 1.0;   ///< S_i
  double action_norm = 1.0;  ///< L_i
  double reward_range = 1.0; ///< R^max_i
};

/// Behavioural interface every base learner implements. propose() must be a
/// pure function of the internal state and the action set; observe() advances
/// the learner by exactly one round.
class BaseLearner {
 public:
  virtual ~BaseLearner() = default;

  /// Actions are the columns of `action_set`.
  virtual Proposal propose(const Matrix& action_set) const = 0;
  virtual void observe(const Eigen::Ref<const Vector>& action, double reward,
                       bool on_policy = true) = 0;
  virtual const CandidateBound& presumed_bound() const = 0;
  /// Presumed regret after the learner's own plays so far.
  virtual double presumed_bound_value() const = 0;
  virtual LearnerDescriptor descriptor() const = 0;
  virtual std::int64_t rounds() const = 0;
  virtual std::unique_ptr<BaseLearner> clone() const = 0;
};

using LearnerPtr = std::unique_ptr<BaseLearner>;

// ---------------------------------------------------------------------------
// OFUL

struct OfulConfig {
  Eigen::Index dim = 2;  ///< truncation dimension d_i
  double lambda = 1.0;
  double sigma = 1.0;
  double param_norm = 1.0;   ///< S
  double action_norm = 1.0;  ///< L
  double kappa = 1.0;
  double eps_inflation = 0.0;
  double eps_scale = 1.0;
  double delta = 0.05;
  double reward_range = std::numeric_limits<double>::infinity();  ///< R^max

  void validate() const {
    if (dim < 1) throw ParameterError("OFUL: dimension must be >= 1");
    if (!(lambda > 0.0)) throw ParameterError("OFUL: lambda must be positive");
    if (!(sigma >= 0.0)) throw ParameterError("OFUL: sigma must be >= 0");
    if (!(param_norm >= 0.0) || !(action_norm > 0.0))
      throw ParameterError("OFUL: norm bounds must be positive");
    if (!(kappa > 0.0)) throw ParameterError("OFUL: kappa must be positive");
    if (!(eps_inflation >= 0.0)) throw ParameterError("OFUL: eps inflation must be >= 0");
    if (!(delta > 0.0 && delta < 1.0)) throw ParameterError("OFUL: delta must lie in (0, 1)");
    if (!(reward_range > 0.0)) throw ParameterError("OFUL: reward range must be positive");
  }
};

/// Regularized least-squares state of one OFUL instance.
struct OfulState {
  OfulConfig config;
  GramAccumulator gram;  ///< Sigma_t = lambda I + sum a a^T
  Vector moment;         ///< sum a r
  Vector theta_hat;
  std::int64_t updates = 0;
  double running_bound = 0.0;  ///< 2 sum_k min(beta_k |a_k|, R^max) over on-policy plays
  double beta_max_seen = 0.0;

  static OfulState fresh(const OfulConfig& cfg) {
    cfg.validate();
    OfulState s;
    s.config = cfg;
    s.gram = GramAccumulator::scaled_identity(cfg.dim, cfg.lambda);
    s.moment = Vector::Zero(cfg.dim);
    s.theta_hat = Vector::Zero(cfg.dim);
    return s;
  }

  /// State with a prescribed Gram matrix and estimate (moment = Sigma theta).
  static OfulState from_moments(const OfulConfig& cfg, const Matrix& sigma_matrix,
                                const Vector& theta) {
    cfg.validate();
    OfulState s;
    s.config = cfg;
    s.gram = GramAccumulator(sigma_matrix);
    s.moment = sigma_matrix * theta;
    s.theta_hat = theta;
    return s;
  }
};

/// First `dim` coordinates of an action, as the learner sees it.
inline Vector truncate_action(const Eigen::Ref<const Vector>& a, Eigen::Index dim) {
  if (a.size() < dim) throw ContractError("action has fewer coordinates than learner dimension");
  return a.head(dim);
}

/// Confidence radius, determinant form:
///   kappa (sqrt(2 sigma^2 ln(det(Sigma)^{1/2} det(lambda I)^{-1/2} / delta)) + sqrt(lambda) S
///          + eps sqrt(n) scale)
inline double oful_beta(const OfulState& s, double delta) {
  detail::check_delta(delta, "oful_beta");
  const auto& c = s.config;
  const double half_log_ratio =
      0.5 * (s.gram.log_det() - static_cast<double>(c.dim) * std::log(c.lambda));
  const double log_term = std::max(half_log_ratio + std::log(1.0 / delta), 0.0);
  const double inflation =
      c.eps_inflation * c.eps_scale * std::sqrt(static_cast<double>(s.updates));
  return c.kappa * (std::sqrt(2.0 * c.sigma * c.sigma * log_term) +
                    std::sqrt(c.lambda) * c.param_norm + inflation);
}

inline double oful_beta(const OfulState& s) { return oful_beta(s, s.config.delta); }

/// Closed-form upper bound on the unscaled, uninflated radius after t updates:
///   sqrt(sigma^2 d ln((1 + t L^2 / lambda) / delta)) + sqrt(lambda) S
inline double oful_beta_closed_form(const OfulConfig& c, std::int64_t t, double delta) {
  detail::check_delta(delta, "oful_beta_closed_form");
  const double td = static_cast<double>(t);
  return std::sqrt(c.sigma * c.sigma * static_cast<double>(c.dim) *
                   std::log((1.0 + td * c.action_norm * c.action_norm / c.lambda) / delta)) +
         std::sqrt(c.lambda) * c.param_norm;
}

/// Folds one observation into the RLS estimate. The running bound grows by
/// 2 min(beta |a|_{Sigma^{-1}}, R^max) evaluated before the update, for
/// on-policy observations only.
inline OfulState oful_update(OfulState s, const Eigen::Ref<const Vector>& action, double reward,
                             bool on_policy = true) {
  Vector a = action.size() == s.config.dim ? Vector(action) : truncate_action(action, s.config.dim);
  const double norm = a.norm();
  if (norm > s.config.action_norm + 1e-9)
    throw ContractError("OFUL update: action norm " + std::to_string(norm) + " exceeds L = " +
                        std::to_string(s.config.action_norm));
  const double beta = oful_beta(s);
  const double q = s.gram.update(a);
  if (on_policy) {
    s.running_bound += 2.0 * std::min(beta * std::sqrt(q), s.config.reward_range);
    s.beta_max_seen = std::max(s.beta_max_seen, beta);
  }
  s.moment.noalias() += reward * a;
  s.theta_hat = s.gram.solve(s.moment);
  ++s.updates;
  return s;
}

/// Optimistic choice on the given radius. Ties go to the lowest index.
inline Proposal oful_propose(const OfulState& s, const Matrix& action_set, double beta) {
  if (action_set.cols() == 0) throw ContractError("OFUL propose: empty action set");
  const auto d = s.config.dim;
  if (action_set.rows() < d)
    throw ContractError("OFUL propose: actions have fewer coordinates than learner dimension");
  const auto truncated = action_set.topRows(d);
  const Vector norms = truncated.colwise().norm().transpose();
  if (norms.maxCoeff() > s.config.action_norm + 1e-9)
    throw ContractError("OFUL propose: action norm exceeds L");
  const Vector means = truncated.transpose() * s.theta_hat;
  const Vector widths = beta * s.gram.inverse_norms_sq(truncated).cwiseMax(0.0).cwiseSqrt();
  std::size_t best = 0;
  double best_score = means[0] + widths[0];
  for (Eigen::Index k = 1; k < action_set.cols(); ++k) {
    const double sc = means[k] + widths[k];
    if (sc > best_score) {
      best_score = sc;
      best = static_cast<std::size_t>(k);
    }
  }
  const double rmax = s.config.reward_range;
  const auto b = static_cast<Eigen::Index>(best);
  return Proposal{best, means[b], widths[b], std::min(best_score, rmax),
                  std::max(means[b] - widths[b], -rmax)};
}

inline Proposal oful_propose(const OfulState& s, const Matrix& action_set) {
  return oful_propose(s, action_set, oful_beta(s));
}

inline double oful_running_bound(const OfulState& s) { return s.running_bound; }

/// |theta - theta_hat|_{Sigma}; containment holds when this is <= beta.
inline double confidence_distance(const OfulState& s, const Eigen::Ref<const Vector>& theta) {
  const Vector diff = theta.head(s.config.dim) - s.theta_hat;
  return std::sqrt(std::max(diff.dot(s.gram.matrix() * diff), 0.0));
}

/// 2 beta_max sqrt(d T (1 + L^2/lambda) ln((d lambda + T L^2) / (d lambda)))
inline double oful_regret_bound(double beta_max, Eigen::Index dim, std::int64_t horizon,
                                double action_norm, double lambda) {
  const double d = static_cast<double>(dim);
  const double t = static_cast<double>(horizon);
  const double l2 = action_norm * action_norm;
  return 2.0 * beta_max *
         std::sqrt(d * t * (1.0 + l2 / lambda) * std::log((d * lambda + t * l2) / (d * lambda)));
}

/// Common constant C for the nested-dimension bounds d_i C sqrt(n) ^ n:
///   2 (sigma + sqrt(lambda) S) sqrt((1 + L^2/lambda) ln((1 + T L^2/lambda)/delta)
///                                   ln((lambda + T L)/lambda))
inline double nested_bound_constant(double sigma, double lambda, double param_norm,
                                    double action_norm, std::int64_t horizon, double delta) {
  const double t = static_cast<double>(horizon);
  const double l2 = action_norm * action_norm;
  return 2.0 * (sigma + std::sqrt(lambda) * param_norm) *
         std::sqrt((1.0 + l2 / lambda) * std::log((1.0 + t * l2 / lambda) / delta) *
                   std::log((lambda + t * action_norm) / lambda));
}

class OfulLearner final : public BaseLearner {
 public:
  OfulLearner(OfulConfig cfg, CandidateBound presumed, std::string name = "oful")
      : state_(OfulState::fresh(cfg)), presumed_(std::move(presumed)), name_(std::move(name)) {}

  Proposal propose(const Matrix& action_set) const override {
    return oful_propose(state_, action_set);
  }
  void observe(const Eigen::Ref<const Vector>& action, double reward,
               bool on_policy = true) override {
    state_ = oful_update(std::move(state_), action, reward, on_policy);
  }
  const CandidateBound& presumed_bound() const override { return presumed_; }
  double presumed_bound_value() const override {
    if (presumed_.family() == BoundFamily::DataDependent) return state_.running_bound;
    return presumed_(state_.updates);
  }
  LearnerDescriptor descriptor() const override {
    const auto& c = state_.config;
    return {name_, c.dim, c.param_norm, c.action_norm, c.reward_range};
  }
  std::int64_t rounds() const override { return state_.updates; }
  LearnerPtr clone() const override { return std::make_unique<OfulLearner>(*this); }

  const OfulState& state() const { return state_; }

 private:
  OfulState state_;
  CandidateBound presumed_;
  std::string name_;
};

// ---------------------------------------------------------------------------
// Scripted learners

/// Ignores contexts and always plays column `arm` of the action set, an arm
/// whose expected reward is `mean`. In an environment with optimal value mu*
/// its per-round regret is exactly mu* - mean.
class ScriptedLearner final : public BaseLearner {
 public:
  ScriptedLearner(double mean, CandidateBound presumed, std::size_t arm,
                  std::optional<double> reported_lower = std::nullopt)
      : mean_(mean), presumed_(std::move(presumed)), arm_(arm),
        reported_lower_(reported_lower.value_or(mean)) {
    if (!(mean >= 0.0 && mean <= 1.0)) throw ParameterError("scripted learner: mean must lie in [0, 1]");
  }

  Proposal propose(const Matrix& action_set) const override {
    if (static_cast<Eigen::Index>(arm_) >= action_set.cols())
      throw ContractError("scripted learner: arm index outside the action set");
    return Proposal{arm_, mean_, 0.0, mean_, reported_lower_};
  }
  void observe(const Eigen::Ref<const Vector>&, double, bool = true) override { ++rounds_; }
  const CandidateBound& presumed_bound() const override { return presumed_; }
  double presumed_bound_value() const override {
    return presumed_.family() == BoundFamily::DataDependent ? 0.0 : presumed_(rounds_);
  }
  LearnerDescriptor descriptor() const override { return {"scripted", 1, 1.0, 1.0, 1.0}; }
  std::int64_t rounds() const override { return rounds_; }
  LearnerPtr clone() const override { return std::make_unique<ScriptedLearner>(*this); }

  double mean() const { return mean_; }
  std::size_t arm() const { return arm_; }

 private:
  double mean_;
  CandidateBound presumed_;
  std::size_t arm_;
  double reported_lower_;
  std::int64_t rounds_ = 0;
};

inline LearnerPtr scripted_learner(double mean, CandidateBound presumed, std::size_t arm) {
  return std::make_unique<ScriptedLearner>(mean, std::move(presumed), arm);
}

}  // namespace modsel
