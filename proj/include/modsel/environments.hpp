#pragma once
// Synthetic linear bandit environments with known ground truth.

#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <utility>
#include <variant>

#include "modsel/concentration.hpp"
#include "modsel/core.hpp"
#include "modsel/rng.hpp"

namespace modsel {

/// The same A actions (columns) every round.
struct FixedSet {
  Matrix actions;
};

/// Fresh i.i.d. uniform unit vectors every round.
struct IidUnitSphere {
  Eigen::Index count = 10;
};

/// Action set as a pure function of the round index.
struct AdversarialSchedule {
  std::function<Matrix(std::int64_t)> generator;
};

/// Column j is (sqrt(1 - f^2) anchor_j, f v_j) with anchor_j fixed and v_j a
/// fresh uniform unit vector on the remaining coordinates each round.
struct AnchoredSphere {
  Matrix anchor;  ///< leading coordinates, unit-norm columns
  double filler = 0.3;
};

using ActionModel = std::variant<FixedSet, IidUnitSphere, AdversarialSchedule, AnchoredSphere>;

enum class NoiseKind { Gaussian, Bernoulli };

struct NoiseModel {
  NoiseKind kind = NoiseKind::Gaussian;
  double sigma = 0.1;  ///< Gaussian standard deviation
};

enum class ClipMode { None, Unit };

struct RealizedReward {
  double reward = 0.0;
  double conditional_mean = 0.0;
};

inline double standard_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }
inline double standard_normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

/// E[clamp(X, 0, 1)] for X ~ N(mean, sigma^2).
inline double clipped_gaussian_mean(double mean, double sigma) {
  if (sigma <= 0.0) return std::clamp(mean, 0.0, 1.0);
  const double lo = (0.0 - mean) / sigma;
  const double hi = (1.0 - mean) / sigma;
  const double p_lo = standard_normal_cdf(lo);
  const double p_hi = standard_normal_cdf(hi);
  return (1.0 - p_hi) + mean * (p_hi - p_lo) +
         sigma * (standard_normal_pdf(lo) - standard_normal_pdf(hi));
}

/// Linear rewards <a, theta*> plus an optional bounded perturbation and noise.
///
/// The perturbation is eps* sign(<w, a>) with w drawn once from the setup
/// stream, so it is a fixed +-eps* offset per action. Context draws and noise
/// draws come from separate streams supplied by the caller.
class LinearBanditEnv {
 public:
  LinearBanditEnv(Vector theta_star, ActionModel model, NoiseModel noise,
                  double action_norm = 1.0, double misspecification = 0.0,
                  ClipMode clip = ClipMode::None, Rng setup = Rng{})
      : theta_(std::move(theta_star)), model_(std::move(model)), noise_(noise),
        action_norm_(action_norm), eps_(misspecification), clip_(clip) {
    if (theta_.size() < 1) throw ParameterError("environment: theta* must be non-empty");
    if (!(action_norm > 0.0)) throw ParameterError("environment: action norm bound must be positive");
    if (!(eps_ >= 0.0)) throw ParameterError("environment: misspecification must be >= 0");
    if (noise_.kind == NoiseKind::Gaussian && !(noise_.sigma >= 0.0))
      throw ParameterError("environment: sigma must be >= 0");
    if (const auto* fs = std::get_if<FixedSet>(&model_)) {
      if (fs->actions.rows() != dim() || fs->actions.cols() == 0)
        throw ParameterError("environment: fixed action set has wrong shape");
      check_norms(fs->actions);
    }
    if (const auto* iid = std::get_if<IidUnitSphere>(&model_)) {
      if (iid->count < 1) throw ParameterError("environment: need at least one action per round");
      if (action_norm_ < 1.0 - 1e-12)
        throw ParameterError("environment: unit-sphere actions need L >= 1");
    }
    if (const auto* an = std::get_if<AnchoredSphere>(&model_)) {
      if (an->anchor.rows() < 1 || an->anchor.rows() >= dim() || an->anchor.cols() == 0)
        throw ParameterError("environment: anchor must cover between 1 and dim - 1 coordinates");
      if (!(an->filler >= 0.0 && an->filler < 1.0))
        throw ParameterError("environment: anchored filler must lie in [0, 1)");
      if ((an->anchor.colwise().norm().array() - 1.0).abs().maxCoeff() > 1e-9)
        throw ParameterError("environment: anchor columns must be unit vectors");
      if (action_norm_ < 1.0 - 1e-12)
        throw ParameterError("environment: anchored actions need L >= 1");
    }
    if (const auto* adv = std::get_if<AdversarialSchedule>(&model_); adv && !adv->generator)
      throw ParameterError("environment: adversarial schedule without generator");
    std::normal_distribution<double> normal;
    direction_ = Vector(dim());
    for (Eigen::Index k = 0; k < dim(); ++k) direction_[k] = normal(setup);
  }

  Eigen::Index dim() const { return theta_.size(); }
  const Vector& theta_star() const { return theta_; }
  const ActionModel& action_model() const { return model_; }
  const NoiseModel& noise() const { return noise_; }
  double action_norm() const { return action_norm_; }
  double misspecification() const { return eps_; }
  ClipMode clip() const { return clip_; }
  bool stochastic_contexts() const { return !std::holds_alternative<AdversarialSchedule>(model_); }

  /// The action set of round t (columns are actions).
  Matrix emit_round(std::int64_t t, Rng& contexts) const {
    if (t < 1) throw ParameterError("environment: rounds start at 1");
    return std::visit(
        [&](const auto& m) -> Matrix {
          using M = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<M, FixedSet>) {
            return m.actions;
          } else if constexpr (std::is_same_v<M, IidUnitSphere>) {
            std::normal_distribution<double> normal;
            Matrix out(dim(), m.count);
            for (Eigen::Index j = 0; j < m.count; ++j) {
              for (Eigen::Index k = 0; k < dim(); ++k) out(k, j) = normal(contexts);
              out.col(j).normalize();
            }
            return out;
          } else if constexpr (std::is_same_v<M, AnchoredSphere>) {
            std::normal_distribution<double> normal;
            const Eigen::Index r = m.anchor.rows();
            const Eigen::Index rest = dim() - r;
            Matrix out(dim(), m.anchor.cols());
            out.topRows(r) = std::sqrt(1.0 - m.filler * m.filler) * m.anchor;
            for (Eigen::Index j = 0; j < out.cols(); ++j) {
              Vector v(rest);
              for (Eigen::Index k = 0; k < rest; ++k) v[k] = normal(contexts);
              out.col(j).tail(rest) = m.filler * v.normalized();
            }
            return out;
          } else {
            Matrix out = m.generator(t);
            if (out.rows() != dim() || out.cols() == 0)
              throw ContractError("adversarial schedule produced a malformed action set");
            check_norms(out);
            return out;
          }
        },
        model_);
  }

  /// <a, theta*> + perturbation, passed through the clipping model.
  double conditional_mean(const Eigen::Ref<const Vector>& action) const {
    double m = action.dot(theta_);
    if (eps_ > 0.0) m += action.dot(direction_) >= 0.0 ? eps_ : -eps_;
    if (clip_ == ClipMode::Unit && noise_.kind == NoiseKind::Gaussian)
      return clipped_gaussian_mean(m, noise_.sigma);
    return m;
  }

  RealizedReward realize_reward(const Eigen::Ref<const Vector>& action, Rng& noise) const {
    const double raw_mean = raw(action);
    const double mean = conditional_mean(action);
    double r = 0.0;
    if (noise_.kind == NoiseKind::Bernoulli) {
      if (raw_mean < -kTolerance || raw_mean > 1.0 + kTolerance)
        throw EnvironmentError("Bernoulli rewards need expected rewards in [0, 1]");
      r = noise.uniform() < raw_mean ? 1.0 : 0.0;
    } else {
      std::normal_distribution<double> normal(0.0, 1.0);
      r = raw_mean + noise_.sigma * normal(noise);
      if (clip_ == ClipMode::Unit) r = std::clamp(r, 0.0, 1.0);
    }
    return {r, mean};
  }

  double optimal_value(const Matrix& action_set) const {
    return conditional_mean(action_set.col(optimal_index(action_set)));
  }

  /// Index of the best action; ties go to the lowest index.
  Eigen::Index optimal_index(const Matrix& action_set) const {
    if (action_set.cols() == 0) throw ContractError("optimal_value: empty action set");
    Eigen::Index best = 0;
    double best_v = conditional_mean(action_set.col(0));
    for (Eigen::Index j = 1; j < action_set.cols(); ++j) {
      const double v = conditional_mean(action_set.col(j));
      if (v > best_v) {
        best_v = v;
        best = j;
      }
    }
    return best;
  }

 private:
  double raw(const Eigen::Ref<const Vector>& action) const {
    double m = action.dot(theta_);
    if (eps_ > 0.0) m += action.dot(direction_) >= 0.0 ? eps_ : -eps_;
    return m;
  }

  void check_norms(const Matrix& actions) const {
    if (actions.colwise().norm().maxCoeff() > action_norm_ + 1e-12)
      throw ContractError("environment emitted an action with norm above L");
  }

  Vector theta_;
  ActionModel model_;
  NoiseModel noise_;
  double action_norm_;
  double eps_;
  ClipMode clip_;
  Vector direction_;
};

inline Matrix emit_round(const LinearBanditEnv& env, std::int64_t t, Rng& contexts) {
  return env.emit_round(t, contexts);
}
inline RealizedReward realize_reward(const LinearBanditEnv& env,
                                     const Eigen::Ref<const Vector>& action, Rng& noise) {
  return env.realize_reward(action, noise);
}
inline double optimal_value(const LinearBanditEnv& env, const Matrix& action_set) {
  return env.optimal_value(action_set);
}

// ---------------------------------------------------------------------------
// Schedules and builders

/// {e_1} on odd rounds, {e_2} on even rounds.
inline AdversarialSchedule alternating_basis_schedule(Eigen::Index dim) {
  if (dim < 2) throw ParameterError("alternating schedule needs dim >= 2");
  return {[dim](std::int64_t t) {
    Matrix m = Matrix::Zero(dim, 1);
    m(t % 2 == 1 ? 0 : 1, 0) = 1.0;
    return m;
  }};
}

/// K unit vectors in R^r: equally spaced on the circle when r = 2, otherwise
/// drawn uniformly from the sphere with `rng`.
inline Matrix ring_anchor(Eigen::Index r, Eigen::Index count, Rng& rng) {
  if (r < 1 || count < 1) throw ParameterError("ring anchor: need r >= 1 and count >= 1");
  Matrix a(r, count);
  if (r == 2) {
    for (Eigen::Index j = 0; j < count; ++j) {
      const double phi = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(count);
      a(0, j) = std::cos(phi);
      a(1, j) = std::sin(phi);
    }
    return a;
  }
  std::normal_distribution<double> normal;
  for (Eigen::Index j = 0; j < count; ++j) {
    for (Eigen::Index k = 0; k < r; ++k) a(k, j) = normal(rng);
    if (r == 1) a(0, j) = a(0, j) >= 0.0 ? 1.0 : -1.0;
    else a.col(j).normalize();
  }
  return a;
}

/// `count` actions per round of the form a_j = (u_j, s_t u_j, v_j, 0...), where
/// u_j are fixed points of radius sqrt(1 - f^2)/sqrt(2) over the first `half`
/// coordinates (a ring, see ring_anchor), v_j is fresh filler noise of norm f on
/// the coordinates above 2*half, and s_t is a sign pattern:
///   s_t = +1 for t <= block, -1 for block < t <= 2 block, then (-1)^(t+1).
/// block = 0 gives the pure alternation from the first round.
/// The action set is a pure function of (key, t). With theta* = (x, y, 0...)
/// the expected reward is <u, x + s_t y>, so a learner restricted to the first
/// `half` coordinates is fit to a relation that changes after the first block.
inline AdversarialSchedule sign_shift_schedule(Eigen::Index dim, Eigen::Index half,
                                               Eigen::Index count, std::int64_t block,
                                               std::uint64_t key, double filler = 0.3) {
  if (half < 1 || 2 * half > dim) throw ParameterError("sign-shift schedule: need 2*half <= dim");
  if (count < 1 || block < 0) throw ParameterError("sign-shift schedule: need count >= 1 and block >= 0");
  if (!(filler >= 0.0 && filler < 1.0)) throw ParameterError("sign-shift schedule: filler in [0,1)");
  Rng anchor_rng(mix64(key));
  const Matrix ring = ring_anchor(half, count, anchor_rng) *
                      (std::sqrt(1.0 - filler * filler) / std::numbers::sqrt2);
  return {[=](std::int64_t t) {
    Rng r(mix64(key ^ mix64(static_cast<std::uint64_t>(t))));
    std::normal_distribution<double> normal;
    double sign = 1.0;
    if (t > block && t <= 2 * block) sign = -1.0;
    else if (t > 2 * block) sign = (t % 2 == 1) ? 1.0 : -1.0;
    Matrix m = Matrix::Zero(dim, count);
    m.topRows(half) = ring;
    m.middleRows(half, half) = sign * ring;
    const Eigen::Index rest = dim - 2 * half;
    if (rest > 0 && filler > 0.0) {
      for (Eigen::Index j = 0; j < count; ++j) {
        Vector v(rest);
        for (Eigen::Index k = 0; k < rest; ++k) v[k] = normal(r);
        m.col(j).tail(rest) = filler * v.normalized();
      }
    }
    return m;
  }};
}

/// Unit-norm theta* supported on the first d_star coordinates, direction drawn
/// from the given stream.
inline Vector random_sparse_theta(Eigen::Index dim, Eigen::Index d_star, double norm, Rng& rng) {
  if (d_star < 1 || d_star > dim) throw ParameterError("theta*: need 1 <= d* <= d");
  std::normal_distribution<double> normal;
  Vector th = Vector::Zero(dim);
  for (Eigen::Index k = 0; k < d_star; ++k) th[k] = normal(rng);
  th.head(d_star) *= norm / th.head(d_star).norm();
  return th;
}

/// One-dimensional environment whose arms have the given expected rewards.
/// Arm k is the scalar action (means[k]) and theta* = (1).
inline LinearBanditEnv arms_environment(const std::vector<double>& means, NoiseModel noise) {
  Matrix actions(1, static_cast<Eigen::Index>(means.size()));
  double norm = 0.0;
  for (std::size_t k = 0; k < means.size(); ++k) {
    actions(0, static_cast<Eigen::Index>(k)) = means[k];
    norm = std::max(norm, std::abs(means[k]));
  }
  return LinearBanditEnv(Vector::Ones(1), FixedSet{actions}, noise, std::max(norm, 1.0));
}

}  // namespace modsel
