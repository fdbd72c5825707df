#pragma once
// Builds the environment and learner set of one run from a config.

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "modsel/environments.hpp"
#include "modsel/harness/config.hpp"
#include "modsel/learners.hpp"
#include "modsel/rng.hpp"

namespace modsel::harness {

struct ScenarioInstance {
  LinearBanditEnv env;
  std::vector<LearnerPtr> learners;
};

/// kappa_i = 2^{1-i}, i = 1..M
inline std::vector<double> kappa_grid(int count) {
  std::vector<double> out;
  for (int i = 1; i <= count; ++i) out.push_back(std::ldexp(1.0, 1 - i));
  return out;
}

/// eps_i = 2^{1-i} / sqrt(d), i = 1..M
inline std::vector<double> eps_grid(int count, int dim) {
  std::vector<double> out;
  for (int i = 1; i <= count; ++i)
    out.push_back(std::ldexp(1.0, 1 - i) / std::sqrt(static_cast<double>(dim)));
  return out;
}

inline double reward_range(const ExperimentConfig& c) {
  return c.reward_range == RewardRangeMode::Unit ? 1.0 : c.param_norm * c.action_norm;
}

inline double bound_constant(const ExperimentConfig& c) {
  if (c.bound_constant > 0.0) return c.bound_constant;
  return std::max(1.0, nested_bound_constant(c.sigma, c.lambda, c.param_norm, c.action_norm,
                                             c.horizon, c.delta));
}

inline OfulConfig base_oful(const ExperimentConfig& c, int dim) {
  OfulConfig o;
  o.dim = dim;
  o.lambda = c.lambda;
  o.sigma = c.sigma;
  o.param_norm = c.param_norm;
  o.action_norm = c.action_norm;
  o.delta = c.delta;
  o.reward_range = reward_range(c);
  o.eps_scale = c.eps_scale;
  return o;
}

inline Vector scenario_theta(const ExperimentConfig& c, Rng& setup) {
  if (!c.theta.empty()) return Eigen::Map<const Vector>(c.theta.data(), c.dim);
  if (c.actions == ActionKind::SignShift && c.d_star == 2 * c.half && c.half >= 2) {
    // (x, y) with y orthogonal to x and |x| = |y|
    std::normal_distribution<double> normal;
    Vector x(c.half), y(c.half);
    for (int k = 0; k < c.half; ++k) x[k] = normal(setup);
    for (int k = 0; k < c.half; ++k) y[k] = normal(setup);
    x.normalize();
    y -= y.dot(x) * x;
    y.normalize();
    Vector th = Vector::Zero(c.dim);
    th.head(c.half) = x;
    th.segment(c.half, c.half) = y;
    return th * (c.theta_norm / std::numbers::sqrt2);
  }
  return random_sparse_theta(c.dim, c.d_star, c.theta_norm, setup);
}

inline ScenarioInstance build_scenario(const ExperimentConfig& c, RunStreams& streams) {
  Rng& setup = streams.setup;
  NoiseModel noise{c.noise, c.noise_sigma};

  std::vector<LearnerPtr> learners;
  auto presumed = [&](double scale, double eps) -> CandidateBound {
    switch (c.bound) {
      case BoundKind::Poly:
        return CandidateBound::poly_capped(scale, bound_constant(c), c.bound_exponent);
      case BoundKind::DataDependent:
        return CandidateBound::data_dependent(1.0);
      case BoundKind::EpsLinear:
        return CandidateBound::eps_linear(c.eps_c1, c.eps_c2, eps);
    }
    return {};
  };

  if (c.family == FamilyKind::Scripted) {
    for (std::size_t i = 0; i < c.means.size(); ++i) {
      const auto arm = static_cast<std::size_t>(c.arms[i]);
      if (arm >= c.means.size()) throw ConfigError("scripted arm index out of range");
      const double exponent = c.exponents.empty() ? c.bound_exponent : c.exponents[i];
      const double constant = c.bound_constant > 0.0 ? c.bound_constant : 1.0;
      const double scale = c.scales.empty() ? 1.0 : c.scales[i];
      learners.push_back(scripted_learner(
          c.means[arm], CandidateBound::poly_capped(scale, constant, exponent), arm));
    }
    return {arms_environment(c.means, noise), std::move(learners)};
  }

  const Vector theta = scenario_theta(c, setup);
  ActionModel model;
  switch (c.actions) {
    case ActionKind::Sphere:
      model = IidUnitSphere{c.action_count};
      break;
    case ActionKind::Ring:
      model = AnchoredSphere{ring_anchor(c.d_star, c.action_count, setup), c.filler};
      break;
    case ActionKind::Fixed: {
      std::normal_distribution<double> normal;
      Matrix a(c.dim, c.action_count);
      for (Eigen::Index j = 0; j < a.cols(); ++j) {
        for (Eigen::Index k = 0; k < a.rows(); ++k) a(k, j) = normal(setup);
        a.col(j) *= c.action_norm / a.col(j).norm();
      }
      model = FixedSet{a};
      break;
    }
    case ActionKind::SignShift:
      model = sign_shift_schedule(c.dim, c.half, c.action_count, c.block, setup(), c.filler);
      break;
    case ActionKind::Alternating:
      model = alternating_basis_schedule(c.dim);
      break;
    case ActionKind::Arms:
      throw ConfigError("actions = arms requires the scripted family");
  }
  LinearBanditEnv env(theta, std::move(model), noise, c.action_norm, c.misspecification, c.clip,
                      setup.split(7));

  switch (c.family) {
    case FamilyKind::Nested:
      for (int d : c.dims)
        learners.push_back(std::make_unique<OfulLearner>(
            base_oful(c, d), presumed(static_cast<double>(d), 1.0), "oful-d" + std::to_string(d)));
      break;
    case FamilyKind::Kappa:
      for (double k : kappa_grid(c.count)) {
        OfulConfig o = base_oful(c, c.dim);
        o.kappa = k;
        learners.push_back(std::make_unique<OfulLearner>(o, presumed(1.0 / k, 1.0),
                                                         "oful-kappa" + std::to_string(k)));
      }
      break;
    case FamilyKind::Eps:
      for (double e : eps_grid(c.count, c.dim)) {
        OfulConfig o = base_oful(c, c.dim);
        o.eps_inflation = e;
        learners.push_back(std::make_unique<OfulLearner>(o, presumed(1.0, std::min(e, 1.0)),
                                                         "oful-eps" + std::to_string(e)));
      }
      break;
    case FamilyKind::Scripted:
      break;
  }
  return {std::move(env), std::move(learners)};
}

}  // namespace modsel::harness
