#pragma once
// Shared domain types: candidate regret bounds, per-learner ledgers, the
// master state and pseudo-regret accounting.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

namespace modsel {

/// Absolute tolerance for comparisons of reward-like doubles.
inline constexpr double kTolerance = 1e-9;

class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A caller violated a documented precondition (e.g. action norm above L).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// The environment reported values that contradict its own ground truth.
class EnvironmentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The master reached a state it cannot continue from.
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// ln_+(x) = ln(max(x, e)); never below 1.
inline double ln_plus(double x) {
  return x > std::numbers::e ? std::log(x) : 1.0;
}

using PlayCount = std::int64_t;

enum class BoundFamily { PolyCapped, SqrtLog, EpsLinear, DataDependent };

inline const char* to_string(BoundFamily f) {
  switch (f) {
    case BoundFamily::PolyCapped: return "poly-capped";
    case BoundFamily::SqrtLog: return "sqrt-log";
    case BoundFamily::EpsLinear: return "eps-linear";
    case BoundFamily::DataDependent: return "data-dependent";
  }
  return "?";
}

/// min(scale * constant * n^exponent, n)
struct PolyCappedParams {
  double scale = 1.0;
  double constant = 1.0;
  double exponent = 0.5;
};

/// min(scale * constant * sqrt(n * ln_+(n / delta)), n)
struct SqrtLogParams {
  double scale = 1.0;
  double constant = 1.0;
  double delta = 0.05;
};

/// min(c1 * sqrt(n) + epsilon * c2 * n, n)
struct EpsLinearParams {
  double c1 = 2.0;
  double c2 = 2.0;
  double epsilon = 1.0;
};

/// Running sum reported by a learner, one capped increment per play.
/// prefix[n] is the bound after n plays; prefix[0] == 0.
struct DataDependentParams {
  double increment_cap = 1.0;
  std::vector<double> prefix{0.0};
};

/// A presumed regret bound R(n) from one of the supported families.
///
/// Parametric families are pure functions of n. The data-dependent family is
/// fed by the owning learner through record(); evaluating it beyond the number
/// of recorded plays is a contract violation.
class CandidateBound {
 public:
  using Params = std::variant<PolyCappedParams, SqrtLogParams, EpsLinearParams,
                              DataDependentParams>;

  CandidateBound() : params_(PolyCappedParams{}) {}

  static CandidateBound poly_capped(double scale, double constant,
                                    double exponent) {
    if (!(scale >= 1.0)) throw ParameterError("poly-capped bound: scale must be >= 1");
    if (!(constant >= 1.0)) throw ParameterError("poly-capped bound: constant must be >= 1");
    if (!(exponent > 0.0 && exponent <= 1.0))
      throw ParameterError("poly-capped bound: exponent must lie in (0, 1]");
    return CandidateBound(PolyCappedParams{scale, constant, exponent});
  }

  static CandidateBound sqrt_log(double scale, double constant, double delta) {
    if (!(scale >= 1.0)) throw ParameterError("sqrt-log bound: scale must be >= 1");
    if (!(constant > 0.0)) throw ParameterError("sqrt-log bound: constant must be positive");
    if (!(delta > 0.0 && delta < 1.0))
      throw ParameterError("sqrt-log bound: delta must lie in (0, 1)");
    return CandidateBound(SqrtLogParams{scale, constant, delta});
  }

  static CandidateBound eps_linear(double c1, double c2, double epsilon) {
    if (!(c1 > 1.0) || !(c2 > 1.0))
      throw ParameterError("eps-linear bound: c1 and c2 must exceed 1");
    if (!(epsilon > 0.0 && epsilon <= 1.0))
      throw ParameterError("eps-linear bound: epsilon must lie in (0, 1]");
    return CandidateBound(EpsLinearParams{c1, c2, epsilon});
  }

  static CandidateBound data_dependent(double increment_cap = 1.0) {
    if (!(increment_cap > 0.0))
      throw ParameterError("data-dependent bound: increment cap must be positive");
    return CandidateBound(DataDependentParams{increment_cap, {0.0}});
  }

  BoundFamily family() const {
    return static_cast<BoundFamily>(params_.index());
  }
  const Params& params() const { return params_; }

  /// Largest admissible per-play increment, in the bound's reward units.
  double increment_unit() const {
    if (const auto* dd = std::get_if<DataDependentParams>(&params_))
      return dd->increment_cap;
    return 1.0;
  }

  /// Appends one play's increment, clipped to [0, increment_cap].
  void record(double increment) {
    auto* dd = std::get_if<DataDependentParams>(&params_);
    if (dd == nullptr)
      throw ContractError("record() is only valid for data-dependent bounds");
    const double clipped = std::clamp(increment, 0.0, dd->increment_cap);
    dd->prefix.push_back(dd->prefix.back() + clipped);
  }

  /// Plays recorded so far; parametric bounds accept any n.
  PlayCount recorded() const {
    if (const auto* dd = std::get_if<DataDependentParams>(&params_))
      return static_cast<PlayCount>(dd->prefix.size()) - 1;
    return -1;
  }

  double operator()(PlayCount n) const {
    if (n < 0) throw ParameterError("bound evaluated at negative play count");
    if (n == 0) return 0.0;
    const double nd = static_cast<double>(n);
    return std::visit(
        [&](const auto& p) -> double {
          using P = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<P, PolyCappedParams>) {
            return std::min(p.scale * p.constant * std::pow(nd, p.exponent), nd);
          } else if constexpr (std::is_same_v<P, SqrtLogParams>) {
            return std::min(
                p.scale * p.constant * std::sqrt(nd * ln_plus(nd / p.delta)), nd);
          } else if constexpr (std::is_same_v<P, EpsLinearParams>) {
            return std::min(p.c1 * std::sqrt(nd) + p.epsilon * p.c2 * nd, nd);
          } else {
            if (n >= static_cast<PlayCount>(p.prefix.size()))
              throw ContractError("data-dependent bound evaluated past recorded plays");
            return p.prefix[static_cast<std::size_t>(n)];
          }
        },
        params_);
  }

 private:
  explicit CandidateBound(Params p) : params_(std::move(p)) {}
  Params params_;
};

inline double evaluate_bound(const CandidateBound& bound, PlayCount n) {
  return bound(n);
}

/// True iff R(0) == 0 and 0 <= R(n) - R(n-1) <= unit for all 1 <= n <= n_max.
template <class Bound>
bool bound_increments_valid(const Bound& bound, PlayCount n_max, double unit = 1.0) {
  if (n_max < 1) throw ParameterError("bound_increments_valid: n_max must be >= 1");
  double prev = bound(PlayCount{0});
  if (std::abs(prev) > kTolerance) return false;
  for (PlayCount n = 1; n <= n_max; ++n) {
    const double cur = bound(n);
    const double step = cur - prev;
    if (step < -kTolerance || step > unit + kTolerance) return false;
    prev = cur;
  }
  return true;
}

inline bool bound_increments_valid(const CandidateBound& bound, PlayCount n_max) {
  if (bound.family() == BoundFamily::DataDependent) {
    if (n_max < 1) throw ParameterError("bound_increments_valid: n_max must be >= 1");
    if (bound.recorded() == 0) return true;
    n_max = std::min(n_max, bound.recorded());
  }
  return bound_increments_valid<CandidateBound>(bound, n_max, bound.increment_unit());
}

/// Per-learner running statistics kept by a master.
struct LearnerLedger {
  std::size_t learner_id = 0;
  PlayCount plays = 0;
  double reward_sum = 0.0;
  bool active = true;
  CandidateBound bound;
  std::int64_t last_pass_round = 0;

  double bound_value() const { return bound(plays); }
  double mean_reward() const {
    return plays > 0 ? reward_sum / static_cast<double>(plays) : 0.0;
  }
  void record_play(double reward) {
    ++plays;
    reward_sum += reward;
  }
  void deactivate() { active = false; }
};

/// Confidence-radius configuration of the elimination test.
struct EliminationConfig {
  /// Multiplier on the stitched radius; 2 sums the context and noise terms.
  double c_scale = 2.0;
  /// Extra factor for unbounded (sub-Gaussian) rewards, e.g. 1 + 2 sigma.
  double radius_scale = 1.0;
};

struct MasterState {
  std::int64_t round = 0;
  std::vector<LearnerLedger> ledgers;
  double delta = 0.05;
  EliminationConfig elimination;

  std::size_t active_count() const {
    return static_cast<std::size_t>(std::count_if(
        ledgers.begin(), ledgers.end(), [](const auto& l) { return l.active; }));
  }
  PlayCount total_plays() const {
    PlayCount s = 0;
    for (const auto& l : ledgers) s += l.plays;
    return s;
  }
};

/// Cumulative pseudo-regret, in total and per learner.
class RegretAccount {
 public:
  RegretAccount() = default;
  explicit RegretAccount(std::size_t learners) : per_learner_(learners, 0.0) {}

  /// Adds mu_star - conditional_mean to the learner's regret.
  void record(std::size_t learner, double mu_star, double conditional_mean) {
    if (learner >= per_learner_.size())
      throw ContractError("regret account: learner index out of range");
    double inc = mu_star - conditional_mean;
    if (inc < -kTolerance)
      throw EnvironmentError("optimal value " + std::to_string(mu_star) +
                             " below played mean " + std::to_string(conditional_mean));
    inc = std::max(inc, 0.0);
    per_learner_[learner] += inc;
    total_ += inc;
    ++rounds_;
    last_mu_star_ = mu_star;
    last_mean_ = conditional_mean;
  }

  double total() const { return total_; }
  double of(std::size_t learner) const { return per_learner_.at(learner); }
  const std::vector<double>& per_learner() const { return per_learner_; }
  std::int64_t rounds() const { return rounds_; }
  double last_mu_star() const { return last_mu_star_; }
  double last_conditional_mean() const { return last_mean_; }

 private:
  std::vector<double> per_learner_;
  double total_ = 0.0;
  std::int64_t rounds_ = 0;
  double last_mu_star_ = 0.0;
  double last_mean_ = 0.0;
};

inline RegretAccount update_regret_account(RegretAccount account, std::size_t learner,
                                           double mu_star, double conditional_mean) {
  account.record(learner, mu_star, conditional_mean);
  return account;
}

}  // namespace modsel
