#pragma once
// Regret bound balancing with elimination for stochastic contexts.

#include <limits>
#include <string>
#include <vector>

#include "modsel/concentration.hpp"
#include "modsel/core.hpp"
#include "modsel/environments.hpp"
#include "modsel/learners.hpp"
#include "modsel/rng.hpp"

namespace modsel {

struct LearnerSnapshot {
  PlayCount plays = 0;
  double reward_sum = 0.0;
  double bound = 0.0;
  bool active = true;
};

/// One row of a run's trace.
struct RoundTrace {
  std::int64_t round = 0;
  std::size_t learner = 0;
  double reward = 0.0;
  double mu_star = 0.0;
  double conditional_mean = 0.0;
  double cumulative_regret = 0.0;
  int epoch = 1;
  std::vector<LearnerSnapshot> learners;
  std::vector<std::size_t> eliminated;
};

/// Active learner with the smallest current bound value; ties go to fewer
/// plays, then to the lower index.
inline std::size_t select_learner(const MasterState& state) {
  std::size_t best = state.ledgers.size();
  double best_bound = 0.0;
  for (std::size_t i = 0; i < state.ledgers.size(); ++i) {
    const auto& l = state.ledgers[i];
    if (!l.active) continue;
    const double v = l.bound_value();
    if (best == state.ledgers.size()) {
      best = i;
      best_bound = v;
      continue;
    }
    const auto& b = state.ledgers[best];
    if (v < best_bound - kTolerance ||
        (std::abs(v - best_bound) <= kTolerance && l.plays < b.plays)) {
      best = i;
      best_bound = v;
    }
  }
  if (best == state.ledgers.size()) throw StateError("select_learner: no active learner");
  return best;
}

/// Per-play deviation radius c_scale * radius_scale * hoeffding_radius(n) / n.
inline double elimination_radius(PlayCount plays, std::size_t learners, double delta,
                                 const EliminationConfig& cfg) {
  return cfg.c_scale * cfg.radius_scale * hoeffding_radius(plays, learners, delta) /
         static_cast<double>(plays);
}

/// Learners whose upper confidence bound on mu* falls below the best lower
/// confidence bound of the active set. All violators are returned together,
/// judged against the same (pre-elimination) active set; learners without
/// plays are ignored on both sides.
inline std::vector<std::size_t> elimination_test(const MasterState& state) {
  const std::size_t m = state.ledgers.size();
  std::vector<double> radius(m, 0.0);
  double best_lower = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < m; ++j) {
    const auto& l = state.ledgers[j];
    if (!l.active || l.plays < 1) continue;
    radius[j] = elimination_radius(l.plays, m, state.delta, state.elimination);
    best_lower = std::max(best_lower, l.mean_reward() - radius[j]);
  }
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < m; ++i) {
    const auto& l = state.ledgers[i];
    if (!l.active || l.plays < 1) continue;
    const double n = static_cast<double>(l.plays);
    const double upper = l.mean_reward() + l.bound_value() / n + radius[i];
    if (upper < best_lower) out.push_back(i);
  }
  return out;
}

enum class SelectionRule { Balancing, RoundRobin };

struct BalancingConfig {
  double delta = 0.05;
  EliminationConfig elimination;
  SelectionRule rule = SelectionRule::Balancing;
  /// Feed every observation to all active learners (off-policy for the others).
  bool broadcast = false;
};

/// The stochastic-context master. Owns its learners; one instance is one run.
class BalancingMaster {
 public:
  BalancingMaster(std::vector<LearnerPtr> learners, BalancingConfig cfg)
      : learners_(std::move(learners)), cfg_(cfg), regret_(learners_.size()) {
    if (learners_.empty()) throw ParameterError("master needs at least one learner");
    if (!(cfg.delta > 0.0 && cfg.delta < 1.0)) throw ParameterError("master: delta must lie in (0, 1)");
    if (!(cfg.elimination.c_scale >= 0.0) || !(cfg.elimination.radius_scale > 0.0))
      throw ParameterError("master: radius scales must be non-negative");
    state_.delta = cfg.delta;
    state_.elimination = cfg.elimination;
    for (std::size_t i = 0; i < learners_.size(); ++i) {
      LearnerLedger l;
      l.learner_id = i;
      l.bound = learners_[i]->presumed_bound();
      state_.ledgers.push_back(std::move(l));
    }
    eliminated_at_.assign(learners_.size(), 0);
  }

  const MasterState& state() const { return state_; }
  const RegretAccount& regret() const { return regret_; }
  const BaseLearner& learner(std::size_t i) const { return *learners_.at(i); }
  std::size_t size() const { return learners_.size(); }
  const std::vector<std::string>& diagnostics() const { return diagnostics_; }
  /// Round at which each learner was eliminated, 0 if still active.
  const std::vector<std::int64_t>& elimination_rounds() const { return eliminated_at_; }

  /// Plays one round against `env`.
  const RoundTrace& run_round(const LinearBanditEnv& env, RunStreams& streams) {
    const std::int64_t t = state_.round + 1;
    const Matrix actions = env.emit_round(t, streams.contexts);
    const std::size_t chosen = choose(t);
    const Proposal prop = learners_[chosen]->propose(actions);
    const Vector action = actions.col(static_cast<Eigen::Index>(prop.index));
    const RealizedReward rr = env.realize_reward(action, streams.noise);
    const double mu_star = env.optimal_value(actions);

    auto& ledger = state_.ledgers[chosen];
    const double before = learners_[chosen]->presumed_bound_value();
    learners_[chosen]->observe(action, rr.reward, true);
    if (ledger.bound.family() == BoundFamily::DataDependent)
      ledger.bound.record(learners_[chosen]->presumed_bound_value() - before);
    if (cfg_.broadcast) {
      for (std::size_t i = 0; i < learners_.size(); ++i)
        if (i != chosen && state_.ledgers[i].active) learners_[i]->observe(action, rr.reward, false);
    }
    ledger.record_play(rr.reward);
    regret_.record(chosen, mu_star, rr.conditional_mean);
    state_.round = t;

    trace_.eliminated.clear();
    if (cfg_.rule == SelectionRule::Balancing) eliminate(t);

    trace_.round = t;
    trace_.learner = chosen;
    trace_.reward = rr.reward;
    trace_.mu_star = mu_star;
    trace_.conditional_mean = rr.conditional_mean;
    trace_.cumulative_regret = regret_.total();
    trace_.learners.resize(learners_.size());
    for (std::size_t i = 0; i < learners_.size(); ++i) {
      const auto& l = state_.ledgers[i];
      trace_.learners[i] = {l.plays, l.reward_sum, l.bound_value(), l.active};
    }
    return trace_;
  }

 private:
  std::size_t choose(std::int64_t t) {
    if (cfg_.rule == SelectionRule::RoundRobin)
      return static_cast<std::size_t>((t - 1) % static_cast<std::int64_t>(learners_.size()));
    return select_learner(state_);
  }

  void eliminate(std::int64_t t) {
    auto out = elimination_test(state_);
    const std::size_t active = state_.active_count();
    if (!out.empty() && out.size() >= active) {
      // Keep the learner with the highest empirical mean.
      std::size_t keep = out.front();
      for (auto i : out)
        if (state_.ledgers[i].mean_reward() > state_.ledgers[keep].mean_reward()) keep = i;
      std::erase(out, keep);
      diagnostics_.push_back("round " + std::to_string(t) +
                             ": every learner failed the test; kept learner " +
                             std::to_string(keep));
    }
    for (auto i : out) {
      state_.ledgers[i].deactivate();
      eliminated_at_[i] = t;
    }
    for (auto& l : state_.ledgers)
      if (l.active && l.plays > 0) l.last_pass_round = t;
    trace_.eliminated = std::move(out);
  }

  std::vector<LearnerPtr> learners_;
  BalancingConfig cfg_;
  MasterState state_;
  RegretAccount regret_;
  RoundTrace trace_;
  std::vector<std::string> diagnostics_;
  std::vector<std::int64_t> eliminated_at_;
};

}  // namespace modsel
