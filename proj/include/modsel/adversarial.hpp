#pragma once
// Randomized epoch balancing and the outer elimination loop for adversarially
// generated contexts.

#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "modsel/balancing.hpp"
#include "modsel/concentration.hpp"
#include "modsel/core.hpp"
#include "modsel/environments.hpp"
#include "modsel/learners.hpp"

namespace modsel {

/// Regret scale of an OFUL learner: (d^2 + d S^2) min(R^max, L^2).
inline double compute_z(Eigen::Index dim, double param_norm, double reward_range,
                        double action_norm) {
  if (dim < 1) throw ParameterError("compute_z: d must be >= 1");
  if (!(param_norm > 0.0 && reward_range > 0.0 && action_norm > 0.0))
    throw ParameterError("compute_z: S, R^max and L must be positive");
  const double d = static_cast<double>(dim);
  return (d * d + d * param_norm * param_norm) *
         std::min(reward_range, action_norm * action_norm);
}

/// p_i = (1/z_i) / sum_j (1/z_j)
inline std::vector<double> sampling_distribution(std::span<const double> zs) {
  if (zs.empty()) throw ParameterError("sampling_distribution: no weights");
  double total = 0.0;
  for (double z : zs) {
    if (!(z > 0.0)) throw ParameterError("sampling_distribution: weights must be positive");
    total += 1.0 / z;
  }
  std::vector<double> p;
  p.reserve(zs.size());
  for (double z : zs) p.push_back((1.0 / z) / total);
  return p;
}

/// Greedy thinning so that consecutive kept weights are at least a factor 2
/// apart. Returns kept positions; the first is always kept.
inline std::vector<std::size_t> filter_exponential(std::span<const double> zs) {
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < zs.size(); ++i) {
    if (kept.empty() || 2.0 * zs[kept.back()] <= zs[i] * (1.0 + 1e-12)) kept.push_back(i);
  }
  return kept;
}

/// Bookkeeping of one EpochBalancing call, indexed by position in `active`.
struct EpochState {
  int epoch = 1;
  std::int64_t round = 0;  ///< rounds played in this epoch
  std::vector<std::size_t> active;  ///< global learner ids, ascending
  std::vector<double> z;
  std::vector<double> p;
  std::vector<double> lower_sums;          ///< sum_k B_{k,i} over every epoch round
  std::vector<std::int64_t> lower_terms;   ///< number of B terms summed
  std::vector<double> reward_sums;         ///< U_i within the epoch
  std::vector<PlayCount> plays;            ///< n_i within the epoch
  std::vector<CandidateBound> bounds;      ///< running R_i within the epoch
  double test_scale = 1.0;                 ///< multiplier on the concentration term
};

struct EpochTestValues {
  double lhs = 0.0;
  double rhs = 0.0;
  bool triggered = false;
};

/// sum_i [U_i + R_i(n_i)] + scale * 0.85 sqrt(t (ln_+ ln_+(4t) + 0.72 ln(10.4/delta)))
///   < max_i sum_k B_{k,i}
inline EpochTestValues epoch_test_values(const EpochState& s, double delta) {
  if (s.round < 1) throw ParameterError("epoch test: needs at least one round");
  EpochTestValues v;
  for (std::size_t k = 0; k < s.active.size(); ++k)
    v.lhs += s.reward_sums[k] + s.bounds[k](s.plays[k]);
  v.lhs += s.test_scale * epoch_hoeffding_radius(s.round, delta);
  v.rhs = -std::numeric_limits<double>::infinity();
  for (double b : s.lower_sums) v.rhs = std::max(v.rhs, b);
  v.triggered = v.lhs < v.rhs;
  return v;
}

inline bool epoch_misspecification_test(const EpochState& s, double delta) {
  return epoch_test_values(s, delta).triggered;
}

enum class RewardRangeMode { Unit, NormProduct };

struct AdversarialConfig {
  double delta = 0.05;
  /// Learners surviving an epoch keep their estimates; false restores them.
  bool persist = true;
  bool broadcast = false;
  /// Multiplier on the epoch test's concentration term (e.g. 1 + 2 sigma).
  double test_scale = 1.0;
};

struct EpochRecord {
  int epoch = 1;
  std::int64_t start_round = 1;   ///< global round of the first epoch round
  std::int64_t end_round = 0;     ///< last global round, 0 while running
  bool terminated = false;        ///< ended because the test triggered
  std::size_t removed = 0;        ///< learner dropped at termination
};

/// Runs EpochBalancing on {s, ..., M} for s = 1, 2, ... and drops the
/// smallest-index learner whenever an epoch's test triggers. Learners must be
/// ordered by increasing model class. If the last remaining learner's epoch
/// also triggers, it keeps playing alone without further tests.
class AdversarialMaster {
 public:
  AdversarialMaster(std::vector<LearnerPtr> learners, AdversarialConfig cfg)
      : learners_(std::move(learners)), cfg_(cfg), regret_(learners_.size()) {
    if (learners_.empty()) throw ParameterError("adversarial master needs at least one learner");
    if (!(cfg.delta > 0.0 && cfg.delta < 1.0))
      throw ParameterError("adversarial master: delta must lie in (0, 1)");
    for (const auto& l : learners_) {
      const auto d = l->descriptor();
      z_.push_back(compute_z(d.dim, d.param_norm, d.reward_range, d.action_norm));
      prototypes_.push_back(l->clone());
    }
    plays_.assign(learners_.size(), 0);
    reward_sums_.assign(learners_.size(), 0.0);
    last_bound_.assign(learners_.size(), 0.0);
    start_epoch(0, 1);
  }

  const EpochState& epoch_state() const { return epoch_; }
  const std::vector<EpochRecord>& epochs() const { return records_; }
  const RegretAccount& regret() const { return regret_; }
  const BaseLearner& learner(std::size_t i) const { return *learners_.at(i); }
  std::size_t size() const { return learners_.size(); }
  std::int64_t round() const { return round_; }
  const std::vector<double>& weights() const { return z_; }
  const std::vector<std::string>& diagnostics() const { return diagnostics_; }
  /// Test values after the most recent round.
  const EpochTestValues& last_test() const { return last_test_; }
  /// Proposals of the active learners in the most recent round.
  const std::vector<Proposal>& last_proposals() const { return proposals_; }
  const Matrix& last_actions() const { return actions_; }

  const RoundTrace& run_round(const LinearBanditEnv& env, RunStreams& streams) {
    if (pending_next_ > 0) {
      start_epoch(pending_next_, records_.back().epoch + 1);
      pending_next_ = 0;
    }
    const std::int64_t t = ++round_;
    actions_ = env.emit_round(t, streams.contexts);
    const double mu_star = env.optimal_value(actions_);

    const std::size_t m = epoch_.active.size();
    proposals_.resize(m);
    for (std::size_t k = 0; k < m; ++k) {
      proposals_[k] = learners_[epoch_.active[k]]->propose(actions_);
      epoch_.lower_sums[k] += proposals_[k].lower;
      ++epoch_.lower_terms[k];
    }
    const std::size_t pos = sample(streams.sampling);
    const std::size_t chosen = epoch_.active[pos];
    const Proposal& prop = proposals_[pos];
    const Vector action = actions_.col(static_cast<Eigen::Index>(prop.index));
    const RealizedReward rr = env.realize_reward(action, streams.noise);

    const double rmax = learners_[chosen]->descriptor().reward_range;
    epoch_.bounds[pos].record(2.0 * std::min(prop.width, rmax));
    learners_[chosen]->observe(action, rr.reward, true);
    if (cfg_.broadcast)
      for (std::size_t k = 0; k < m; ++k)
        if (k != pos) learners_[epoch_.active[k]]->observe(action, rr.reward, false);
    epoch_.reward_sums[pos] += rr.reward;
    ++epoch_.plays[pos];
    ++epoch_.round;
    ++plays_[chosen];
    reward_sums_[chosen] += rr.reward;
    last_bound_[chosen] = epoch_.bounds[pos](epoch_.plays[pos]);
    regret_.record(chosen, mu_star, rr.conditional_mean);

    last_test_ = epoch_test_values(epoch_, cfg_.delta);
    if (last_test_.triggered && !testing_disabled_) finish_epoch();

    trace_.round = t;
    trace_.learner = chosen;
    trace_.reward = rr.reward;
    trace_.mu_star = mu_star;
    trace_.conditional_mean = rr.conditional_mean;
    trace_.cumulative_regret = regret_.total();
    trace_.epoch = epoch_.epoch;
    trace_.learners.resize(learners_.size());
    for (std::size_t i = 0; i < learners_.size(); ++i)
      trace_.learners[i] = {plays_[i], reward_sums_[i], last_bound_[i], is_active(i)};
    return trace_;
  }

 private:
  bool is_active(std::size_t i) const {
    if (pending_next_ > 0) return i >= pending_next_;
    return i >= epoch_.active.front();
  }

  void start_epoch(std::size_t first, int index) {
    epoch_ = EpochState{};
    epoch_.epoch = index;
    epoch_.test_scale = cfg_.test_scale;
    std::vector<double> zs;
    for (std::size_t i = first; i < learners_.size(); ++i) {
      epoch_.active.push_back(i);
      zs.push_back(z_[i]);
      if (!cfg_.persist && index > 1) learners_[i] = prototypes_[i]->clone();
    }
    const std::size_t m = epoch_.active.size();
    epoch_.z = zs;
    epoch_.p = sampling_distribution(zs);
    epoch_.lower_sums.assign(m, 0.0);
    epoch_.lower_terms.assign(m, 0);
    epoch_.reward_sums.assign(m, 0.0);
    epoch_.plays.assign(m, 0);
    for (std::size_t k = 0; k < m; ++k) {
      const double rmax = learners_[epoch_.active[k]]->descriptor().reward_range;
      epoch_.bounds.push_back(CandidateBound::data_dependent(2.0 * rmax));
      last_bound_[epoch_.active[k]] = 0.0;
    }
    cumulative_.resize(m);
    std::partial_sum(epoch_.p.begin(), epoch_.p.end(), cumulative_.begin());
    records_.push_back(EpochRecord{index, round_ + 1, 0, false, 0});
  }

  void finish_epoch() {
    auto& rec = records_.back();
    rec.end_round = round_;
    rec.terminated = true;
    rec.removed = epoch_.active.front();
    if (epoch_.active.size() == 1) {
      diagnostics_.push_back("round " + std::to_string(round_) +
                             ": test triggered with a single learner left; testing disabled");
      testing_disabled_ = true;
      records_.push_back(EpochRecord{rec.epoch + 1, round_ + 1, 0, false, 0});
      return;
    }
    pending_next_ = epoch_.active.front() + 1;
  }

  std::size_t sample(Rng& rng) const {
    const double u = rng.uniform();
    for (std::size_t k = 0; k + 1 < cumulative_.size(); ++k)
      if (u < cumulative_[k]) return k;
    return cumulative_.size() - 1;
  }

  std::vector<LearnerPtr> learners_;
  std::vector<LearnerPtr> prototypes_;
  AdversarialConfig cfg_;
  std::vector<double> z_;
  EpochState epoch_;
  std::vector<double> cumulative_;
  std::vector<EpochRecord> records_;
  RegretAccount regret_;
  std::vector<PlayCount> plays_;
  std::vector<double> reward_sums_;
  std::vector<double> last_bound_;
  std::vector<Proposal> proposals_;
  Matrix actions_;
  EpochTestValues last_test_;
  RoundTrace trace_;
  std::vector<std::string> diagnostics_;
  std::int64_t round_ = 0;
  std::size_t pending_next_ = 0;
  bool testing_disabled_ = false;
};

}  // namespace modsel
