#pragma once
// Per-round invariant checks and Monte-Carlo coverage suites.

#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "modsel/balancing.hpp"
#include "modsel/concentration.hpp"
#include "modsel/core.hpp"
#include "modsel/rng.hpp"

namespace modsel::verification {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// max(2, (2 c_j / c_i)^{1/beta_i} n_j^{beta_j/beta_i - 1}) for bounds c n^beta.
inline double play_ratio_limit(PlayCount n_j, double c_i, double beta_i, double c_j,
                               double beta_j) {
  const double nj = static_cast<double>(n_j);
  return std::max(2.0, std::pow(2.0 * c_j / c_i, 1.0 / beta_i) * std::pow(nj, beta_j / beta_i - 1.0));
}

struct InvariantCounts {
  std::int64_t rounds = 0;
  std::int64_t balance_violations = 0;
  std::int64_t ratio_checks = 0;
  std::int64_t ratio_violations = 0;
  std::int64_t count_violations = 0;     ///< sum of plays != t
  std::int64_t monotone_violations = 0;  ///< a learner re-entered the active set
  std::int64_t inactive_plays = 0;       ///< an eliminated learner was selected
  double worst_balance_gap = 0.0;        ///< max_{i,j active} R_i - R_j

  InvariantCounts& operator+=(const InvariantCounts& o) {
    rounds += o.rounds;
    balance_violations += o.balance_violations;
    ratio_checks += o.ratio_checks;
    ratio_violations += o.ratio_violations;
    count_violations += o.count_violations;
    monotone_violations += o.monotone_violations;
    inactive_plays += o.inactive_plays;
    worst_balance_gap = std::max(worst_balance_gap, o.worst_balance_gap);
    return *this;
  }
  bool clean() const {
    return balance_violations == 0 && ratio_violations == 0 && count_violations == 0 &&
           monotone_violations == 0 && inactive_plays == 0;
  }
};

/// Feeds on the RoundTrace stream of one stochastic-master run. Poly-capped
/// parameters, when given, enable the play-ratio check for those learners.
class InvariantChecker {
 public:
  explicit InvariantChecker(std::vector<std::optional<PolyCappedParams>> poly = {})
      : poly_(std::move(poly)) {}

  void observe(const RoundTrace& tr) {
    auto& c = counts_;
    ++c.rounds;
    const auto& ls = tr.learners;
    PlayCount total = 0;
    for (const auto& l : ls) total += l.plays;
    if (total != tr.round) ++c.count_violations;
    if (!prev_active_.empty()) {
      for (std::size_t i = 0; i < ls.size(); ++i) {
        if (ls[i].active && !prev_active_[i]) ++c.monotone_violations;
        if (i == tr.learner && !prev_active_[i]) ++c.inactive_plays;
      }
    }
    prev_active_.assign(ls.size(), false);
    for (std::size_t i = 0; i < ls.size(); ++i) prev_active_[i] = ls[i].active;

    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& l : ls) {
      if (!l.active) continue;
      lo = std::min(lo, l.bound);
      hi = std::max(hi, l.bound);
    }
    if (hi > lo) {
      c.worst_balance_gap = std::max(c.worst_balance_gap, hi - lo);
      if (hi > lo + 1.0 + kTolerance) ++c.balance_violations;
    }

    for (std::size_t i = 0; i < ls.size() && i < poly_.size(); ++i) {
      if (!poly_[i] || !ls[i].active || ls[i].plays < 1) continue;
      for (std::size_t j = 0; j < ls.size() && j < poly_.size(); ++j) {
        if (i == j || !poly_[j] || !ls[j].active || ls[j].plays < 1) continue;
        const auto& pi = *poly_[i];
        const auto& pj = *poly_[j];
        const double limit = play_ratio_limit(ls[j].plays, pi.scale * pi.constant, pi.exponent,
                                              pj.scale * pj.constant, pj.exponent);
        ++c.ratio_checks;
        if (static_cast<double>(ls[i].plays) / static_cast<double>(ls[j].plays) >
            limit * (1.0 + 1e-12))
          ++c.ratio_violations;
      }
    }
  }

  const InvariantCounts& counts() const { return counts_; }

 private:
  std::vector<std::optional<PolyCappedParams>> poly_;
  std::vector<bool> prev_active_;
  InvariantCounts counts_;
};

/// Poly-capped parameters of each learner's presumed bound, if it has one.
inline std::vector<std::optional<PolyCappedParams>> poly_params(
    const std::vector<LearnerPtr>& learners) {
  std::vector<std::optional<PolyCappedParams>> out;
  for (const auto& l : learners) {
    const auto* p = std::get_if<PolyCappedParams>(&l->presumed_bound().params());
    out.push_back(p ? std::optional<PolyCappedParams>(*p) : std::nullopt);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Coverage Monte-Carlo

/// Fraction of trials in which, for M learners played round-robin on i.i.d.
/// contexts with Bernoulli rewards, some learner's deviation
///   |n_i mu* - U_i - Reg_i| = |sum (mu* - mu*_k) + sum (mu_k - r_k)|
/// exceeds 2 hoeffding_radius(n_i, M, delta) at some round t <= T.
inline double event_g_violation_rate(int trials, std::int64_t horizon, std::size_t learners,
                                     double delta, std::uint64_t seed) {
  std::vector<double> radius(static_cast<std::size_t>(horizon / static_cast<std::int64_t>(learners)) + 2);
  for (std::size_t n = 1; n < radius.size(); ++n)
    radius[n] = 2.0 * hoeffding_radius(static_cast<PlayCount>(n), learners, delta);
  // mu*_t ~ U(0.3, 0.9); the played arm has mean mu*_t - g_i, g_i = 0.1 i.
  const double mu_bar = 0.6;
  int violations = 0;
  for (int k = 0; k < trials; ++k) {
    Rng rng = Rng(seed).split(static_cast<std::uint64_t>(k));
    std::vector<double> dev(learners, 0.0);
    std::vector<PlayCount> n(learners, 0);
    bool bad = false;
    for (std::int64_t t = 0; t < horizon && !bad; ++t) {
      const std::size_t i = static_cast<std::size_t>(t) % learners;
      const double mu_star = 0.3 + 0.6 * rng.uniform();
      const double mu = mu_star - 0.1 * static_cast<double>(i) * (mu_star - 0.3) / 0.6;
      const double r = rng.uniform() < mu ? 1.0 : 0.0;
      dev[i] += (mu_bar - mu_star) + (mu - r);
      ++n[i];
      if (std::abs(dev[i]) > radius[static_cast<std::size_t>(n[i])]) bad = true;
    }
    violations += bad;
  }
  return static_cast<double>(violations) / trials;
}

/// Fraction of trials in which some learner's count under i.i.d. sampling with
/// probabilities p exceeds playcount_upper_bound at some t <= T.
inline double playcount_violation_rate(int trials, std::int64_t horizon,
                                       const std::vector<double>& p, double delta,
                                       std::uint64_t seed) {
  const std::size_t m = p.size();
  std::vector<std::vector<double>> bound(m, std::vector<double>(static_cast<std::size_t>(horizon) + 1));
  for (std::size_t i = 0; i < m; ++i)
    for (std::int64_t t = 1; t <= horizon; ++t)
      bound[i][static_cast<std::size_t>(t)] = playcount_upper_bound(t, p[i], m, delta);
  std::vector<double> cum(m);
  double acc = 0.0;
  for (std::size_t i = 0; i < m; ++i) cum[i] = (acc += p[i]);
  int violations = 0;
  for (int k = 0; k < trials; ++k) {
    Rng rng = Rng(seed).split(static_cast<std::uint64_t>(k));
    std::vector<PlayCount> n(m, 0);
    bool bad = false;
    for (std::int64_t t = 1; t <= horizon && !bad; ++t) {
      const double u = rng.uniform();
      std::size_t i = 0;
      while (i + 1 < m && u >= cum[i]) ++i;
      ++n[i];
      if (static_cast<double>(n[i]) > bound[i][static_cast<std::size_t>(t)]) bad = true;
    }
    violations += bad;
  }
  return static_cast<double>(violations) / trials;
}

/// Number of random streams on which the deterministic elliptical potential
/// inequality fails. Streams vary d, length, cap, regularization and norms.
inline int elliptical_potential_failures(int streams, std::uint64_t seed) {
  int failures = 0;
  std::normal_distribution<double> normal;
  for (int k = 0; k < streams; ++k) {
    Rng rng = Rng(seed).split(static_cast<std::uint64_t>(k));
    const auto d = static_cast<Eigen::Index>(1 + rng() % 6);
    const int len = static_cast<int>(1 + rng() % 200);
    const double cap = 0.1 + 3.0 * rng.uniform();
    const double lambda = 0.05 + 2.0 * rng.uniform();
    std::vector<Vector> xs;
    for (int t = 0; t < len; ++t) {
      Vector x(d);
      for (Eigen::Index j = 0; j < d; ++j) x[j] = normal(rng);
      x *= 3.0 * rng.uniform() / std::max(x.norm(), 1e-12);
      xs.push_back(std::move(x));
    }
    if (!elliptical_potential_check(xs, lambda * Matrix::Identity(d, d), cap).holds) ++failures;
  }
  return failures;
}

/// Fraction of trials in which the Bernoulli(p)-gated potential sum exceeds
/// randomized_elliptical_bound at some n <= length.
inline double randomized_elliptical_violation_rate(int trials, int length, Eigen::Index dim,
                                                   double p, double cap, double delta,
                                                   std::uint64_t seed) {
  int violations = 0;
  std::normal_distribution<double> normal;
  for (int k = 0; k < trials; ++k) {
    Rng rng = Rng(seed).split(static_cast<std::uint64_t>(k));
    GramAccumulator gram = GramAccumulator::scaled_identity(dim, 1.0);
    double lhs = 0.0;
    bool bad = false;
    for (int n = 1; n <= length && !bad; ++n) {
      Vector x(dim);
      for (Eigen::Index j = 0; j < dim; ++j) x[j] = normal(rng);
      x.normalize();
      lhs += std::min(cap, gram.inverse_norm_sq(x));
      if (rng.uniform() < p) gram.update(x);
      const double bound =
          randomized_elliptical_bound(n, cap, p, delta, std::exp(gram.log_det_ratio()));
      if (lhs > bound) bad = true;
    }
    violations += bad;
  }
  return static_cast<double>(violations) / trials;
}

}  // namespace modsel::verification
