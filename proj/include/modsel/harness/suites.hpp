#pragma once
// Property suites behind `verify`: per-round invariants on stochastic-master
// runs and Monte-Carlo coverage of the concentration bounds.

#include <string>
#include <vector>

#include "modsel/harness/experiment.hpp"
#include "modsel/verification.hpp"

namespace modsel::harness {

using verification::CheckResult;
using verification::InvariantCounts;

/// Invariant counts over `seeds` runs of a stochastic-master config.
inline InvariantCounts check_invariants(const ExperimentConfig& c, int seeds) {
  InvariantCounts total;
  for (int k = 0; k < seeds; ++k) {
    RunStreams probe = RunStreams::derive(c.master_seed, static_cast<std::uint64_t>(k));
    auto poly = verification::poly_params(build_scenario(c, probe).learners);
    verification::InvariantChecker checker(std::move(poly));
    run_seed(c, k, nullptr, [&](const RoundTrace& tr) { checker.observe(tr); });
    total += checker.counts();
  }
  return total;
}

/// Stochastic-master scenarios for the invariant checks. The first two mix
/// poly-capped scales and exponents.
inline std::vector<std::pair<std::string, ExperimentConfig>> invariant_scenarios() {
  std::vector<std::pair<std::string, ExperimentConfig>> out;
  auto preset = [](const std::string& name) {
    ExperimentConfig c;
    apply_preset(c, name);
    return c;
  };
  {
    ExperimentConfig c = preset("scripted");
    c.means = {0.6, 0.55, 0.5, 0.4, 0.2};
    c.arms = {0, 1, 2, 3, 4};
    c.scales = {1, 2, 4, 1, 8};
    c.exponents = {0.5, 0.5, 0.6, 0.75, 0.4};
    c.bound_constant = 1.0;
    c.horizon = 100000;
    out.emplace_back("scripted-mixed", c);
  }
  {
    ExperimentConfig c = preset("scripted");
    c.means = {0.5, 0.5, 0.45, 0.3};
    c.arms = {0, 1, 2, 3};
    c.scales = {1, 3, 2, 5};
    c.exponents = {0.5, 0.7, 0.9, 0.5};
    c.bound_constant = 2.0;
    c.horizon = 20000;
    out.emplace_back("scripted-gaps", c);
  }
  {
    ExperimentConfig c = preset("nested-dims");
    c.horizon = 16384;
    out.emplace_back("nested-dims", c);
  }
  {
    ExperimentConfig c = preset("kappa-grid");
    c.horizon = 5000;
    out.emplace_back("kappa-grid", c);
  }
  {
    ExperimentConfig c = preset("eps-grid");
    c.horizon = 5000;
    out.emplace_back("eps-grid", c);
  }
  {
    ExperimentConfig c = preset("linucb-grid");
    c.horizon = 5000;
    out.emplace_back("linucb-grid", c);
  }
  return out;
}

inline std::string describe(const InvariantCounts& n) {
  return "rounds=" + std::to_string(n.rounds) + " balance=" + std::to_string(n.balance_violations) +
         " ratio=" + std::to_string(n.ratio_violations) + "/" + std::to_string(n.ratio_checks) +
         " count=" + std::to_string(n.count_violations) +
         " monotone=" + std::to_string(n.monotone_violations + n.inactive_plays);
}

inline std::vector<CheckResult> run_invariant_suite(int seeds = 2) {
  std::vector<CheckResult> out;
  for (const auto& [name, c] : invariant_scenarios()) {
    const auto n = check_invariants(c, seeds);
    out.push_back({"invariants/" + name, n.clean(), describe(n)});
  }
  return out;
}

struct CoverageSettings {
  int trials = 5000;
  std::int64_t horizon = 10000;
  double delta = 0.05;
  int streams = 10000;
  int randomized_trials = 2000;
  int randomized_length = 2000;
  std::uint64_t seed = 2024;
};

inline std::vector<CheckResult> run_coverage_suite(const CoverageSettings& s = {}) {
  namespace v = verification;
  std::vector<CheckResult> out;
  const double limit = s.delta + 0.01;
  auto rate = [&](const std::string& name, double r) {
    out.push_back({name, r <= limit,
                   "violation rate " + std::to_string(r) + " (limit " + std::to_string(limit) + ")"});
  };
  rate("coverage/event-G", v::event_g_violation_rate(s.trials, s.horizon, 4, s.delta, s.seed));
  rate("coverage/playcount",
       v::playcount_violation_rate(s.trials, s.horizon, {0.25, 0.25, 0.25, 0.25}, s.delta, s.seed + 1));
  const int fails = v::elliptical_potential_failures(s.streams, s.seed + 2);
  out.push_back({"coverage/elliptical-potential", fails == 0,
                 std::to_string(fails) + " failures in " + std::to_string(s.streams) + " streams"});
  rate("coverage/randomized-elliptical",
       v::randomized_elliptical_violation_rate(s.randomized_trials, s.randomized_length, 3, 0.3,
                                               1.0, s.delta, s.seed + 3));
  return out;
}

}  // namespace modsel::harness
