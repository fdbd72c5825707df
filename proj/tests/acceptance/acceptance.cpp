// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.
//
//   acceptance [--only N[,N...]] [--threads K]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "modsel/modsel.hpp"

using namespace modsel;
using namespace modsel::harness;

namespace {

int g_threads = 1;

struct Outcome {
  bool passed = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double budget_seconds;
  std::function<Outcome()> run;
};

std::string fmt(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

ExperimentConfig preset(const std::string& name) {
  ExperimentConfig c;
  apply_preset(c, name);
  c.threads = g_threads;
  return c;
}

// 1, 2 ----------------------------------------------------------------------

Outcome balancing_invariant() {
  InvariantCounts total;
  std::string per;
  for (const auto& [name, c] : invariant_scenarios()) {
    const auto n = check_invariants(c, 2);
    total += n;
    per += " " + name + "=" + std::to_string(n.balance_violations);
  }
  return {total.balance_violations == 0 && total.count_violations == 0 &&
              total.monotone_violations == 0 && total.inactive_plays == 0,
          std::to_string(total.balance_violations) + " violations in " +
              std::to_string(total.rounds) + " rounds, worst gap " + fmt(total.worst_balance_gap, 6) +
              ";" + per};
}

Outcome play_ratio_invariant() {
  InvariantCounts total;
  for (const auto& [name, c] : invariant_scenarios()) {
    if (name.rfind("scripted", 0) != 0 && name != "nested-dims") continue;
    total += check_invariants(c, 4);
  }
  return {total.ratio_checks > 0 && total.ratio_violations == 0,
          std::to_string(total.ratio_violations) + " violations in " +
              std::to_string(total.ratio_checks) + " pair checks"};
}

// 3, 4 ----------------------------------------------------------------------

Outcome wellspecified_survival() {
  // arms 0.05 and 0.1 below mu*; C = 10 keeps g n <= C sqrt(n) for n <= 10^4
  auto c = preset("scripted");
  c.means = {0.5, 0.5, 0.45, 0.4};
  c.arms = {0, 1, 2, 3};
  c.bound_constant = 10.0;
  c.horizon = 10000;
  c.seeds = 200;
  const auto rs = run_seeds(c, g_threads);
  int runs = 0;
  for (const auto& r : rs)
    runs += std::any_of(r.elimination_rounds.begin(), r.elimination_rounds.end(),
                        [](auto e) { return e > 0; });
  const double rate = static_cast<double>(runs) / static_cast<double>(rs.size());
  return {rate <= 0.08, std::to_string(runs) + "/200 runs with an elimination (rate " + fmt(rate) +
                            ", limit 0.080)"};
}

/// Round at which learner 2 (mean mu - gap, bound sqrt(n) ^ n) first fails the
/// test when every quantity takes its expected value. Written out from the
/// test inequality, independent of the library's master.
std::int64_t gap_oracle_round(double mu, double gap, double delta, double c_scale) {
  auto lnp = [](double x) { return std::log(std::max(x, std::exp(1.0))); };
  auto radius = [&](double n) {
    const double h = std::max(3.0, 0.85 * std::sqrt(n * (lnp(lnp(n / 2)) + 0.72 * std::log(10.4 * 2 / delta))));
    return c_scale * h / n;
  };
  for (std::int64_t t = 2;; ++t) {
    // equal bounds: plays alternate, learner 1 first
    const double n1 = static_cast<double>((t + 1) / 2);
    const double n2 = static_cast<double>(t / 2);
    const double upper2 = (mu - gap) + std::min(std::sqrt(n2), n2) / n2 + radius(n2);
    const double lower1 = mu - radius(n1);
    if (upper2 < lower1) return t;
  }
}

Outcome gap_elimination() {
  auto c = preset("scripted");
  c.means = {0.75, 0.25};
  c.arms = {0, 1};
  c.bound_constant = 1.0;
  c.bound_exponent = 0.5;
  c.horizon = 10000;
  c.seeds = 200;
  const std::int64_t oracle = gap_oracle_round(0.75, 0.5, c.delta, c.c_scale);
  const auto rs = run_seeds(c, g_threads);
  int ok = 0;
  std::vector<double> rounds;
  for (const auto& r : rs) {
    const auto e = r.elimination_rounds[1];
    ok += e > 0 && e <= 2 * oracle;
    rounds.push_back(static_cast<double>(e > 0 ? e : c.horizon + 1));
  }
  const double frac = ok / 200.0;
  return {frac >= 0.95, "oracle round " + std::to_string(oracle) + ", median elimination " +
                            fmt(quantile(rounds, 0.5), 0) + ", within 2x in " + std::to_string(ok) +
                            "/200 (" + fmt(frac) + ", need 0.950)"};
}

// 5 -------------------------------------------------------------------------

Outcome rate_recovery() {
  auto c = preset("nested-dims");
  c.seeds = 16;
  const auto master = run_seeds(c, g_threads);
  const Summary s = summarize(master);
  auto single = c;
  single.master = MasterKind::Single;
  single.single_index = 0;  // d = 2 = d*
  const auto ref = run_seeds(single, g_threads);
  const double ratio = compare_to_oracle(s.finals, final_regrets(ref));
  const bool ok = s.slope >= 0.4 && s.slope <= 0.6 && ratio <= 10.0;
  return {ok, "slope " + fmt(s.slope) + " (need [0.4, 0.6]), ratio to d=2 learner " + fmt(ratio) +
                  " (need <= 10), mean final regret " + fmt(s.mean, 1) + " over 16 seeds"};
}

// 6, 7 ----------------------------------------------------------------------

Outcome kappa_tuning() {
  auto c = preset("kappa-grid");
  c.seeds = 100;
  const auto master = run_seeds(c, g_threads);
  auto single = c;
  single.master = MasterKind::Single;
  single.single_index = 0;  // kappa = 1
  const auto ref = run_seeds(single, g_threads);
  int wins = 0;
  for (std::size_t k = 0; k < master.size(); ++k) wins += master[k].final_regret <= ref[k].final_regret;
  const double frac = wins / 100.0;
  return {frac >= 0.9, "master <= kappa=1 learner in " + std::to_string(wins) + "/100 seeds (need 90); mean " +
                           fmt(mean_of(final_regrets(master)), 1) + " vs " +
                           fmt(mean_of(final_regrets(ref)), 1)};
}

Outcome eps_misspecification() {
  auto c = preset("eps-grid");
  c.seeds = 100;
  const auto grid = eps_grid(c.count, c.dim);
  const auto rs = run_seeds(c, g_threads);
  int clean = 0;
  int any = 0;
  for (const auto& r : rs) {
    bool bad = false;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (r.elimination_rounds[i] > 0) ++any;
      if (grid[i] >= c.misspecification - 1e-12 && r.elimination_rounds[i] > 0) bad = true;
    }
    clean += !bad;
  }
  return {clean >= 90, "no learner with eps_i >= eps* removed in " + std::to_string(clean) +
                           "/100 seeds (need 90); eliminations of any learner: " + std::to_string(any)};
}

// 8, 9 ----------------------------------------------------------------------

Outcome adversarial_termination() {
  auto c = preset("adversarial-wellspec");
  c.seeds = 200;
  const auto rs = run_seeds(c, g_threads);
  int survived = 0;
  for (const auto& r : rs) survived += r.epoch_starts.size() == 1;
  const double frac = survived / 200.0;
  return {frac >= 0.92, "first epoch survived in " + std::to_string(survived) + "/200 runs (" +
                            fmt(frac) + ", need 0.920)"};
}

Outcome adversarial_outer_loop() {
  auto c = preset("adversarial-nested");
  c.seeds = 100;
  // i* = first learner whose dimension covers d*
  std::size_t i_star = 0;
  while (c.dims[i_star] < c.d_star) ++i_star;
  ++i_star;
  const auto rs = run_seeds(c, g_threads);
  std::size_t max_epochs = 0;
  std::size_t len = static_cast<std::size_t>(c.horizon);
  for (const auto& r : rs) {
    max_epochs = std::max(max_epochs, r.epoch_starts.size());
    len = std::min(len, static_cast<std::size_t>(c.horizon - r.epoch_starts.back() + 1));
  }
  // regret accrued since the final epoch began, averaged over seeds
  std::vector<double> local(len, 0.0);
  for (const auto& r : rs) {
    const auto s = static_cast<std::size_t>(r.epoch_starts.back());
    const double base = s >= 2 ? r.regret_curve[s - 2] : 0.0;
    for (std::size_t tau = 0; tau < len; ++tau)
      local[tau] += (r.regret_curve[s - 1 + tau] - base) / static_cast<double>(rs.size());
  }
  double slope = std::numeric_limits<double>::quiet_NaN();
  if (len > 64) slope = fit_loglog_slope(local, 16, static_cast<std::int64_t>(len));
  const bool ok = max_epochs <= i_star && slope >= 0.4 && slope <= 0.65;
  return {ok, "max epochs " + std::to_string(max_epochs) + " (i* = " + std::to_string(i_star) +
                  "), slope after final epoch start " + fmt(slope) + " over " + std::to_string(len) +
                  " rounds (need [0.4, 0.65])"};
}

// 10 ------------------------------------------------------------------------

Outcome coverage() {
  bool ok = true;
  std::string detail;
  for (const auto& r : run_coverage_suite()) {
    ok = ok && r.passed;
    detail += (detail.empty() ? "" : "; ") + r.name.substr(9) + ": " + r.detail;
  }
  return {ok, detail};
}

// 11 ------------------------------------------------------------------------

Outcome oful_oracle() {
  double worst = 0.0;
  for (int d : {2, 5, 10}) {
    OfulConfig cfg;
    cfg.dim = d;
    cfg.sigma = 0.1;
    auto s = OfulState::fresh(cfg);
    Rng rng(1000 + static_cast<std::uint64_t>(d));
    std::normal_distribution<double> normal;
    Vector theta(d);
    for (auto& e : theta) e = normal(rng);
    theta.normalize();
    Matrix v = cfg.lambda * Matrix::Identity(d, d);
    Vector m = Vector::Zero(d);
    for (int t = 1; t <= 10000; ++t) {
      Vector a(d);
      for (auto& e : a) e = normal(rng);
      a.normalize();
      const double r = a.dot(theta) + 0.1 * normal(rng);
      s = oful_update(std::move(s), a, r);
      v += a * a.transpose();
      m += r * a;
      if (t % 500 == 0) {
        const Vector scratch = v.colPivHouseholderQr().solve(m);
        worst = std::max(worst, (s.theta_hat - scratch).norm() / scratch.norm());
      }
    }
  }

  // realized regret against oful_regret_bound on runs where containment held
  int contained = 0;
  int violations = 0;
  const std::int64_t T = 3000;
  for (int k = 0; k < 40; ++k) {
    const Eigen::Index d = 2 + k % 4;
    OfulConfig cfg;
    cfg.dim = d;
    cfg.sigma = 0.1;
    cfg.reward_range = 1.0;
    RunStreams streams = RunStreams::derive(77, static_cast<std::uint64_t>(k));
    const Vector theta = random_sparse_theta(d, d, 1.0, streams.setup);
    LinearBanditEnv env(theta, IidUnitSphere{20}, {NoiseKind::Gaussian, 0.1});
    OfulLearner l(cfg, CandidateBound::data_dependent(1.0));
    bool holds = true;
    double regret = 0.0;
    double beta_max = 0.0;
    for (std::int64_t t = 1; t <= T; ++t) {
      const double beta = oful_beta(l.state());
      beta_max = std::max(beta_max, beta);
      holds = holds && confidence_distance(l.state(), theta) <= beta;
      const Matrix set = env.emit_round(t, streams.contexts);
      const auto p = l.propose(set);
      const Vector a = set.col(static_cast<Eigen::Index>(p.index));
      regret += env.optimal_value(set) - env.conditional_mean(a);
      l.observe(a, env.realize_reward(a, streams.noise).reward);
    }
    if (!holds) continue;
    ++contained;
    violations += regret > oful_regret_bound(beta_max, d, T, 1.0, cfg.lambda);
  }
  const bool ok = worst <= 1e-8 && contained > 0 && violations == 0;
  char err[32];
  std::snprintf(err, sizeof err, "%.2e", worst);
  return {ok, std::string("max relative error ") + err + " (limit 1e-8); regret bound held on " +
                  std::to_string(contained - violations) + "/" + std::to_string(contained) +
                  " containment-holding runs"};
}

// 12 ------------------------------------------------------------------------

Outcome reproducibility() {
  int same = 0;
  int total = 0;
  for (const auto& name : scenario_names()) {
    if (name == "custom") continue;
    auto c = preset(name);
    auto trace = [&] {
      std::ostringstream os;
      run_seed(c, 3, &os);
      return os.str();
    };
    same += trace() == trace();
    ++total;
  }
  return {same == total, std::to_string(same) + "/" + std::to_string(total) +
                             " scenarios produced identical trace bytes"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::vector<int> only;
  g_threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  app.add_option("--only", only, "Criteria to run")->delimiter(',');
  app.add_option("--threads", g_threads, "Worker threads")->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> criteria{
      {1, "balancing invariant", 60, balancing_invariant},
      {2, "play-ratio invariant", 60, play_ratio_invariant},
      {3, "well-specified survival", 120, wellspecified_survival},
      {4, "gap elimination", 120, gap_elimination},
      {5, "rate recovery", 300, rate_recovery},
      {6, "kappa tuning", 300, kappa_tuning},
      {7, "eps misspecification", 300, eps_misspecification},
      {8, "adversarial termination", 300, adversarial_termination},
      {9, "adversarial outer loop", 300, adversarial_outer_loop},
      {10, "concentration coverage", 300, coverage},
      {11, "OFUL oracle equivalence", 60, oful_oracle},
      {12, "reproducibility", 60, reproducibility},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs <= c.budget_seconds;
    const bool pass = o.passed && in_time;
    failed += !pass;
    std::printf("%s  %2d %-26s %s [%.1fs / %.0fs%s]\n", pass ? "PASS" : "FAIL", c.id, c.name.c_str(),
                o.detail.c_str(), secs, c.budget_seconds, in_time ? "" : " over budget");
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
