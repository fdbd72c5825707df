#pragma once
// Seeded execution of one config: per-seed runs, CSV traces, summaries.

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <limits>
#include <mutex>
#include <ostream>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "modsel/adversarial.hpp"
#include "modsel/balancing.hpp"
#include "modsel/harness/config.hpp"
#include "modsel/harness/scenarios.hpp"

namespace modsel::harness {

struct SeedResult {
  int seed_index = 0;
  double final_regret = 0.0;
  std::vector<double> regret_curve;  ///< cumulative pseudo-regret after each round
  std::vector<std::int64_t> elimination_rounds;  ///< per learner, 0 if never removed
  std::vector<std::int64_t> epoch_starts;        ///< adversarial master only
  std::vector<PlayCount> final_plays;
  std::vector<std::string> diagnostics;
};

using RoundHook = std::function<void(const RoundTrace&)>;

// ---------------------------------------------------------------------------
// CSV

inline void append_number(std::string& out, double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, ptr);
}

inline void append_number(std::string& out, std::int64_t v) {
  char buf[24];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, ptr);
}

inline std::string trace_header(std::size_t learners) {
  std::string h = "t,learner_id,reward,mu_star,cum_pseudo_regret";
  for (std::size_t i = 1; i <= learners; ++i) {
    const auto k = std::to_string(i);
    h += ",n_" + k + ",U_" + k + ",R_" + k + ",active_" + k;
  }
  return h + "\n";
}

/// One CSV row; learner ids are 1-based.
inline std::string trace_row(const RoundTrace& r) {
  std::string s;
  s.reserve(64 + 48 * r.learners.size());
  append_number(s, r.round);
  s += ',';
  append_number(s, static_cast<std::int64_t>(r.learner + 1));
  s += ',';
  append_number(s, r.reward);
  s += ',';
  append_number(s, r.mu_star);
  s += ',';
  append_number(s, r.cumulative_regret);
  for (const auto& l : r.learners) {
    s += ',';
    append_number(s, l.plays);
    s += ',';
    append_number(s, l.reward_sum);
    s += ',';
    append_number(s, l.bound);
    s += l.active ? ",1" : ",0";
  }
  s += '\n';
  return s;
}

inline bool is_checkpoint(std::int64_t t, std::int64_t horizon) {
  return t == horizon || (t & (t - 1)) == 0;
}

// ---------------------------------------------------------------------------
// Runs

/// Runs seed `seed_index` of the config. Writes the trace to `csv` if given.
inline SeedResult run_seed(const ExperimentConfig& c, int seed_index, std::ostream* csv = nullptr,
                           const RoundHook& hook = {}) {
  RunStreams streams = RunStreams::derive(c.master_seed, static_cast<std::uint64_t>(seed_index));
  ScenarioInstance inst = build_scenario(c, streams);
  if (c.master == MasterKind::Single) {
    LearnerPtr keep = std::move(inst.learners.at(c.single_index));
    inst.learners.clear();
    inst.learners.push_back(std::move(keep));
  }
  const std::size_t m = inst.learners.size();
  const bool sparse = c.checkpoint_from > 0 && c.horizon > c.checkpoint_from;

  SeedResult res;
  res.seed_index = seed_index;
  res.regret_curve.reserve(static_cast<std::size_t>(c.horizon));
  if (csv) *csv << trace_header(m);

  auto emit = [&](const RoundTrace& tr) {
    res.regret_curve.push_back(tr.cumulative_regret);
    if (csv && (!sparse || is_checkpoint(tr.round, c.horizon))) *csv << trace_row(tr);
    if (hook) hook(tr);
  };

  if (c.master == MasterKind::Adversarial) {
    AdversarialConfig ac;
    ac.delta = c.delta;
    ac.persist = c.persist;
    ac.broadcast = c.broadcast;
    ac.test_scale = c.effective_radius_scale();
    AdversarialMaster master(std::move(inst.learners), ac);
    const RoundTrace* last = nullptr;
    for (std::int64_t t = 1; t <= c.horizon; ++t) {
      last = &master.run_round(inst.env, streams);
      emit(*last);
    }
    res.elimination_rounds.assign(m, 0);
    for (const auto& e : master.epochs()) {
      res.epoch_starts.push_back(e.start_round);
      if (e.terminated) res.elimination_rounds[e.removed] = e.end_round;
    }
    for (const auto& l : last->learners) res.final_plays.push_back(l.plays);
    res.diagnostics = master.diagnostics();
    res.final_regret = master.regret().total();
    return res;
  }

  BalancingConfig bc;
  bc.delta = c.delta;
  bc.elimination.c_scale = c.c_scale;
  bc.elimination.radius_scale = c.effective_radius_scale();
  bc.rule = c.master == MasterKind::RoundRobin ? SelectionRule::RoundRobin : SelectionRule::Balancing;
  bc.broadcast = c.broadcast;
  BalancingMaster master(std::move(inst.learners), bc);
  for (std::int64_t t = 1; t <= c.horizon; ++t) emit(master.run_round(inst.env, streams));
  res.elimination_rounds = master.elimination_rounds();
  for (const auto& l : master.state().ledgers) res.final_plays.push_back(l.plays);
  res.diagnostics = master.diagnostics();
  res.final_regret = master.regret().total();
  return res;
}

/// Least-squares slope of ln Reg(t) against ln t over checkpoints
/// t_min * 2^{k/4} (k = 0, 1, ...) up to t_max, with t_max always included.
/// `curve[t-1]` is the regret after round t.
inline double fit_loglog_slope(std::span<const double> curve, std::int64_t t_min,
                               std::int64_t t_max) {
  if (t_min < 1 || t_max <= t_min || t_max > static_cast<std::int64_t>(curve.size()))
    throw ParameterError("fit_loglog_slope: need 1 <= t_min < t_max <= T");
  std::vector<std::int64_t> ts;
  for (int k = 0;; ++k) {
    const auto t = static_cast<std::int64_t>(std::llround(static_cast<double>(t_min) * std::exp2(k / 4.0)));
    if (t >= t_max) break;
    if (ts.empty() || t != ts.back()) ts.push_back(t);
  }
  ts.push_back(t_max);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (auto t : ts) {
    const double r = curve[static_cast<std::size_t>(t - 1)];
    if (!(r > 0.0)) throw ParameterError("fit_loglog_slope: regret must be positive on the window");
    const double x = std::log(static_cast<double>(t));
    const double y = std::log(r);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = static_cast<double>(ts.size());
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

inline double mean_of(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

/// Linear-interpolated empirical quantile, q in [0, 1].
inline double quantile(std::vector<double> xs, double q) {
  if (xs.empty()) throw ParameterError("quantile of an empty sample");
  std::sort(xs.begin(), xs.end());
  const double pos = q * static_cast<double>(xs.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, xs.size() - 1);
  return xs[lo] + (pos - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

/// Mean final regret of the master over that of the reference learner.
inline double compare_to_oracle(std::span<const double> master_finals,
                                std::span<const double> single_finals) {
  const double denom = mean_of(single_finals);
  const double num = mean_of(master_finals);
  if (denom == 0.0) return num == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  return num / denom;
}

inline std::vector<double> final_regrets(std::span<const SeedResult> rs) {
  std::vector<double> out;
  for (const auto& r : rs) out.push_back(r.final_regret);
  return out;
}

/// Runs seeds [0, seeds) on `threads` workers. Results are ordered by seed.
/// If `out_dir` is non-empty, trace_seed<k>.csv files are written there.
inline std::vector<SeedResult> run_seeds(const ExperimentConfig& c, int threads,
                                         const std::filesystem::path& out_dir = {}) {
  std::vector<SeedResult> results(static_cast<std::size_t>(c.seeds));
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (int k = next++; k < c.seeds; k = next++) {
      try {
        if (out_dir.empty()) {
          results[static_cast<std::size_t>(k)] = run_seed(c, k);
        } else {
          std::ofstream f(out_dir / ("trace_seed" + std::to_string(k) + ".csv"), std::ios::binary);
          if (!f) throw std::runtime_error("cannot write trace for seed " + std::to_string(k));
          results[static_cast<std::size_t>(k)] = run_seed(c, k, &f);
        }
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  const int n = std::max(1, std::min(threads, c.seeds));
  std::vector<std::thread> pool;
  for (int i = 1; i < n; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
  return results;
}

inline std::size_t best_baseline(const std::vector<std::vector<double>>& baselines);

struct Summary {
  std::vector<double> finals;
  double mean = 0.0;
  double q10 = 0.0;
  double median = 0.0;
  double q90 = 0.0;
  double slope = std::numeric_limits<double>::quiet_NaN();
};

/// Aggregates per-seed results; the slope is fitted to the seed-averaged curve
/// over [max(1, T/64), T].
inline Summary summarize(std::span<const SeedResult> rs) {
  Summary s;
  s.finals = final_regrets(rs);
  if (s.finals.empty()) return s;
  s.mean = mean_of(s.finals);
  s.q10 = quantile(s.finals, 0.1);
  s.median = quantile(s.finals, 0.5);
  s.q90 = quantile(s.finals, 0.9);
  std::size_t len = rs.front().regret_curve.size();
  for (const auto& r : rs) len = std::min(len, r.regret_curve.size());
  std::vector<double> avg(len, 0.0);
  for (const auto& r : rs)
    for (std::size_t t = 0; t < len; ++t) avg[t] += r.regret_curve[t] / static_cast<double>(rs.size());
  const auto horizon = static_cast<std::int64_t>(len);
  const std::int64_t t_min = std::max<std::int64_t>(1, horizon / 64);
  if (horizon > t_min) {
    try {
      s.slope = fit_loglog_slope(avg, t_min, horizon);
    } catch (const ParameterError&) {
    }
  }
  return s;
}

inline std::string join_rounds(const std::vector<std::int64_t>& v, bool skip_zero) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (skip_zero && v[i] == 0) continue;
    if (!out.empty()) out += ';';
    out += skip_zero ? std::to_string(i + 1) + "@" + std::to_string(v[i]) : std::to_string(v[i]);
  }
  return out;
}

/// summary.csv: one row per seed.
inline void write_summary_csv(std::ostream& os, std::span<const SeedResult> rs) {
  os << "seed_index,final_regret,eliminations,epoch_starts,final_plays\n";
  for (const auto& r : rs) {
    std::string row = std::to_string(r.seed_index) + ",";
    append_number(row, r.final_regret);
    std::string plays;
    for (auto p : r.final_plays) plays += (plays.empty() ? "" : ";") + std::to_string(p);
    row += "," + join_rounds(r.elimination_rounds, true) + "," + join_rounds(r.epoch_starts, false) +
           "," + plays + "\n";
    os << row;
  }
}

inline void write_summary_text(std::ostream& os, const ExperimentConfig& c,
                               std::span<const SeedResult> rs, const Summary& s,
                               const std::vector<std::vector<double>>* baselines = nullptr) {
  os << "scenario: " << c.scenario << "\n";
  os << "horizon: " << c.horizon << "\n";
  os << "seeds: " << rs.size() << " (master seed " << c.master_seed << ")\n";
  os << "final regret: mean " << s.mean << ", q10 " << s.q10 << ", median " << s.median
     << ", q90 " << s.q90 << "\n";
  os << "log-log slope of mean regret: " << s.slope << "\n";
  std::size_t m = rs.empty() ? 0 : rs.front().final_plays.size();
  std::vector<int> eliminated(m, 0);
  for (const auto& r : rs)
    for (std::size_t i = 0; i < std::min(m, r.elimination_rounds.size()); ++i)
      if (r.elimination_rounds[i] > 0) ++eliminated[i];
  for (std::size_t i = 0; i < m; ++i)
    os << "learner " << i + 1 << ": removed in " << eliminated[i] << " of " << rs.size()
       << " runs\n";
  std::size_t diag = 0;
  for (const auto& r : rs) diag += r.diagnostics.size();
  if (diag > 0) os << "diagnostics: " << diag << "\n";
  if (baselines && !baselines->empty()) {
    for (std::size_t i = 0; i < baselines->size(); ++i)
      os << "learner " << i + 1 << " standalone: mean final regret " << mean_of((*baselines)[i])
         << "\n";
    const std::size_t b = best_baseline(*baselines);
    os << "ratio to best single learner (" << b + 1
       << "): " << compare_to_oracle(s.finals, (*baselines)[b]) << "\n";
  }
}


/// Runs every learner standalone on the same seeds. Entry i holds the final
/// regrets of learner i.
inline std::vector<std::vector<double>> run_baselines(const ExperimentConfig& c, int threads) {
  RunStreams probe = RunStreams::derive(c.master_seed, 0);
  const std::size_t m = build_scenario(c, probe).learners.size();
  std::vector<std::vector<double>> out;
  for (std::size_t i = 0; i < m; ++i) {
    ExperimentConfig single = c;
    single.master = MasterKind::Single;
    single.single_index = i;
    const auto rs = run_seeds(single, threads);
    out.push_back(final_regrets(rs));
  }
  return out;
}

/// Index of the baseline with the smallest mean final regret.
inline std::size_t best_baseline(const std::vector<std::vector<double>>& baselines) {
  if (baselines.empty()) throw ParameterError("best_baseline: no baselines");
  std::size_t best = 0;
  for (std::size_t i = 1; i < baselines.size(); ++i)
    if (mean_of(baselines[i]) < mean_of(baselines[best])) best = i;
  return best;
}

// ---------------------------------------------------------------------------
// Reading traces back

/// Rebuilds a SeedResult from a trace CSV. Elimination rounds are the first
/// logged round with active_k = 0; epoch boundaries are not recoverable.
/// Throws std::runtime_error on malformed input.
inline SeedResult read_trace(std::istream& in, int seed_index = 0) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty trace");
  std::size_t cols = 1;
  for (char ch : line) cols += ch == ',';
  if (cols < 5 || (cols - 5) % 4 != 0) throw std::runtime_error("unexpected trace header");
  const std::size_t m = (cols - 5) / 4;
  SeedResult r;
  r.seed_index = seed_index;
  r.elimination_rounds.assign(m, 0);
  r.final_plays.assign(m, 0);
  std::vector<double> fields(cols);
  std::int64_t prev_t = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::size_t k = 0;
    const char* p = line.data();
    const char* end = p + line.size();
    while (p <= end && k < cols) {
      const char* q = std::find(p, end, ',');
      auto [ptr, ec] = std::from_chars(p, q, fields[k]);
      if (ec != std::errc() || ptr != q) throw std::runtime_error("malformed trace row: " + line);
      ++k;
      p = q + 1;
    }
    if (k != cols) throw std::runtime_error("short trace row: " + line);
    const auto t = static_cast<std::int64_t>(fields[0]);
    if (t <= prev_t) throw std::runtime_error("trace rounds must increase");
    // sparse traces: hold the last value between checkpoints
    const double last = r.regret_curve.empty() ? 0.0 : r.regret_curve.back();
    r.regret_curve.resize(static_cast<std::size_t>(t - 1), last);
    r.regret_curve.push_back(fields[4]);
    for (std::size_t i = 0; i < m; ++i) {
      r.final_plays[i] = static_cast<PlayCount>(fields[5 + 4 * i]);
      if (fields[8 + 4 * i] == 0.0 && r.elimination_rounds[i] == 0) r.elimination_rounds[i] = t;
    }
    prev_t = t;
  }
  if (r.regret_curve.empty()) throw std::runtime_error("trace has no rows");
  r.final_regret = r.regret_curve.back();
  return r;
}

/// Reads every trace_seed<k>.csv in `dir`, ordered by k.
inline std::vector<SeedResult> read_traces(const std::filesystem::path& dir) {
  std::vector<std::pair<int, std::filesystem::path>> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (!name.starts_with("trace_seed") || !name.ends_with(".csv")) continue;
    const std::string mid = name.substr(10, name.size() - 14);
    int k = 0;
    auto [ptr, ec] = std::from_chars(mid.data(), mid.data() + mid.size(), k);
    if (ec != std::errc() || ptr != mid.data() + mid.size()) continue;
    files.emplace_back(k, e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<SeedResult> out;
  for (const auto& [k, path] : files) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot read " + path.string());
    out.push_back(read_trace(f, k));
  }
  return out;
}

}  // namespace modsel::harness
