// modsel: run experiments, summarize trace directories, run property suites.
//
//   modsel run --config FILE [--seed N] [--out DIR] [--threads K]
//   modsel summarize --in DIR
//   modsel verify --suite {invariants,coverage}
//
// Exit codes: 0 ok, 1 runtime failure, 2 config error, 3 verify failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "CLI11.hpp"
#include "modsel/modsel.hpp"

namespace fs = std::filesystem;
namespace pt = boost::property_tree;
using namespace modsel;
using namespace modsel::harness;

namespace {

constexpr int kOk = 0;
constexpr int kRuntime = 1;
constexpr int kConfig = 2;
constexpr int kVerify = 3;

struct RunArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> threads;
};

int cmd_run(const RunArgs& a) {
  std::ifstream in(a.config);
  if (!in) {
    std::cerr << "error: cannot open config '" << a.config << "'\n";
    return kConfig;
  }
  std::stringstream text;
  text << in.rdbuf();
  ExperimentConfig c;
  try {
    c = parse_config_string(text.str());
    if (a.seed) c.master_seed = *a.seed;
    if (a.out) c.output = *a.out;
    if (a.threads) c.threads = *a.threads;
    c.validate();
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  }

  const fs::path dir = c.output;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    std::cerr << "config error: cannot create output directory '" << dir.string() << "'\n";
    return kConfig;
  }
  {
    // the effective config, so that summarize sees CLI overrides
    pt::ptree tree;
    std::stringstream copy(text.str());
    pt::read_ini(copy, tree);
    tree.put("experiment.master_seed", c.master_seed);
    tree.put("experiment.output", c.output);
    tree.put("experiment.threads", c.threads);
    std::ofstream f(dir / "config.ini");
    if (!f) {
      std::cerr << "config error: output directory '" << dir.string() << "' is not writable\n";
      return kConfig;
    }
    pt::write_ini(f, tree);
  }

  const auto results = run_seeds(c, c.threads, dir);
  const Summary s = summarize(results);
  std::optional<std::vector<std::vector<double>>> baselines;
  if (c.baseline) baselines = run_baselines(c, c.threads);

  std::ofstream csv(dir / "summary.csv", std::ios::binary);
  write_summary_csv(csv, results);
  std::ofstream txt(dir / "summary.txt");
  write_summary_text(txt, c, results, s, baselines ? &*baselines : nullptr);
  write_summary_text(std::cout, c, results, s, baselines ? &*baselines : nullptr);
  for (const auto& r : results)
    for (const auto& d : r.diagnostics) std::cerr << "seed " << r.seed_index << ": " << d << "\n";
  return kOk;
}

int cmd_summarize(const std::string& in_dir) {
  if (!fs::is_directory(in_dir)) {
    std::cerr << "error: '" << in_dir << "' is not a directory\n";
    return kConfig;
  }
  ExperimentConfig c;
  const fs::path cfg = fs::path(in_dir) / "config.ini";
  if (fs::exists(cfg)) {
    std::ifstream f(cfg);
    try {
      c = parse_config(f);
    } catch (const ConfigError& e) {
      std::cerr << "config error in " << cfg.string() << ": " << e.what() << "\n";
      return kConfig;
    }
  } else {
    c.scenario = "unknown";
  }
  const auto results = read_traces(in_dir);
  if (results.empty()) {
    std::cerr << "error: no trace_seed<k>.csv files in '" << in_dir << "'\n";
    return kRuntime;
  }
  c.horizon = static_cast<std::int64_t>(results.front().regret_curve.size());
  const Summary s = summarize(results);
  write_summary_text(std::cout, c, results, s);
  write_summary_csv(std::cout, results);
  return kOk;
}

int cmd_verify(const std::string& suite) {
  const auto results = suite == "invariants" ? run_invariant_suite() : run_coverage_suite();
  bool ok = true;
  for (const auto& r : results) {
    std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << "  " << r.detail << "\n";
    ok = ok && r.passed;
  }
  return ok ? kOk : kVerify;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online model selection simulator"};
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Run every seed of a config");
  run_cmd->add_option("--config", run.config, "INI config file")->required();
  run_cmd->add_option("--seed", run.seed, "Master seed (overrides the config)");
  run_cmd->add_option("--out", run.out, "Output directory (overrides the config)");
  run_cmd->add_option("--threads", run.threads, "Worker threads")->check(CLI::PositiveNumber);

  std::string in_dir;
  auto* sum_cmd = app.add_subcommand("summarize", "Recompute a summary from trace CSVs");
  sum_cmd->add_option("--in", in_dir, "Directory written by run")->required();

  std::string suite;
  auto* ver_cmd = app.add_subcommand("verify", "Run a property suite");
  ver_cmd->add_option("--suite", suite, "Suite name")
      ->required()
      ->check(CLI::IsMember({"invariants", "coverage"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }

  try {
    if (*run_cmd) return cmd_run(run);
    if (*sum_cmd) return cmd_summarize(in_dir);
    if (*ver_cmd) return cmd_verify(suite);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kOk;
}
