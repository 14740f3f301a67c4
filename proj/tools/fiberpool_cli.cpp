// Scenario runner.
//
//   fiberpool run --scenario fairness [--seed 7] [--periods 50] [--check] [--out-dir out/fairness]
//   fiberpool sweep --scenario fairness --seeds 1..100 [--jobs 8] [--check] [--out-dir out/sweep]
//   fiberpool list-scenarios [--dir scenarios]
//
// `--scenario` takes a file path or the name of a file in the scenario
// directory. `run` writes periods.csv, summary.txt and effective_config.yaml
// into the output directory; `sweep` writes one such directory per seed plus
// sweep.csv.

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

#include <CLI11.hpp>

#include "fiberpool/fiberpool.hpp"

namespace fs = std::filesystem;
using namespace fiberpool;

namespace {

fs::path resolve_scenario(const std::string& arg, const fs::path& dir) {
  fs::path p(arg);
  if (fs::exists(p)) return p;
  for (const char* ext : {".yaml", ".yml", ""}) {
    fs::path candidate = dir / (arg + ext);
    if (fs::exists(candidate)) return candidate;
  }
  throw Error("no scenario file or scenario named '" + arg + "' (looked in " + dir.string() + ")");
}

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> periods;
  std::optional<std::string> out_dir;
};

ScenarioConfig load(const std::string& scenario, const fs::path& dir, const Overrides& o) {
  ScenarioConfig cfg = parse_config(resolve_scenario(scenario, dir));
  if (o.seed) cfg.seed = *o.seed;
  if (o.periods) cfg.periods = *o.periods;
  if (o.out_dir) cfg.out_dir = *o.out_dir;
  cfg.validate();
  return cfg;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
}

struct RunOutcome {
  RunStats stats;
  std::vector<CheckResult> checks;
  std::string summary;
};

RunOutcome execute(const ScenarioConfig& cfg, bool check, const fs::path& out_dir) {
  RunOutcome r{run(cfg), {}, {}};
  if (check) {
    ScenarioConfig c = cfg;
    if (c.checks.empty()) c.checks = {"budget_balance"};
    r.checks = run_checks(c, r.stats);
  }
  std::ostringstream summary;
  write_summary(summary, cfg, r.stats, r.checks);
  r.summary = summary.str();
  fs::create_directories(out_dir);
  write_file(out_dir / "periods.csv", periods_csv(r.stats));
  write_file(out_dir / "summary.txt", r.summary);
  write_file(out_dir / "effective_config.yaml", to_yaml(cfg));
  return r;
}

std::pair<std::uint64_t, std::uint64_t> parse_seed_range(const std::string& s) {
  auto dots = s.find("..");
  try {
    if (dots == std::string::npos) {
      auto v = std::stoull(s);
      return {v, v};
    }
    auto lo = std::stoull(s.substr(0, dots)), hi = std::stoull(s.substr(dots + 2));
    if (hi < lo) throw Error("empty seed range");
    return {lo, hi};
  } catch (const std::logic_error&) {
    throw Error("bad seed range '" + s + "', expected A..B");
  }
}

int cmd_run(const std::string& scenario, const fs::path& dir, const Overrides& o, bool check) {
  ScenarioConfig cfg = load(scenario, dir, o);
  RunOutcome r = execute(cfg, check, cfg.out_dir);
  std::cout << r.summary;
  std::cout << "\nwrote " << (fs::path(cfg.out_dir) / "periods.csv").string() << ", summary.txt, effective_config.yaml\n";
  return check && !all_passed(r.checks) ? 1 : 0;
}

int cmd_sweep(const std::string& scenario, const fs::path& dir, Overrides o, bool check, const std::string& seeds,
              unsigned jobs) {
  ScenarioConfig base = load(scenario, dir, o);
  auto [lo, hi] = parse_seed_range(seeds);
  std::vector<std::uint64_t> seed_list;
  for (std::uint64_t s = lo; s <= hi; ++s) seed_list.push_back(s);
  std::vector<std::optional<RunOutcome>> results(seed_list.size());
  std::vector<std::string> errors(seed_list.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;

  auto worker = [&] {
    for (std::size_t i = next++; i < seed_list.size(); i = next++) {
      ScenarioConfig cfg = base;
      cfg.seed = seed_list[i];
      try {
        results[i] = execute(cfg, check, fs::path(base.out_dir) / ("seed-" + std::to_string(cfg.seed)));
        std::lock_guard lock(log_mutex);
        std::cerr << "seed " << cfg.seed << " done\n";
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  std::vector<std::thread> pool;
  for (unsigned j = 0; j < std::min<std::size_t>(jobs, seed_list.size()); ++j) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  // sweep.csv: one row per seed, then an aggregate row of means.
  std::ostringstream csv;
  csv << "run_id,seed,periods,pool_coinbase,distributed,frozen";
  for (const auto& m : base.miners) csv << ",reward_" << m.name;
  csv << ",checks_passed,checks_failed\n";
  std::size_t n = 0, failed_runs = 0;
  std::vector<double> sums(3 + base.miners.size(), 0.0);
  double pass_sum = 0, fail_sum = 0;
  for (std::size_t i = 0; i < seed_list.size(); ++i) {
    if (!results[i]) {
      std::cerr << "seed " << seed_list[i] << " failed: " << errors[i] << "\n";
      ++failed_runs;
      continue;
    }
    const auto& s = results[i]->stats;
    std::size_t passed = 0, failed = 0;
    for (const auto& c : results[i]->checks) (c.passed ? passed : failed)++;
    if (failed) ++failed_runs;
    std::vector<Amount> values{s.ledger.pool_coinbase, s.ledger.distributed, s.ledger.frozen()};
    for (std::size_t m = 0; m < s.miners.size(); ++m) values.push_back(s.total_reward(m));
    csv << run_id(s) << ',' << s.seed << ',' << s.periods;
    for (std::size_t k = 0; k < values.size(); ++k) {
      csv << ',' << to_decimal_string(values[k]);
      sums[k] += to_double(values[k]);
    }
    csv << ',' << passed << ',' << failed << '\n';
    pass_sum += static_cast<double>(passed);
    fail_sum += static_cast<double>(failed);
    ++n;
  }
  if (n > 0) {
    csv << "aggregate,mean," << base.periods;
    csv.precision(12);
    for (double v : sums) csv << ',' << v / static_cast<double>(n);
    csv << ',' << pass_sum / static_cast<double>(n) << ',' << fail_sum / static_cast<double>(n) << '\n';
  }
  fs::create_directories(base.out_dir);
  write_file(fs::path(base.out_dir) / "sweep.csv", csv.str());
  std::cout << "sweep of " << seed_list.size() << " seeds: " << n << " completed, " << failed_runs
            << (check ? " with failures" : " errored") << "\nwrote " << (fs::path(base.out_dir) / "sweep.csv").string()
            << "\n";
  return failed_runs == 0 ? 0 : 1;
}

int cmd_list(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error("scenario directory " + dir.string() + " not found");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".yaml" || e.path().extension() == ".yml") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    try {
      auto cfg = parse_config(f);
      std::printf("%-16s %s\n", f.stem().string().c_str(), cfg.description.c_str());
    } catch (const std::exception& e) {
      std::printf("%-16s (invalid: %s)\n", f.stem().string().c_str(), e.what());
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FiberPool scenario runner"};
  app.require_subcommand(1);

  std::string scenario, seeds = "1..10", dir = FIBERPOOL_SCENARIO_DIR;
  std::uint64_t seed = 0, periods = 0;
  std::string out_dir;
  bool check = false;
  unsigned jobs = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--scenario", scenario, "scenario file or name")->required();
    sub->add_option("--periods", periods, "override run length in periods")->check(CLI::PositiveNumber);
    sub->add_flag("--check", check, "evaluate the scenario's theorem checks; nonzero exit on failure");
    sub->add_option("--out-dir", out_dir, "output directory");
    sub->add_option("--scenario-dir", dir, "directory searched for scenario names");
  };
  auto* run_cmd = app.add_subcommand("run", "run one scenario");
  add_common(run_cmd);
  auto* seed_opt = run_cmd->add_option("--seed", seed, "override the root seed");
  auto* sweep_cmd = app.add_subcommand("sweep", "run one scenario over a range of seeds in parallel");
  add_common(sweep_cmd);
  sweep_cmd->add_option("--seeds", seeds, "seed range A..B (inclusive)");
  sweep_cmd->add_option("--seed", seeds, "single seed or range A..B");
  sweep_cmd->add_option("--jobs", jobs, "worker threads (default: hardware concurrency)");
  auto* list_cmd = app.add_subcommand("list-scenarios", "list shipped scenarios");
  list_cmd->add_option("--dir", dir, "scenario directory");

  CLI11_PARSE(app, argc, argv);

  Overrides o;
  if (seed_opt->count()) o.seed = seed;
  if (periods) o.periods = periods;
  if (!out_dir.empty()) o.out_dir = out_dir;
  try {
    if (*run_cmd) return cmd_run(scenario, dir, o, check);
    if (*sweep_cmd) return cmd_sweep(scenario, dir, o, check, seeds, jobs);
    return cmd_list(dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
