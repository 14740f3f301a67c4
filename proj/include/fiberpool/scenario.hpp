#pragma once

// Scenario configuration: a YAML document with a fixed key schema.
//
//   name, description            free text
//   seed                         root RNG seed
//   periods                      run length in periods
//   period_len, prepare_len      main-chain blocks per period / per Prepare phase
//   block_interval               mean main-chain block time T
//   storage_interval             mean storage-chain block time
//   block_reward                 B, exact rational ("1", "0.01", "1/3")
//   mode                         grind | statistical-poisson | statistical-exact
//   hashes_per_period            network hashes per period (each miner gets fraction x this)
//   challenges                   openings required per batch
//   exit_interval                periods between aggregated exits (0 = never)
//   overlap_policy               reject-miner | keep-disjoint
//   baselines                    list of pplns | proportional | pps
//   pplns_window                 N of PPLNS
//   baseline_share_target        pool-wide D for baseline shares
//   baseline_shares_per_block    mean non-block shares between pool blocks
//   pps_rate, pps_bankroll       PPS rate per unit weight (default: fair rate) / starting funds
//   checks                       list of theorem checks evaluated by `run --check`
//   out_dir                      output directory
//   miners                       list of miner maps:
//       name, fraction, strategy, share_target,
//       cycle_len (pool-hopper), allocation (cross-period), delay (delayed),
//       invalid_fraction (cheater), overclaim_factor (over-claim)
//
// Unknown keys are rejected.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "fiberpool/amount.hpp"
#include "fiberpool/protocol.hpp"
#include "fiberpool/verification.hpp"

namespace fiberpool {

enum class MiningMode { grind, statistical_poisson, statistical_exact };

enum class StrategyKind { honest, external, pool_hopper, cross_period, delayed, cheater, self_serving, over_claim };

enum class BaselineScheme { pplns, proportional, pps };

inline const char* to_string(MiningMode m) {
  switch (m) {
    case MiningMode::grind: return "grind";
    case MiningMode::statistical_poisson: return "statistical-poisson";
    case MiningMode::statistical_exact: return "statistical-exact";
  }
  return "?";
}

inline const char* to_string(StrategyKind s) {
  switch (s) {
    case StrategyKind::honest: return "honest";
    case StrategyKind::external: return "external";
    case StrategyKind::pool_hopper: return "pool-hopper";
    case StrategyKind::cross_period: return "cross-period";
    case StrategyKind::delayed: return "delayed";
    case StrategyKind::cheater: return "cheater";
    case StrategyKind::self_serving: return "self-serving";
    case StrategyKind::over_claim: return "over-claim";
  }
  return "?";
}

inline const char* to_string(BaselineScheme b) {
  switch (b) {
    case BaselineScheme::pplns: return "pplns";
    case BaselineScheme::proportional: return "proportional";
    case BaselineScheme::pps: return "pps";
  }
  return "?";
}

inline const char* to_string(OverlapPolicy p) {
  return p == OverlapPolicy::reject_miner ? "reject-miner" : "keep-disjoint";
}

struct MinerSpec {
  std::string name;
  Rational fraction = 0;
  StrategyKind strategy = StrategyKind::honest;
  Rational share_target = Rational(1, 20);
  std::uint64_t cycle_len = 0;
  std::vector<Rational> allocation;
  std::uint64_t delay = 0;
  Rational invalid_fraction = 0;
  Rational overclaim_factor = 2;

  bool mines_for_pool() const { return strategy != StrategyKind::external; }
};

inline const std::set<std::string>& known_checks() {
  static const std::set<std::string> names{"fairness", "budget_balance", "variance", "hopping", "cross_period",
                                           "delay", "cheating", "settlement", "determinism"};
  return names;
}

struct ScenarioConfig {
  std::string name = "scenario";
  std::string description;
  std::uint64_t seed = 1;
  std::uint64_t periods = 20;
  PeriodConfig geometry;
  double storage_interval = 60.0;
  Amount block_reward = 1;
  MiningMode mode = MiningMode::statistical_exact;
  std::uint64_t hashes_per_period = 1000;
  std::uint32_t challenges = 1;
  std::uint64_t exit_interval = 1;
  OverlapPolicy overlap_policy = OverlapPolicy::reject_miner;
  std::vector<BaselineScheme> baselines;
  std::uint64_t pplns_window = 100;
  Rational baseline_share_target = Rational(1, 100);
  Rational baseline_shares_per_block = 99;
  std::optional<Amount> pps_rate;
  Amount pps_bankroll = 0;
  std::vector<std::string> checks;
  std::string out_dir = "out";
  std::vector<MinerSpec> miners;

  bool has_baseline(BaselineScheme b) const {
    return std::find(baselines.begin(), baselines.end(), b) != baselines.end();
  }

  // Fair PPS rate: one block reward per expected block's worth of share weight.
  Amount effective_pps_rate() const {
    if (pps_rate) return *pps_rate;
    return block_reward * baseline_share_target / (baseline_shares_per_block + 1);
  }

  std::optional<std::size_t> miner_index(const std::string& n) const {
    for (std::size_t i = 0; i < miners.size(); ++i)
      if (miners[i].name == n) return i;
    return std::nullopt;
  }

  // Hashes the miner spends on period `period`'s template.
  Rational hashes_for(std::size_t miner, std::uint64_t period) const {
    const auto& m = miners[miner];
    Rational base = m.fraction * Rational(hashes_per_period);
    if (m.strategy != StrategyKind::cross_period || m.allocation.empty()) return base;
    Rational sum = 0;
    for (const auto& w : m.allocation) sum += w;
    const auto& w = m.allocation[period % m.allocation.size()];
    return base * Rational(m.allocation.size()) * w / sum;
  }

  std::vector<std::string> violations() const {
    std::vector<std::string> v;
    if (periods < 1) v.push_back("periods must be at least 1");
    if (geometry.prepare_len < 1) v.push_back("prepare_len must be at least 1");
    if (geometry.prepare_len >= geometry.period_len) v.push_back("prepare_len must be smaller than period_len");
    else if (geometry.period_len < 2 * geometry.prepare_len) v.push_back("period_len must be at least 2 * prepare_len");
    if (!(geometry.block_interval > 0)) v.push_back("block_interval must be positive");
    if (!(storage_interval > 0)) v.push_back("storage_interval must be positive");
    if (block_reward <= 0) v.push_back("block_reward must be positive");
    if (hashes_per_period < 1) v.push_back("hashes_per_period must be at least 1");
    if (challenges < 1) v.push_back("challenges must be at least 1");
    if (pplns_window < 1) v.push_back("pplns_window must be at least 1");
    if (baseline_share_target <= 0 || baseline_share_target > 1) v.push_back("baseline_share_target must lie in (0, 1]");
    if (baseline_shares_per_block < 0) v.push_back("baseline_shares_per_block must be non-negative");
    if (pps_rate && *pps_rate <= 0) v.push_back("pps_rate must be positive");
    for (const auto& c : checks)
      if (!known_checks().count(c)) v.push_back("unknown check '" + c + "'");
    if (miners.empty()) v.push_back("at least one miner is required");

    Rational total = 0;
    std::set<std::string> names;
    for (const auto& m : miners) {
      const std::string who = "miner '" + m.name + "': ";
      if (m.name.empty()) v.push_back("every miner needs a name");
      if (!names.insert(m.name).second) v.push_back(who + "duplicate name");
      if (m.fraction < 0) v.push_back(who + "fraction must be non-negative");
      total += m.fraction;
      if (m.share_target <= 0 || m.share_target > 1) v.push_back(who + "share_target must lie in (0, 1]");
      switch (m.strategy) {
        case StrategyKind::pool_hopper:
          if (m.cycle_len < 4) v.push_back(who + "pool-hopper cycle_len must be at least 4");
          break;
        case StrategyKind::cross_period: {
          if (m.allocation.empty()) v.push_back(who + "cross-period allocation must be non-empty");
          Rational s = 0;
          for (const auto& w : m.allocation) {
            if (w < 0) v.push_back(who + "allocation weights must be non-negative");
            s += w;
          }
          if (!m.allocation.empty() && s <= 0) v.push_back(who + "allocation weights must not all be zero");
          break;
        }
        case StrategyKind::cheater:
          if (m.invalid_fraction < 0 || m.invalid_fraction >= 1) v.push_back(who + "invalid_fraction must lie in [0, 1)");
          if (m.share_target == 1) v.push_back(who + "a cheater needs share_target < 1 to produce invalid shares");
          break;
        case StrategyKind::over_claim:
          if (m.overclaim_factor <= 0) v.push_back(who + "overclaim_factor must be positive");
          break;
        default:
          break;
      }
    }
    if (!miners.empty() && total != 1)
      v.push_back("miner fractions must sum to 1 (got " + to_exact_string(total) + ")");

    if (mode == MiningMode::statistical_exact) {
      for (std::size_t i = 0; i < miners.size(); ++i) {
        const auto& m = miners[i];
        const std::string who = "miner '" + m.name + "': ";
        if (boost::multiprecision::denominator(m.fraction * Rational(geometry.period_len)) != 1)
          v.push_back(who + "statistical-exact mode needs fraction x period_len to be an integer");
        if (!m.mines_for_pool() || m.share_target <= 0) continue;
        std::size_t span = m.strategy == StrategyKind::cross_period ? std::max<std::size_t>(1, m.allocation.size()) : 1;
        for (std::uint64_t p = 0; p < span; ++p) {
          if (m.strategy == StrategyKind::cross_period && m.allocation.empty()) break;
          if (boost::multiprecision::denominator(hashes_for(i, p) * m.share_target) != 1) {
            v.push_back(who + "statistical-exact mode needs hashes x share_target to be an integer share count");
            break;
          }
        }
      }
    }
    return v;
  }

  void validate() const {
    auto v = violations();
    if (v.empty()) return;
    std::string msg = "invalid scenario '" + name + "':";
    for (const auto& s : v) msg += "\n  - " + s;
    throw Error(msg);
  }
};

namespace detail {

inline void check_keys(const YAML::Node& node, const std::set<std::string>& allowed, const std::string& where,
                       std::vector<std::string>& errors) {
  for (const auto& kv : node) {
    auto key = kv.first.as<std::string>();
    if (!allowed.count(key)) errors.push_back("unknown key '" + key + "' in " + where);
  }
}

inline Rational yaml_rational(const YAML::Node& n) { return parse_rational(n.as<std::string>()); }

inline MiningMode parse_mode(const std::string& s) {
  if (s == "grind") return MiningMode::grind;
  if (s == "statistical-poisson") return MiningMode::statistical_poisson;
  if (s == "statistical-exact") return MiningMode::statistical_exact;
  throw Error("unknown mode '" + s + "'");
}

inline StrategyKind parse_strategy(const std::string& s) {
  for (auto k : {StrategyKind::honest, StrategyKind::external, StrategyKind::pool_hopper, StrategyKind::cross_period,
                 StrategyKind::delayed, StrategyKind::cheater, StrategyKind::self_serving, StrategyKind::over_claim})
    if (s == to_string(k)) return k;
  throw Error("unknown strategy '" + s + "'");
}

inline BaselineScheme parse_baseline(const std::string& s) {
  for (auto b : {BaselineScheme::pplns, BaselineScheme::proportional, BaselineScheme::pps})
    if (s == to_string(b)) return b;
  throw Error("unknown baseline '" + s + "'");
}

inline OverlapPolicy parse_overlap(const std::string& s) {
  if (s == "reject-miner") return OverlapPolicy::reject_miner;
  if (s == "keep-disjoint") return OverlapPolicy::keep_disjoint;
  throw Error("unknown overlap_policy '" + s + "'");
}

}  // namespace detail

// Parses and validates. All problems (unknown keys, malformed values, violated
// constraints) are collected and reported together.
inline ScenarioConfig parse_config_text(const std::string& text, const std::string& origin = "<text>") {
  static const std::set<std::string> top_keys{
      "name", "description", "seed", "periods", "period_len", "prepare_len", "block_interval", "storage_interval",
      "block_reward", "mode", "hashes_per_period", "challenges", "exit_interval", "overlap_policy", "baselines",
      "pplns_window", "baseline_share_target", "baseline_shares_per_block", "pps_rate", "pps_bankroll",
      "checks", "out_dir", "miners"};
  static const std::set<std::string> miner_keys{"name", "fraction", "strategy", "share_target", "cycle_len",
                                                "allocation", "delay", "invalid_fraction", "overclaim_factor"};

  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw Error(origin + ": " + e.what());
  }
  if (!root.IsMap()) throw Error(origin + ": scenario must be a YAML mapping");

  ScenarioConfig cfg;
  std::vector<std::string> errors;
  detail::check_keys(root, top_keys, "scenario", errors);

  auto field = [&](const YAML::Node& node, const char* key, auto&& apply) {
    if (!node[key]) return;
    try {
      apply(node[key]);
    } catch (const std::exception& e) {
      errors.push_back(std::string("bad value for '") + key + "': " + e.what());
    }
  };

  field(root, "name", [&](auto n) { cfg.name = n.template as<std::string>(); });
  field(root, "description", [&](auto n) { cfg.description = n.template as<std::string>(); });
  field(root, "seed", [&](auto n) { cfg.seed = n.template as<std::uint64_t>(); });
  field(root, "periods", [&](auto n) { cfg.periods = n.template as<std::uint64_t>(); });
  field(root, "period_len", [&](auto n) { cfg.geometry.period_len = n.template as<std::uint64_t>(); });
  field(root, "prepare_len", [&](auto n) { cfg.geometry.prepare_len = n.template as<std::uint64_t>(); });
  field(root, "block_interval", [&](auto n) { cfg.geometry.block_interval = n.template as<double>(); });
  field(root, "storage_interval", [&](auto n) { cfg.storage_interval = n.template as<double>(); });
  field(root, "block_reward", [&](auto n) { cfg.block_reward = detail::yaml_rational(n); });
  field(root, "mode", [&](auto n) { cfg.mode = detail::parse_mode(n.template as<std::string>()); });
  field(root, "hashes_per_period", [&](auto n) { cfg.hashes_per_period = n.template as<std::uint64_t>(); });
  field(root, "challenges", [&](auto n) { cfg.challenges = n.template as<std::uint32_t>(); });
  field(root, "exit_interval", [&](auto n) { cfg.exit_interval = n.template as<std::uint64_t>(); });
  field(root, "overlap_policy", [&](auto n) { cfg.overlap_policy = detail::parse_overlap(n.template as<std::string>()); });
  field(root, "baselines", [&](auto n) {
    for (const auto& b : n) cfg.baselines.push_back(detail::parse_baseline(b.template as<std::string>()));
  });
  field(root, "pplns_window", [&](auto n) { cfg.pplns_window = n.template as<std::uint64_t>(); });
  field(root, "baseline_share_target", [&](auto n) { cfg.baseline_share_target = detail::yaml_rational(n); });
  field(root, "baseline_shares_per_block", [&](auto n) { cfg.baseline_shares_per_block = detail::yaml_rational(n); });
  field(root, "pps_rate", [&](auto n) { cfg.pps_rate = detail::yaml_rational(n); });
  field(root, "pps_bankroll", [&](auto n) { cfg.pps_bankroll = detail::yaml_rational(n); });
  field(root, "checks", [&](auto n) {
    for (const auto& c : n) cfg.checks.push_back(c.template as<std::string>());
  });
  field(root, "out_dir", [&](auto n) { cfg.out_dir = n.template as<std::string>(); });

  if (const auto miners = root["miners"]) {
    if (!miners.IsSequence()) {
      errors.push_back("'miners' must be a list");
    } else {
      std::size_t idx = 0;
      for (const auto& node : miners) {
        MinerSpec m;
        m.name = "miner" + std::to_string(idx++);
        if (!node.IsMap()) {
          errors.push_back("each miner must be a mapping");
          continue;
        }
        detail::check_keys(node, miner_keys, "miner", errors);
        field(node, "name", [&](auto n) { m.name = n.template as<std::string>(); });
        field(node, "fraction", [&](auto n) { m.fraction = detail::yaml_rational(n); });
        field(node, "strategy", [&](auto n) { m.strategy = detail::parse_strategy(n.template as<std::string>()); });
        field(node, "share_target", [&](auto n) { m.share_target = detail::yaml_rational(n); });
        field(node, "cycle_len", [&](auto n) { m.cycle_len = n.template as<std::uint64_t>(); });
        field(node, "allocation", [&](auto n) {
          for (const auto& w : n) m.allocation.push_back(detail::yaml_rational(w));
        });
        field(node, "delay", [&](auto n) { m.delay = n.template as<std::uint64_t>(); });
        field(node, "invalid_fraction", [&](auto n) { m.invalid_fraction = detail::yaml_rational(n); });
        field(node, "overclaim_factor", [&](auto n) { m.overclaim_factor = detail::yaml_rational(n); });
        cfg.miners.push_back(std::move(m));
      }
    }
  }

  auto v = cfg.violations();
  errors.insert(errors.end(), v.begin(), v.end());
  if (!errors.empty()) {
    std::string msg = origin + ": invalid scenario:";
    for (const auto& e : errors) msg += "\n  - " + e;
    throw Error(msg);
  }
  return cfg;
}

inline ScenarioConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open scenario file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path.string());
}

// Effective configuration, every key spelled out, in schema order.
inline std::string to_yaml(const ScenarioConfig& c) {
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "name" << YAML::Value << c.name;
  out << YAML::Key << "description" << YAML::Value << c.description;
  out << YAML::Key << "seed" << YAML::Value << c.seed;
  out << YAML::Key << "periods" << YAML::Value << c.periods;
  out << YAML::Key << "period_len" << YAML::Value << c.geometry.period_len;
  out << YAML::Key << "prepare_len" << YAML::Value << c.geometry.prepare_len;
  out << YAML::Key << "block_interval" << YAML::Value << c.geometry.block_interval;
  out << YAML::Key << "storage_interval" << YAML::Value << c.storage_interval;
  out << YAML::Key << "block_reward" << YAML::Value << to_exact_string(c.block_reward);
  out << YAML::Key << "mode" << YAML::Value << to_string(c.mode);
  out << YAML::Key << "hashes_per_period" << YAML::Value << c.hashes_per_period;
  out << YAML::Key << "challenges" << YAML::Value << c.challenges;
  out << YAML::Key << "exit_interval" << YAML::Value << c.exit_interval;
  out << YAML::Key << "overlap_policy" << YAML::Value << to_string(c.overlap_policy);
  out << YAML::Key << "baselines" << YAML::Value << YAML::Flow << YAML::BeginSeq;
  for (auto b : c.baselines) out << to_string(b);
  out << YAML::EndSeq;
  out << YAML::Key << "pplns_window" << YAML::Value << c.pplns_window;
  out << YAML::Key << "baseline_share_target" << YAML::Value << to_exact_string(c.baseline_share_target);
  out << YAML::Key << "baseline_shares_per_block" << YAML::Value << to_exact_string(c.baseline_shares_per_block);
  out << YAML::Key << "pps_rate" << YAML::Value << to_exact_string(c.effective_pps_rate());
  out << YAML::Key << "pps_bankroll" << YAML::Value << to_exact_string(c.pps_bankroll);
  out << YAML::Key << "checks" << YAML::Value << YAML::Flow << YAML::BeginSeq;
  for (const auto& s : c.checks) out << s;
  out << YAML::EndSeq;
  out << YAML::Key << "out_dir" << YAML::Value << c.out_dir;
  out << YAML::Key << "miners" << YAML::Value << YAML::BeginSeq;
  for (const auto& m : c.miners) {
    out << YAML::BeginMap;
    out << YAML::Key << "name" << YAML::Value << m.name;
    out << YAML::Key << "fraction" << YAML::Value << to_exact_string(m.fraction);
    out << YAML::Key << "strategy" << YAML::Value << to_string(m.strategy);
    out << YAML::Key << "share_target" << YAML::Value << to_exact_string(m.share_target);
    if (m.strategy == StrategyKind::pool_hopper) out << YAML::Key << "cycle_len" << YAML::Value << m.cycle_len;
    if (m.strategy == StrategyKind::cross_period) {
      out << YAML::Key << "allocation" << YAML::Value << YAML::Flow << YAML::BeginSeq;
      for (const auto& w : m.allocation) out << to_exact_string(w);
      out << YAML::EndSeq;
    }
    if (m.strategy == StrategyKind::delayed) out << YAML::Key << "delay" << YAML::Value << m.delay;
    if (m.strategy == StrategyKind::cheater)
      out << YAML::Key << "invalid_fraction" << YAML::Value << to_exact_string(m.invalid_fraction);
    if (m.strategy == StrategyKind::over_claim)
      out << YAML::Key << "overclaim_factor" << YAML::Value << to_exact_string(m.overclaim_factor);
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

}  // namespace fiberpool
