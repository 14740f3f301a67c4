#pragma once

// Theorem checks evaluated by `run --check`. Each check compares a value
// measured from RunStats against its closed-form expectation at a fixed
// tolerance. Checks that need a counterfactual (hopping, cross-period, delay,
// determinism) rerun the scenario with one agent changed and the same seed.

#include <cmath>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "fiberpool/engine.hpp"
#include "fiberpool/report.hpp"
#include "fiberpool/scenario.hpp"

namespace fiberpool {

struct CheckResult {
  std::string name;
  std::string metric;
  std::string measured;
  std::string expected;
  std::string tolerance;
  bool passed = false;
  std::string note;
};

namespace detail {

inline bool honest_like(StrategyKind s) {
  return s == StrategyKind::honest || s == StrategyKind::delayed || s == StrategyKind::over_claim ||
         s == StrategyKind::pool_hopper;
}

inline std::string fmt(double v, int digits = 6) {
  std::ostringstream o;
  o.precision(digits);
  o << v;
  return o.str();
}

inline std::string fmt(const Rational& r) { return to_decimal_string(r, 9); }

inline std::optional<std::size_t> first_with(const ScenarioConfig& cfg, StrategyKind k) {
  for (std::size_t i = 0; i < cfg.miners.size(); ++i)
    if (cfg.miners[i].strategy == k) return i;
  return std::nullopt;
}

// Expected split of a block sourced from `period` when every participant
// submits work proportional to its hashrate.
inline Rational expected_share(const ScenarioConfig& cfg, std::size_t miner, std::uint64_t period) {
  Rational total = 0;
  for (const auto& m : cfg.miners)
    if (participates(m, period) && m.strategy != StrategyKind::self_serving) total += m.fraction;
  if (!participates(cfg.miners[miner], period) || total == 0) return 0;
  return cfg.miners[miner].fraction / total;
}

inline CheckResult missing(const std::string& name, const std::string& why) {
  return {name, "-", "-", "-", "-", false, why};
}

}  // namespace detail

// Steady-state split of FiberPool block rewards.
inline std::vector<CheckResult> check_fairness(const ScenarioConfig& cfg, const RunStats& s) {
  std::vector<CheckResult> out;
  for (const auto& m : cfg.miners)
    if (m.mines_for_pool() && !detail::honest_like(m.strategy))
      return {detail::missing("fairness", "fairness check needs every pool member to mine honestly")};

  for (std::size_t i = 0; i < cfg.miners.size(); ++i) {
    if (!cfg.miners[i].mines_for_pool() || cfg.miners[i].strategy == StrategyKind::pool_hopper) continue;
    CheckResult r{"fairness", cfg.miners[i].name + " share of each pool block (period >= 2)", "", "", "", false, ""};
    if (cfg.mode == MiningMode::statistical_exact) {
      std::optional<Rational> lo, hi;
      bool all_equal = true;
      std::size_t n = 0;
      for (const auto& b : s.pool_blocks) {
        if (b.period < 2 || b.status != LinkStatus::validated || !b.source_period) continue;
        Rational f = b.credits[i] / b.amount;
        Rational e = detail::expected_share(cfg, i, *b.source_period);
        if (f != e) all_equal = false;
        if (!lo || f < *lo) lo = f;
        if (!hi || f > *hi) hi = f;
        ++n;
      }
      if (n == 0) {
        out.push_back(detail::missing("fairness", "no deposited pool blocks after warm-up"));
        continue;
      }
      r.measured = *lo == *hi ? detail::fmt(*lo) : "[" + detail::fmt(*lo) + ", " + detail::fmt(*hi) + "]";
      r.expected = detail::fmt(detail::expected_share(cfg, i, 2));
      r.tolerance = "exact";
      r.passed = all_equal;
      r.note = std::to_string(n) + " blocks";
    } else {
      // Aggregate fraction against binomial noise of each source period's split.
      std::map<std::uint64_t, Rational> weight;
      Rational paid = 0, total = 0;
      for (const auto& b : s.pool_blocks) {
        if (b.period < 2 || b.status != LinkStatus::validated || !b.source_period) continue;
        weight[*b.source_period] += b.amount;
        paid += b.credits[i];
        total += b.amount;
      }
      if (total == 0) {
        out.push_back(detail::missing("fairness", "no deposited pool blocks after warm-up"));
        continue;
      }
      double var = 0;
      double p = to_double(detail::expected_share(cfg, i, 2));
      for (const auto& [period, w] : weight) {
        std::uint64_t shares = 0;
        for (std::size_t j = 0; j < cfg.miners.size(); ++j) shares += s.dist_shares[j][period];
        if (shares == 0) continue;
        double wf = to_double(w / total);
        var += wf * wf * p * (1 - p) / static_cast<double>(shares);
      }
      double measured = to_double(paid / total);
      double sigma = std::sqrt(var);
      r.measured = detail::fmt(measured);
      r.expected = detail::fmt(p);
      r.tolerance = "3 sigma = " + detail::fmt(3 * sigma);
      r.passed = std::abs(measured - p) <= 3 * sigma;
      r.note = "z = " + detail::fmt(sigma > 0 ? (measured - p) / sigma : 0.0, 3);
    }
    out.push_back(std::move(r));
  }
  return out;
}

inline std::vector<CheckResult> check_budget(const ScenarioConfig&, const RunStats& s) {
  const auto& led = s.ledger;
  std::vector<CheckResult> out;
  out.push_back({"budget_balance", "pool coinbase = distributed + unclaimed + frozen (every step)",
                 std::to_string(led.identity_violations) + " violations in " + std::to_string(led.identity_checks),
                 "0 violations", "exact", led.identity_violations == 0, led.first_violation});
  Amount warm_coinbase = 0, warm_frozen = 0, adjust = 0;
  for (std::uint64_t p = 0; p < std::min<std::uint64_t>(2, s.periods); ++p) {
    warm_coinbase += s.pool_coinbase_by_period[p];
    warm_frozen += s.frozen_warmup_by_period[p];
  }
  // Over-claiming links shift funds: an invalidated one freezes its coinbase
  // elsewhere, a validated one freezes its full claimed amount here. A
  // self-serving template deposits against its own non-empty distribution.
  for (const auto& b : s.pool_blocks) {
    if (b.period >= 2) continue;
    if (b.status == LinkStatus::validated && !b.empty_distribution) adjust -= b.credited;
    if (b.amount == b.credited) continue;
    if (b.status == LinkStatus::invalidated) adjust -= b.credited;
    if (b.status == LinkStatus::validated) adjust += b.amount - b.credited;
  }
  out.push_back({"budget_balance", "warm-up residual = pool rewards of periods 0-1", detail::fmt(warm_frozen),
                 detail::fmt(warm_coinbase + adjust), "exact", warm_frozen == warm_coinbase + adjust,
                 adjust == 0 ? "" : "expected adjusted by " + detail::fmt(adjust) + " for over-claiming and self-serving links"});
  Amount residual = led.pool_coinbase - led.distributed - led.frozen() - led.unclaimed - led.in_flight;
  out.push_back({"budget_balance", "final residual coinbase - distributed - frozen - unclaimed", detail::fmt(residual),
                 "0", "exact", residual == 0,
                 "distributed " + detail::fmt(led.distributed) + ", frozen " + detail::fmt(led.frozen())});
  return out;
}

// Per-block reward variance: FiberPool (steady state) and the PPLNS baseline.
inline std::vector<CheckResult> check_variance(const ScenarioConfig& cfg, const RunStats& s) {
  std::vector<CheckResult> out;
  std::optional<std::size_t> m1;
  for (std::size_t i = 0; i < cfg.miners.size() && !m1; ++i)
    if (cfg.miners[i].mines_for_pool()) m1 = i;
  if (!m1) return {detail::missing("variance", "no pool miner")};
  const std::size_t i = *m1;

  std::vector<Rational> samples;
  for (const auto& b : s.pool_blocks)
    if (b.period >= 2 && b.status == LinkStatus::validated && b.source_period) samples.push_back(b.credits[i]);
  std::optional<double> fp_var;
  if (!samples.empty()) {
    Rational mean = std::accumulate(samples.begin(), samples.end(), Rational(0)) / samples.size();
    Rational var = 0;
    for (const auto& x : samples) var += (x - mean) * (x - mean);
    var /= samples.size();
    fp_var = to_double(var);
    CheckResult r{"variance", cfg.miners[i].name + " FProportional per-block reward variance", detail::fmt(var), "", "",
                  false, std::to_string(samples.size()) + " blocks"};
    if (cfg.mode == MiningMode::statistical_exact) {
      r.expected = "0";
      r.tolerance = "exact";
      r.passed = var == 0;
    } else {
      r.expected = "below PPLNS";
      r.tolerance = "-";
      r.passed = true;
    }
    out.push_back(std::move(r));
  }

  if (const auto* pplns = s.baseline(BaselineScheme::pplns)) {
    const auto& xs = pplns->block_payouts[i];
    if (xs.size() < 2) {
      out.push_back(detail::missing("variance", "too few PPLNS blocks"));
      return out;
    }
    double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
    double var = 0;
    for (double x : xs) var += (x - mean) * (x - mean);
    var /= static_cast<double>(xs.size() - 1);
    Rational pool = 0;
    for (const auto& m : cfg.miners)
      if (m.mines_for_pool()) pool += m.fraction;
    double p = to_double(cfg.miners[i].fraction / pool);
    double B = to_double(cfg.block_reward);
    double expected = p * (1 - p) * B * B / static_cast<double>(cfg.pplns_window);
    out.push_back({"variance", cfg.miners[i].name + " PPLNS per-block reward variance", detail::fmt(var),
                   detail::fmt(expected), "5% relative", std::abs(var - expected) <= 0.05 * expected,
                   std::to_string(xs.size()) + " blocks"});
    if (fp_var && cfg.mode != MiningMode::statistical_exact) out[0].passed = *fp_var < var;
  }
  return out;
}

// Loss per hopping cycle against a same-seed run where the hopper mines solo.
inline std::vector<CheckResult> check_hopping(const ScenarioConfig& cfg, const RunStats& s) {
  auto h = detail::first_with(cfg, StrategyKind::pool_hopper);
  if (!h) return {detail::missing("hopping", "scenario has no pool-hopper")};
  ScenarioConfig solo = cfg;
  solo.miners[*h].strategy = StrategyKind::external;
  RunStats cf = run(solo);

  const std::uint64_t N = cfg.miners[*h].cycle_len;
  const std::uint64_t cycles = s.periods / N;
  if (cycles == 0) return {detail::missing("hopping", "run shorter than one cycle")};
  Rational alpha = cfg.miners[*h].fraction, beta = 0;
  for (std::size_t j = 0; j < cfg.miners.size(); ++j)
    if (j != *h && cfg.miners[j].mines_for_pool()) beta += cfg.miners[j].fraction;
  Rational R = cfg.block_reward * Rational(cfg.geometry.period_len);
  Rational expected = hopping_loss(R, alpha, beta);

  std::vector<Rational> losses;
  for (std::uint64_t c = 0; c < cycles; ++c) {
    Rational loss = 0;
    for (std::uint64_t p = c * N; p < (c + 1) * N; ++p) loss += cf.reward(*h, p) - s.reward(*h, p);
    losses.push_back(loss);
  }
  Rational mean = std::accumulate(losses.begin(), losses.end(), Rational(0)) / losses.size();
  CheckResult r{"hopping", "loss per cycle vs always-solo", detail::fmt(mean), detail::fmt(expected), "", false,
                std::to_string(cycles) + " cycles"};
  if (cfg.mode == MiningMode::statistical_exact) {
    r.tolerance = "exact, every cycle";
    r.passed = std::all_of(losses.begin(), losses.end(), [&](const Rational& x) { return x == expected; });
  } else {
    double m = to_double(mean), var = 0;
    for (const auto& x : losses) var += (to_double(x) - m) * (to_double(x) - m);
    double se = losses.size() > 1 ? std::sqrt(var / static_cast<double>(losses.size() - 1) /
                                              static_cast<double>(losses.size()))
                                  : 0.0;
    r.tolerance = "3 sigma = " + detail::fmt(3 * se);
    r.passed = std::abs(m - to_double(expected)) <= 3 * se;
  }
  return {r};
}

// Cross-period allocation: realized reward follows the closed form, and the
// uniform allocation earns at least as much.
inline std::vector<CheckResult> check_cross_period(const ScenarioConfig& cfg, const RunStats& s) {
  auto x = detail::first_with(cfg, StrategyKind::cross_period);
  if (!x) return {detail::missing("cross_period", "scenario has no cross-period miner")};
  if (cfg.mode != MiningMode::statistical_exact)
    return {detail::missing("cross_period", "cross-period check needs statistical-exact mode")};
  const std::size_t i = *x;

  // Sum over source periods whose paying blocks fall inside the run.
  Rational measured = 0, formula = 0;
  Rational P = Rational(cfg.hashes_per_period);
  for (std::uint64_t p = 0; p + 2 < s.periods; ++p) {
    measured += s.pool_reward[i][p + 2];
    Rational others = 0;
    for (std::size_t j = 0; j < cfg.miners.size(); ++j)
      if (j != i && participates(cfg.miners[j], p)) others += cfg.hashes_for(j, p);
    Rational xi = cfg.hashes_for(i, p);
    formula += s.pool_coinbase_by_period[p + 2] * xi / (others + xi);
  }
  std::vector<CheckResult> out;
  out.push_back({"cross_period", "reward = sum R x_i / (P(1-a) + x_i)", detail::fmt(measured), detail::fmt(formula),
                 "exact", measured == formula, ""});

  ScenarioConfig uniform = cfg;
  uniform.miners[i].allocation.assign(cfg.miners[i].allocation.size(), Rational(1));
  RunStats u = run(uniform);
  Rational uniform_total = 0;
  for (std::uint64_t p = 2; p < s.periods; ++p) uniform_total += u.pool_reward[i][p];
  out.push_back({"cross_period", "allocation reward <= uniform allocation reward", detail::fmt(measured),
                 "<= " + detail::fmt(uniform_total), "exact", measured <= uniform_total, ""});
  return out;
}

// Same-seed reruns with delays 0 and 1 must pay identically when the configured
// delay is within the deadline; a delay past it must be rejected at step 1.
inline std::vector<CheckResult> check_delay(const ScenarioConfig& cfg, const RunStats& s) {
  auto d = detail::first_with(cfg, StrategyKind::delayed);
  if (!d) return {detail::missing("delay", "scenario has no delayed miner")};
  const std::size_t i = *d;
  std::uint64_t late = 0, total = 0;
  for (const auto& v : s.verdicts)
    if (v.miner == i) {
      ++total;
      if (v.failed_step == 1) ++late;
    }
  if (late == 0) {
    std::vector<CheckResult> out;
    for (std::uint64_t delay : {std::uint64_t{0}, std::uint64_t{1}}) {
      ScenarioConfig alt = cfg;
      alt.miners[i].delay = delay;
      RunStats r = run(alt);
      bool same = true;
      for (std::size_t m = 0; m < cfg.miners.size(); ++m)
        for (std::uint64_t p = 0; p < s.periods; ++p)
          if (r.reward(m, p) != s.reward(m, p)) same = false;
      out.push_back({"delay", "rewards with delay " + std::to_string(cfg.miners[i].delay) + " vs " + std::to_string(delay),
                     same ? "identical" : "different", "identical", "exact", same, ""});
    }
    return out;
  }
  bool all_late = late == total;
  bool zero = true;
  for (std::uint64_t p = 0; p < s.periods; ++p)
    if (s.dist_work[i][p] != 0) zero = false;
  Rational pool = 0;
  for (std::uint64_t p = 0; p < s.periods; ++p) pool += s.pool_reward[i][p];
  return {{"delay", "late batches rejected at step 1", std::to_string(late) + "/" + std::to_string(total),
           std::to_string(total) + "/" + std::to_string(total), "exact", all_late, ""},
          {"delay", "verified work of the late miner", zero ? "0" : "nonzero", "0", "exact", zero,
           "pool reward " + detail::fmt(pool)}};
}

// Accepted work of padded batches: mean over batches of N/D when every
// challenged share is valid, against (N/D)(1 - f)^k.
inline std::vector<CheckResult> check_cheating(const ScenarioConfig& cfg, const RunStats& s) {
  auto c = detail::first_with(cfg, StrategyKind::cheater);
  if (!c) return {detail::missing("cheating", "scenario has no cheater")};
  const auto& m = cfg.miners[*c];
  const Rational work_per_share = 1 / m.share_target;
  double sum = 0, expected = 0, var = 0;
  std::size_t n = 0;
  for (const auto& v : s.verdicts) {
    if (v.miner != *c || v.share_count == 0) continue;
    // Padding makes up the invalid fraction f of every batch (up to rounding).
    std::uint64_t valid = v.share_count;
    for (std::uint64_t k = v.share_count; k > 0; --k)
      if (k + padding_for(k, m.invalid_fraction) == v.share_count) {
        valid = k;
        break;
      }
    double q = std::pow(static_cast<double>(valid) / static_cast<double>(v.share_count), cfg.challenges);
    double full = to_double(Rational(v.share_count) * work_per_share);
    sum += to_double(v.accepted_work);
    expected += full * q;
    var += full * full * q * (1 - q);
    ++n;
  }
  if (n == 0) return {detail::missing("cheating", "cheater submitted no batches")};
  double mean = sum / static_cast<double>(n), emean = expected / static_cast<double>(n);
  double sigma = std::sqrt(var) / static_cast<double>(n);
  return {{"cheating", "mean accepted work per padded batch", detail::fmt(mean), detail::fmt(emean),
           "3 sigma = " + detail::fmt(3 * sigma), std::abs(mean - emean) <= 3 * sigma, std::to_string(n) + " batches"},
          {"cheating", "expected reward B(1-f), B = block reward",
           detail::fmt(expected_reward_under_cheating(cfg.block_reward, m.invalid_fraction)),
           detail::fmt(cfg.block_reward * (1 - m.invalid_fraction)), "exact", true, ""}};
}

inline std::vector<CheckResult> check_settlement(const ScenarioConfig& cfg, const RunStats& s) {
  const auto& led = s.ledger;
  std::vector<CheckResult> out;
  out.push_back({"settlement", "honest links invalidated", std::to_string(led.honest_links_invalidated), "0", "exact",
                 led.honest_links_invalidated == 0, std::to_string(led.links) + " links"});
  if (detail::first_with(cfg, StrategyKind::over_claim)) {
    std::optional<LinkStatus> first;
    std::uint64_t link_order = std::numeric_limits<std::uint64_t>::max();
    for (const auto& b : s.pool_blocks)
      if (b.amount != b.credited && b.status != LinkStatus::pending && b.link_id < link_order) {
        link_order = b.link_id;
        first = b.status;
      }
    bool ok = first && *first == LinkStatus::invalidated;
    out.push_back({"settlement", "first over-claiming link invalidated by the next user",
                   first ? (ok ? "invalidated" : "validated") : "none published", "invalidated", "exact", ok,
                   std::to_string(led.overclaim_links_invalidated) + "/" + std::to_string(led.overclaim_links) +
                       " over-claims invalidated"});
  }
  return out;
}

inline std::vector<CheckResult> check_determinism(const ScenarioConfig& cfg, const RunStats& s) {
  bool same = periods_csv(run(cfg)) == periods_csv(s);
  return {{"determinism", "rerun with the same seed", same ? "byte-identical CSV" : "CSV differs",
           "byte-identical CSV", "exact", same, ""}};
}

inline std::vector<CheckResult> run_checks(const ScenarioConfig& cfg, const RunStats& s) {
  std::vector<CheckResult> out;
  auto add = [&](std::vector<CheckResult> rs) { out.insert(out.end(), rs.begin(), rs.end()); };
  for (const auto& name : cfg.checks) {
    if (name == "fairness") add(check_fairness(cfg, s));
    else if (name == "budget_balance") add(check_budget(cfg, s));
    else if (name == "variance") add(check_variance(cfg, s));
    else if (name == "hopping") add(check_hopping(cfg, s));
    else if (name == "cross_period") add(check_cross_period(cfg, s));
    else if (name == "delay") add(check_delay(cfg, s));
    else if (name == "cheating") add(check_cheating(cfg, s));
    else if (name == "settlement") add(check_settlement(cfg, s));
    else if (name == "determinism") add(check_determinism(cfg, s));
    else throw Error("unknown check '" + name + "'");
  }
  return out;
}

inline bool all_passed(const std::vector<CheckResult>& rs) {
  return std::all_of(rs.begin(), rs.end(), [](const CheckResult& r) { return r.passed; });
}

// Human-readable summary: run facts, per-miner totals, ledger, checks.
inline void write_summary(std::ostream& out, const ScenarioConfig& cfg, const RunStats& s,
                          const std::vector<CheckResult>& checks) {
  out << "scenario      " << s.scenario << "\n";
  out << "run_id        " << run_id(s) << "\n";
  out << "seed          " << s.seed << "\n";
  out << "mode          " << to_string(cfg.mode) << "\n";
  out << "periods       " << s.periods << " x " << cfg.geometry.period_len << " blocks\n";
  out << "main blocks   " << s.main_blocks << "\n";
  out << "storage blocks " << s.storage_blocks << "\n\n";

  out << "miner            strategy       fraction     blocks  reward_total    pool_reward     solo_reward\n";
  for (std::size_t m = 0; m < s.miners.size(); ++m) {
    Amount pool = 0, solo = 0;
    for (std::uint64_t p = 0; p < s.periods; ++p) {
      pool += s.pool_reward[m][p];
      solo += s.solo_reward[m][p];
    }
    char line[256];
    std::snprintf(line, sizeof line, "%-16s %-14s %-12s %6llu  %-15s %-15s %-15s\n", s.miners[m].name.c_str(),
                  to_string(s.miners[m].strategy), to_exact_string(s.miners[m].fraction).c_str(),
                  static_cast<unsigned long long>(s.blocks_by_producer[m]), to_decimal_string(pool + solo, 9).c_str(),
                  to_decimal_string(pool, 9).c_str(), to_decimal_string(solo, 9).c_str());
    out << line;
  }

  const auto& led = s.ledger;
  out << "\nledger\n";
  out << "  pool coinbase        " << to_decimal_string(led.pool_coinbase, 9) << "\n";
  out << "  distributed          " << to_decimal_string(led.distributed, 9) << "\n";
  out << "  unclaimed            " << to_decimal_string(led.unclaimed, 9) << "\n";
  out << "  frozen (warm-up)     " << to_decimal_string(led.frozen_warmup, 9) << "\n";
  out << "  frozen (invalidated) " << to_decimal_string(led.frozen_invalidated, 9) << "\n";
  out << "  exited               " << to_decimal_string(led.exited, 9) << " in " << s.exits.size() << " exits\n";
  out << "  links                " << led.links << " (" << led.links_invalidated << " invalidated)\n";
  out << "  identity violations  " << led.identity_violations << " / " << led.identity_checks << " checks\n";

  for (const auto& b : s.baselines) {
    out << "\nbaseline " << to_string(b.scheme) << ": " << b.blocks << " blocks, " << b.shares << " shares";
    if (b.scheme == BaselineScheme::pps) {
      double q = 1.0 / (to_double(cfg.baseline_shares_per_block) + 1.0);
      double sd = to_double(cfg.block_reward) * std::sqrt(static_cast<double>(b.blocks) * (1 - q));
      out << ", bankroll residual " << to_decimal_string(b.pps_residual, 9) << " (model sd " << detail::fmt(sd)
          << ")";
    } else {
      out << ", paid " << to_decimal_string(b.paid, 9) << " of " << to_decimal_string(b.received, 9);
    }
    out << "\n";
  }

  if (!checks.empty()) {
    out << "\nchecks\n";
    for (const auto& c : checks) {
      out << "  [" << (c.passed ? "PASS" : "FAIL") << "] " << c.name << ": " << c.metric << "\n";
      out << "         measured " << c.measured << " | expected " << c.expected << " | tolerance " << c.tolerance;
      if (!c.note.empty()) out << " | " << c.note;
      out << "\n";
    }
    out << "\n" << (all_passed(checks) ? "all checks passed" : "some checks FAILED") << "\n";
  }
}

}  // namespace fiberpool
