#include <gtest/gtest.h>

#include "fiberpool/fiberpool.hpp"

using namespace fiberpool;

namespace {

ScenarioConfig small(std::vector<MinerSpec> miners, std::uint64_t periods = 8) {
  ScenarioConfig c;
  c.name = "unit";
  c.periods = periods;
  c.geometry.period_len = 20;
  c.geometry.prepare_len = 4;
  c.hashes_per_period = 400;
  c.miners = std::move(miners);
  return c;
}

MinerSpec miner(std::string name, Rational fraction, StrategyKind s = StrategyKind::honest) {
  MinerSpec m;
  m.name = std::move(name);
  m.fraction = fraction;
  m.strategy = s;
  return m;
}

}  // namespace

TEST(Engine, SoleMinerIsPaidWithTwoPeriodLag) {
  auto cfg = small({miner("solo", 1)});
  auto s = run(cfg);
  const Amount per_period = Rational(cfg.geometry.period_len) * cfg.block_reward;
  EXPECT_EQ(s.reward(0, 0), 0);
  EXPECT_EQ(s.reward(0, 1), 0);
  for (std::uint64_t p = 2; p < cfg.periods; ++p) EXPECT_EQ(s.reward(0, p), per_period) << p;
  EXPECT_EQ(s.ledger.frozen_warmup, 2 * per_period);
  for (const auto& c : s.credits) EXPECT_EQ(c.source_period + 2, c.block_period);
  EXPECT_EQ(s.ledger.identity_violations, 0u) << s.ledger.first_violation;
}

TEST(Engine, DeterministicInSeed) {
  auto cfg = small({miner("a", Rational(1, 4)), miner("b", Rational(3, 4))});
  cfg.mode = MiningMode::statistical_poisson;
  auto x = periods_csv(run(cfg)), y = periods_csv(run(cfg));
  EXPECT_EQ(x, y);
  cfg.seed = 2;
  EXPECT_NE(periods_csv(run(cfg)), x);
}

TEST(Engine, ExactModeSplitsEveryBlockByHashrate) {
  auto cfg = small({miner("a", Rational(1, 4)), miner("b", Rational(3, 4))});
  auto s = run(cfg);
  for (const auto& b : s.pool_blocks) {
    if (b.period < 2) continue;
    EXPECT_EQ(b.credits[0], cfg.block_reward / 4);
    EXPECT_EQ(b.credits[1], cfg.block_reward * 3 / 4);
  }
}

TEST(Engine, HopperRewardsOverACycle) {
  auto cfg = parse_config(std::string(FIBERPOOL_SCENARIO_DIR) + "/hopping.yaml");
  auto s = run(cfg);
  const Rational R = Rational(cfg.geometry.period_len) * cfg.block_reward;
  const Rational a = Rational(1, 5), b = Rational(3, 10);
  for (std::uint64_t cycle = 1; cycle + 1 < cfg.periods / 10; ++cycle) {
    std::uint64_t start = cycle * 10;
    EXPECT_EQ(s.reward(0, start), 0);
    EXPECT_EQ(s.reward(0, start + 1), 0);
    for (std::uint64_t p = start + 2; p < start + 8; ++p) EXPECT_EQ(s.reward(0, p), R * a) << p;
    EXPECT_EQ(s.reward(0, start + 8), R * (a + a * b / (a + b)));
    EXPECT_EQ(s.reward(0, start + 9), R * (a + a * b / (a + b)));
  }
}

TEST(Engine, ExternalMinerPaidSolo) {
  auto cfg = small({miner("in", Rational(1, 2)), miner("out", Rational(1, 2), StrategyKind::external)});
  auto s = run(cfg);
  for (std::uint64_t p = 0; p < cfg.periods; ++p) {
    EXPECT_EQ(s.pool_reward[1][p], 0);
    EXPECT_EQ(s.solo_reward[1][p], 10 * cfg.block_reward);
  }
}

TEST(Engine, LedgerIdentityHoldsWithAdversaries) {
  auto over = miner("over", Rational(1, 4), StrategyKind::over_claim);
  auto cheat = miner("cheat", Rational(1, 4), StrategyKind::cheater);
  cheat.invalid_fraction = Rational(1, 5);
  cheat.share_target = Rational(1, 4);
  auto cfg = small({miner("h", Rational(1, 4)), over, cheat, miner("self", Rational(1, 4), StrategyKind::self_serving)},
                   12);
  auto s = run(cfg);
  EXPECT_EQ(s.ledger.identity_violations, 0u) << s.ledger.first_violation;
  EXPECT_GT(s.ledger.identity_checks, cfg.periods * cfg.geometry.period_len);
  EXPECT_EQ(s.ledger.honest_links_invalidated, 0u);
  EXPECT_GT(s.ledger.overclaim_links_invalidated, 0u);
  // the self-serving miner's blocks never credit anyone else
  for (const auto& b : s.pool_blocks)
    if (b.producer == 3 && b.status == LinkStatus::validated) {
      for (std::size_t m = 0; m < 3; ++m) EXPECT_EQ(b.credits[m], 0);
    }
  // and nobody else's distribution contains it
  for (std::uint64_t p = 0; p + 2 < cfg.periods; ++p) EXPECT_EQ(s.dist_work[3][p], 0);
}

TEST(Engine, DelayedSubmissionPastBoundaryEarnsNothing) {
  auto late = miner("late", Rational(1, 2), StrategyKind::delayed);
  late.delay = 19;
  auto cfg = small({late, miner("h", Rational(1, 2))});
  auto s = run(cfg);
  for (const auto& v : s.verdicts)
    if (v.miner == 0) {
      EXPECT_EQ(v.failed_step, 1);
    }
  for (std::uint64_t p = 0; p < cfg.periods; ++p) EXPECT_EQ(s.dist_work[0][p], 0);
}

TEST(Engine, BaselinesPayEveryPoolBlock) {
  auto cfg = small({miner("a", Rational(1, 4)), miner("b", Rational(3, 4))});
  cfg.baselines = {BaselineScheme::pplns, BaselineScheme::proportional, BaselineScheme::pps};
  auto s = run(cfg);
  for (const auto& b : s.baselines) {
    EXPECT_EQ(b.blocks, s.pool_blocks.size());
    Amount total = 0;
    for (const auto& row : b.reward)
      for (const auto& v : row) total += v;
    if (b.scheme == BaselineScheme::pps) {
      EXPECT_EQ(total, b.paid);
      EXPECT_EQ(b.pps_residual, b.received - b.paid);
    } else {
      EXPECT_EQ(total, cfg.block_reward * Rational(b.blocks));
    }
  }
}

TEST(Helpers, ExactScheduleKeepsCountsAndSpreads) {
  auto sched = exact_schedule({1, 3, 6});
  ASSERT_EQ(sched.size(), 10u);
  std::vector<int> counts(3, 0);
  for (auto i : sched) ++counts[i];
  EXPECT_EQ(counts, (std::vector<int>{1, 3, 6}));
  for (std::size_t i = 1; i < sched.size(); ++i) EXPECT_FALSE(sched[i] == 0 && sched[i - 1] == 0);
}

TEST(Helpers, PaddingMakesUpTheFraction) {
  EXPECT_EQ(padding_for(80, Rational(1, 5)), 20u);
  EXPECT_EQ(padding_for(10, 0), 0u);
  EXPECT_EQ(padding_for(3, Rational(1, 2)), 3u);
}

TEST(Helpers, Participation) {
  auto h = miner("h", 1, StrategyKind::pool_hopper);
  h.cycle_len = 10;
  EXPECT_TRUE(participates(h, 0));
  EXPECT_TRUE(participates(h, 7));
  EXPECT_FALSE(participates(h, 8));
  EXPECT_FALSE(participates(h, 9));
  EXPECT_TRUE(participates(h, 10));
  EXPECT_FALSE(participates(miner("x", 1, StrategyKind::external), 3));
}

TEST(Helpers, SubstreamsAreLabelled) {
  auto a = substream(1, "main/time"), b = substream(1, "main/lottery"), c = substream(1, "main/time");
  auto x = a();
  EXPECT_NE(x, b());
  EXPECT_EQ(x, c());
  EXPECT_NE(substream(2, "main/time")(), x);
}

TEST(Helpers, ClosedForms) {
  EXPECT_EQ(hopping_loss(1, Rational(1, 5), Rational(3, 10)), Rational(4, 25));
  std::vector<Rational> uniform(4, Rational(1, 4));
  // 4 * 1/4 / (1 * 3/4 + 1/4) = 1
  EXPECT_EQ(cross_period_objective(1, 1, Rational(1, 4), uniform), 1);
}
