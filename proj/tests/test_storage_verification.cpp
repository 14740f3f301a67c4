#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "fiberpool/storage_chain.hpp"
#include "fiberpool/verification.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace fiberpool;

namespace {

StorageChain chain_at(std::initializer_list<double> times) {
  StorageChain c;
  for (double t : times) c.append({}, t);
  return c;
}

BatchVerdict accepted(const PublicKey& pub, std::uint64_t first, std::uint64_t n, Work w, std::string id) {
  BatchVerdict v;
  v.batch_id = hash(id);
  v.pubkey = pub;
  v.period = 2;
  v.first_counter = first;
  v.share_count = n;
  v.accepted_work = w;
  return v;
}

}  // namespace

TEST(StorageChain, PrepareBoundaryExamples) {
  auto c = chain_at({5, 10, 15});
  EXPECT_EQ(c.prepare_boundary(1, 10).storage_height, 2u);
  EXPECT_EQ(c.prepare_boundary(1, 4).storage_height, 0u);
  EXPECT_FALSE(c.prepare_boundary(1, 20).storage_height.has_value());
  EXPECT_TRUE(c.prepare_boundary(1, 20).admits(1000));
  auto b = c.prepare_boundary(1, 10);
  EXPECT_TRUE(b.admits(1));
  EXPECT_FALSE(b.admits(2));
}

TEST(StorageChain, TimestampsMustIncrease) {
  auto c = chain_at({5, 10});
  EXPECT_THROW(c.append({}, 10), Error);
  EXPECT_THROW(c.append({}, 3), Error);
  EXPECT_NO_THROW(c.append({}, 10.5));
}

TEST(StorageChain, BeaconsChain) {
  auto c = chain_at({1, 2, 3});
  EXPECT_EQ(c.at(1).prev_beacon, c.at(0).beacon);
  EXPECT_EQ(c.at(2).prev_beacon, c.at(1).beacon);
  EXPECT_EQ(c.at(2).beacon, storage_block_hash(c.at(2)));
  EXPECT_FALSE(c.challenge_beacon(2).has_value());
  EXPECT_EQ(c.challenge_beacon(1), c.at(2).beacon);
}

TEST(Challenge, IndexIsUniform) {
  const int n = 10000, buckets = 10;
  std::vector<int> counts(buckets, 0);
  Digest root = hash("root");
  for (int i = 0; i < n; ++i) {
    std::size_t idx = challenge_index_from(hash("beacon" + std::to_string(i)), root, buckets);
    ASSERT_LT(idx, static_cast<std::size_t>(buckets));
    ++counts[idx];
  }
  // chi-square, 9 degrees of freedom; 27.88 is the 0.999 quantile
  double chi2 = 0, e = static_cast<double>(n) / buckets;
  for (int c : counts) chi2 += (c - e) * (c - e) / e;
  EXPECT_LT(chi2, 27.88);
}

TEST(Challenge, SingleShareAlwaysIndexZero) {
  for (int i = 0; i < 100; ++i) EXPECT_EQ(challenge_index_from(hash(std::to_string(i)), hash("r"), 1), 0u);
  EXPECT_THROW(challenge_index_from(hash("b"), hash("r"), 0), Error);
}

TEST(Challenge, SlotsDiffer) {
  int same = 0;
  for (int i = 0; i < 200; ++i) {
    auto b = hash(std::to_string(i));
    same += challenge_index_from(b, hash("r"), 1000, 0) == challenge_index_from(b, hash("r"), 1000, 1);
  }
  EXPECT_LT(same, 5);
}

TEST(Verify, HonestBatchAccepted) {
  auto c = fixture::build_case(fixture::Defect::none);
  ASSERT_TRUE(c.verdict->accepted()) << c.verdict->reason;
  EXPECT_EQ(*c.verdict->accepted_work, 16 * 4);
}

class VerifyDefect : public ::testing::TestWithParam<std::pair<fixture::Defect, int>> {};

TEST_P(VerifyDefect, RejectedAtItsStep) {
  auto [defect, step] = GetParam();
  auto c = fixture::build_case(defect);
  EXPECT_FALSE(c.verdict->accepted());
  EXPECT_EQ(c.verdict->failed_step, step) << fixture::name(defect) << ": " << c.verdict->reason;
}

INSTANTIATE_TEST_SUITE_P(AllSteps, VerifyDefect,
                         ::testing::Values(std::pair{fixture::Defect::late_batch, 1},
                                           std::pair{fixture::Defect::wrong_index, 2},
                                           std::pair{fixture::Defect::own_coinbase, 3},
                                           std::pair{fixture::Defect::wrong_dist, 4},
                                           std::pair{fixture::Defect::target_mismatch, 5},
                                           std::pair{fixture::Defect::invalid_pow, 6},
                                           std::pair{fixture::Defect::foreign_signature, 7}));

TEST(Verify, MissingOpeningFailsDeadline) {
  auto c = fixture::build_case(fixture::Defect::none);
  std::vector<Posted<ShareProof>> none;
  auto v = verify_batch(c.chain, c.posted, none, c.ctx);
  EXPECT_EQ(v.failed_step, 1);
}

TEST(Verify, OpeningAfterBoundaryFailsDeadline) {
  auto c = fixture::build_case(fixture::Defect::none);
  // boundary between batch+beacon and opening
  auto ctx = c.ctx;
  ctx.boundary = c.chain.prepare_boundary(7, 2.5);
  EXPECT_EQ(verify_batch(c.chain, c.posted, ctx).failed_step, 1);
}

TEST(Verify, MoreChallengesThanOpenings) {
  auto c = fixture::build_case(fixture::Defect::none);
  auto ctx = c.ctx;
  ctx.challenges = 2;
  EXPECT_EQ(verify_batch(c.chain, c.posted, ctx).failed_step, 1);
}

TEST(Verify, WrongPeriodFailsLink) {
  auto c = fixture::build_case(fixture::Defect::none);
  auto ctx = c.ctx;
  ctx.period = 6;
  EXPECT_EQ(verify_batch(c.chain, c.posted, ctx).failed_step, 4);
}

TEST(Verify, PeriodVerdictsInChainOrder) {
  auto c = fixture::build_case(fixture::Defect::none);
  auto vs = verify_period(c.chain, c.ctx);
  ASSERT_EQ(vs.size(), 1u);
  EXPECT_TRUE(vs[0].accepted());
}

TEST(Aggregate, ShuffledVerdictsGiveIdenticalCommitment) {
  std::vector<BatchVerdict> vs;
  for (int m = 0; m < 5; ++m) {
    auto pub = KeyPair::from_seed("m" + std::to_string(m)).public_key();
    for (int b = 0; b < 3; ++b)
      vs.push_back(accepted(pub, static_cast<std::uint64_t>(b) * 10, 10, 10 * (m + 1), std::to_string(m * 10 + b)));
  }
  auto ref = aggregate_distribution(vs, 2).commitment();
  std::mt19937_64 rng(3);
  for (int i = 0; i < 20; ++i) {
    std::shuffle(vs.begin(), vs.end(), rng);
    EXPECT_EQ(aggregate_distribution(vs, 2).commitment(), ref);
  }
  EXPECT_EQ(aggregate_distribution(vs, 2).total_work(), 3 * 10 * (1 + 2 + 3 + 4 + 5));
}

TEST(Aggregate, RejectedAndForeignPeriodIgnored) {
  auto pub = KeyPair::from_seed("m").public_key();
  auto v = accepted(pub, 0, 4, 40, "a");
  auto r = v;
  r.accepted_work.reset();
  r.failed_step = 6;
  auto other = accepted(pub, 4, 4, 40, "b");
  other.period = 3;
  std::vector<BatchVerdict> vs{v, r, other};
  auto d = aggregate_distribution(vs, 2);
  EXPECT_EQ(d.work_of(pub), 40);
}

TEST(Aggregate, OverlapPolicy) {
  auto a = KeyPair::from_seed("a").public_key(), b = KeyPair::from_seed("b").public_key();
  std::vector<BatchVerdict> vs{accepted(a, 0, 10, 100, "a1"), accepted(a, 5, 10, 100, "a2"),
                               accepted(a, 20, 5, 50, "a3"), accepted(b, 0, 10, 100, "b1")};
  EXPECT_EQ(overlapping_miners(vs), (std::set<PublicKey>{a}));
  auto strict = aggregate_distribution(vs, 2, OverlapPolicy::reject_miner);
  EXPECT_EQ(strict.work_of(a), 0);
  EXPECT_EQ(strict.work_of(b), 100);
  auto lenient = aggregate_distribution(vs, 2, OverlapPolicy::keep_disjoint);
  EXPECT_EQ(lenient.work_of(a), 150);
}

TEST(Aggregate, AdjacentRangesDoNotOverlap) {
  auto a = KeyPair::from_seed("a").public_key();
  std::vector<BatchVerdict> vs{accepted(a, 0, 10, 100, "x"), accepted(a, 10, 10, 100, "y")};
  EXPECT_TRUE(overlapping_miners(vs).empty());
  EXPECT_EQ(aggregate_distribution(vs, 2).work_of(a), 200);
}

TEST(Cheating, ExpectedRewardEndpoints) {
  EXPECT_EQ(expected_reward_under_cheating(10, 0), 10);
  EXPECT_EQ(expected_reward_under_cheating(10, 1), 0);
  EXPECT_EQ(expected_reward_under_cheating(10, Rational(1, 5)), 8);
  EXPECT_THROW(expected_reward_under_cheating(10, Rational(3, 2)), Error);
}
