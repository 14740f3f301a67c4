#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

#include "fiberpool/protocol.hpp"
#include "oracles.hpp"

using namespace fiberpool;

namespace {

Digest digest_from(std::mt19937_64& rng) { return hash(std::to_string(rng()) + "/" + std::to_string(rng())); }

BlockTemplate make_template(const ShareTarget& target, const std::string& who = "miner") {
  BlockTemplate t;
  t.period = 3;
  t.coinbase_target = hash("contract");
  t.reward = 1;
  t.dist_commit = empty_distribution_commitment();
  t.target = target;
  t.pubkey = KeyPair::from_seed(who).public_key();
  return t;
}

PublicKey pk(int i) { return KeyPair::from_seed("k" + std::to_string(i)).public_key(); }

}  // namespace

TEST(Normalized, MeanIsOneHalf) {
  std::mt19937_64 rng(1);
  double sum = 0;
  for (int i = 0; i < 100000; ++i) sum += normalized(digest_from(rng));
  EXPECT_NEAR(sum / 100000, 0.5, 0.01);
}

TEST(Normalized, ZeroAndMaxDigests) {
  Digest zero{};
  EXPECT_EQ(normalized(zero), 0.0);
  Digest max;
  max.bytes.fill(0xff);
  EXPECT_LT(normalized(max), 1.0);
  EXPECT_LT(normalized_exact(max), 1);
}

TEST(Normalized, AgreesWithReference) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 1000; ++i) {
    auto d = digest_from(rng);
    EXPECT_NEAR(normalized(d), static_cast<double>(oracle::fraction_of(d)), 1e-15);
  }
}

TEST(ShareTarget, OneAcceptsEverything) {
  auto t = ShareTarget::from_fraction(1, 1);
  Digest max;
  max.bytes.fill(0xff);
  EXPECT_TRUE(t.admits(max));
  std::mt19937_64 rng(3);
  for (int i = 0; i < 1000; ++i) EXPECT_TRUE(t.admits(digest_from(rng)));
}

TEST(ShareTarget, OutOfRangeThrows) {
  EXPECT_THROW(ShareTarget::from_fraction(0, 1), Error);
  EXPECT_THROW(ShareTarget::from_fraction(3, 2), Error);
  EXPECT_THROW(ShareTarget::from_rational(Rational(0)), Error);
  EXPECT_THROW(ShareTarget::from_rational(Rational(-1, 4)), Error);
}

TEST(ShareTarget, ReducesFraction) {
  auto t = ShareTarget::from_fraction(5, 100);
  EXPECT_EQ(t.num(), 1u);
  EXPECT_EQ(t.den(), 20u);
  EXPECT_EQ(t.work_per_share(), 20);
}

TEST(ShareTarget, AdmitsMatchesExactComparison) {
  std::mt19937_64 rng(4);
  for (auto [n, d] : {std::pair{1, 100}, {1, 3}, {7, 9}, {1, 2}}) {
    auto t = ShareTarget::from_fraction(n, d);
    for (int i = 0; i < 2000; ++i) {
      auto dg = digest_from(rng);
      long double f = oracle::fraction_of(dg);
      long double target = static_cast<long double>(n) / d;
      if (std::abs(f - target) < 1e-15L) continue;
      EXPECT_EQ(t.admits(dg), f <= target);
    }
  }
}

TEST(ShareTarget, AcceptanceRateAtOnePercent) {
  auto t = ShareTarget::from_fraction(1, 100);
  std::mt19937_64 rng(5);
  const int n = 100000;
  int hits = 0;
  for (int i = 0; i < n; ++i) hits += t.admits(digest_from(rng));
  double sigma = oracle::binomial_sigma(n, 0.01);
  EXPECT_NEAR(hits, n * 0.01, 3 * sigma);
}

TEST(BatchWork, Examples) {
  Batch b;
  b.target = ShareTarget::from_fraction(1, 100);
  b.share_count = 100;
  EXPECT_EQ(batch_work(b), 10000);
  b.target = ShareTarget::from_fraction(1, 1);
  b.share_count = 1;
  EXPECT_EQ(batch_work(b), 1);
  b.share_count = 0;
  EXPECT_THROW(batch_work(b), Error);
}

TEST(BatchWork, AdditiveInShareCount) {
  auto t = ShareTarget::from_fraction(3, 7);
  for (std::uint64_t a = 1; a < 20; ++a)
    for (std::uint64_t b = 1; b < 20; ++b) {
      Batch x, y, z;
      x.target = y.target = z.target = t;
      x.share_count = a, y.share_count = b, z.share_count = a + b;
      EXPECT_EQ(batch_work(x) + batch_work(y), batch_work(z));
    }
}

TEST(Commitment, IndependentOfInsertionOrder) {
  std::vector<std::pair<PublicKey, Work>> entries{{pk(1), 5}, {pk(2), Rational(7, 3)}, {pk(3), 1}, {pk(4), 12}};
  PowDistribution a(4), b(4);
  for (auto& [p, w] : entries) a.add(p, w);
  std::reverse(entries.begin(), entries.end());
  for (auto& [p, w] : entries) b.add(p, w);
  EXPECT_EQ(a.commitment(), b.commitment());
}

TEST(Commitment, ChangesWhenAnyWorkChanges) {
  for (int n = 1; n <= 4; ++n) {
    PowDistribution base(0);
    for (int i = 0; i < n; ++i) base.add(pk(i), i + 1);
    for (int j = 0; j < n; ++j) {
      PowDistribution changed(0);
      for (int i = 0; i < n; ++i) changed.add(pk(i), i == j ? Work(i + 1) + Rational(1, 1000) : Work(i + 1));
      EXPECT_NE(base.commitment(), changed.commitment()) << n << "/" << j;
    }
  }
}

TEST(Commitment, EmptyPeriodSentinel) {
  PowDistribution empty(9);
  EXPECT_EQ(empty.commitment(), empty_distribution_commitment());
  PowDistribution one(9);
  one.add(pk(0), 1);
  EXPECT_NE(one.commitment(), empty_distribution_commitment());
  EXPECT_THROW(empty.tree(), Error);
}

TEST(Commitment, InjectiveOverRandomDistributions) {
  std::mt19937_64 rng(6);
  std::set<Digest> commits;
  std::set<std::map<PublicKey, Work>> distinct;
  for (int i = 0; i < 10000; ++i) {
    PowDistribution d(0);
    int n = 1 + static_cast<int>(rng() % 4);
    for (int k = 0; k < n; ++k) d.add(pk(static_cast<int>(rng() % 8)), Work(static_cast<long>(1 + rng() % 50)));
    if (!distinct.insert(d.entries()).second) continue;
    EXPECT_TRUE(commits.insert(d.commitment()).second);
  }
  EXPECT_EQ(commits.size(), distinct.size());
}

TEST(Commitment, OpeningVerifiesAgainstCommitment) {
  PowDistribution d(0);
  for (int i = 0; i < 5; ++i) d.add(pk(i), i + 1);
  for (int i = 0; i < 5; ++i)
    EXPECT_TRUE(merkle_verify(d.commitment(), PowDistribution::entry_leaf(pk(i), i + 1), d.opening(pk(i)), 5));
  EXPECT_THROW(d.opening(pk(7)), Error);
  EXPECT_THROW(d.add(pk(0), 0), Error);
}

TEST(ShareHeader, FixedLayout) {
  auto t = make_template(ShareTarget::from_fraction(1, 20));
  auto h = header_for(t, 0x0102030405060708ull, 0x1112131415161718ull);
  auto enc = encode(h);
  EXPECT_EQ(enc.size(), 137u);
  EXPECT_EQ(enc[0], 0x48);
  EXPECT_EQ(enc[kCounterOffset], 0x01);
  EXPECT_EQ(enc[kCounterOffset + 7], 0x08);
  EXPECT_EQ(enc[kNonceOffset], 0x11);
  EXPECT_EQ(enc[136], 0x18);
}

TEST(Mining, ZeroBudgetFindsNothing) {
  auto res = mine_shares(make_template(ShareTarget::from_fraction(1, 2)), 0, 0);
  EXPECT_TRUE(res.shares.empty());
  EXPECT_EQ(res.hashes, 0u);
}

TEST(Mining, SharesAreValidWithContiguousCounters) {
  auto t = make_template(ShareTarget::from_fraction(1, 10));
  auto res = mine_shares(t, 5000, 77, 3);
  ASSERT_FALSE(res.shares.empty());
  for (std::size_t i = 0; i < res.shares.size(); ++i) {
    const auto& s = res.shares[i];
    EXPECT_EQ(s.header.counter, 3 + i);
    EXPECT_EQ(s.pow_value, share_leaf(s));
    EXPECT_EQ(s.pow_value, seal(s.header).pow_value);
    EXPECT_TRUE(check_pow(s));
  }
  EXPECT_EQ(res.next_nonce, 5077u);
}

TEST(Mining, MeanShareCountIsBudgetTimesTarget) {
  auto t = make_template(ShareTarget::from_fraction(1, 20));
  const std::uint64_t budget = 1000;
  const int runs = 100;
  std::uint64_t total = 0, nonce = 0;
  for (int r = 0; r < runs; ++r) {
    auto res = mine_shares(t, budget, nonce);
    nonce = res.next_nonce;
    total += res.shares.size();
  }
  double sigma = oracle::binomial_sigma(budget * runs, 0.05);
  EXPECT_NEAR(static_cast<double>(total), budget * runs * 0.05, 3 * sigma);
}

TEST(Mining, MineUntilHitsExactCount) {
  auto t = make_template(ShareTarget::from_fraction(1, 8));
  auto res = mine_until(t, 25, 0, 10);
  ASSERT_EQ(res.shares.size(), 25u);
  EXPECT_EQ(res.shares.back().header.counter, 34u);
  for (const auto& s : res.shares) EXPECT_TRUE(check_pow(s));
}

TEST(Mining, InvalidShareMissesTarget) {
  auto t = make_template(ShareTarget::from_fraction(1, 2));
  std::uint64_t nonce = 0;
  for (int i = 0; i < 50; ++i) {
    auto s = grind_invalid_share(t, static_cast<std::uint64_t>(i), nonce);
    EXPECT_FALSE(check_pow(s));
    EXPECT_EQ(s.header.counter, static_cast<std::uint64_t>(i));
  }
  EXPECT_THROW(grind_invalid_share(make_template(ShareTarget::from_fraction(1, 1)), 0, nonce), Error);
}

TEST(SealBatch, RootCoversSharesInOrder) {
  auto kp = KeyPair::from_seed("miner");
  auto t = make_template(ShareTarget::from_fraction(1, 4));
  auto shares = mine_until(t, 7, 0).shares;
  auto sealed = seal_batch(kp, 3, t.target, shares);
  std::vector<Digest> leaves;
  for (const auto& s : shares) leaves.push_back(share_leaf(s));
  EXPECT_EQ(sealed.batch.merkle_root, oracle::merkle_root(leaves));
  EXPECT_EQ(sealed.batch.share_count, 7u);
  EXPECT_TRUE(verify_signature(kp.public_key(), sealed.batch.signing_message(), sealed.batch.signature));
  auto proof = open_share(kp, sealed, 4);
  EXPECT_EQ(proof.batch_id, sealed.batch.id());
  EXPECT_EQ(proof.challenged_share, shares[4]);
  EXPECT_TRUE(merkle_verify(sealed.batch.merkle_root, share_leaf(shares[4]), proof.merkle_proof, 7));
  EXPECT_THROW(seal_batch(kp, 3, t.target, {}), Error);
}
