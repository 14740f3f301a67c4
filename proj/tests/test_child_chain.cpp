#include <gtest/gtest.h>

#include "fiberpool/child_chain.hpp"

using namespace fiberpool;

namespace {

struct Pool {
  std::vector<KeyPair> keys;
  PowDistribution dist;
  ContractState contract;
  ChildChain child;

  explicit Pool(std::vector<int> works, std::uint64_t period = 4, Amount reward = 1) : dist(period) {
    for (std::size_t i = 0; i < works.size(); ++i) {
      keys.push_back(KeyPair::from_seed("c" + std::to_string(i)));
      dist.add(keys.back().public_key(), works[i]);
    }
    contract.submit_linking_tx(reward, dist.commitment(), period + 2);
  }

  const Deposit& deposit() { return child.register_deposit(contract, contract.links().size() - 1, dist); }

  Credit claim(std::uint64_t dep, std::size_t i) {
    const auto& pub = keys[i].public_key();
    Work w = dist.work_of(pub);
    return child.claim(dep, pub, w, dist.opening(pub), keys[i].sign(claim_message(dep, pub, w)));
  }
};

}  // namespace

TEST(Claim, ProportionalSlice) {
  Pool s({1, 3});
  auto& d = s.deposit();
  EXPECT_EQ(s.claim(d.id, 0).amount, Rational(1, 4));
  EXPECT_EQ(s.child.balance_of(s.keys[0].public_key()), Rational(1, 4));
}

TEST(Claim, DoubleClaimRejected) {
  Pool s({1, 3});
  auto id = s.deposit().id;
  s.claim(id, 0);
  EXPECT_THROW(s.claim(id, 0), Error);
}

TEST(Claim, BadOpeningRejected) {
  Pool s({1, 3, 5});
  auto id = s.deposit().id;
  const auto& pub = s.keys[0].public_key();
  Work inflated = 2;
  EXPECT_THROW(s.child.claim(id, pub, inflated, s.dist.opening(pub), s.keys[0].sign(claim_message(id, pub, inflated))),
               Error);
  auto other = s.dist.opening(s.keys[1].public_key());
  EXPECT_THROW(s.child.claim(id, pub, 1, other, s.keys[0].sign(claim_message(id, pub, 1))), Error);
}

TEST(Claim, OutsiderCannotClaim) {
  Pool s({1, 3});
  auto id = s.deposit().id;
  auto outsider = KeyPair::from_seed("outsider");
  auto opening = s.dist.opening(s.keys[0].public_key());
  EXPECT_THROW(
      s.child.claim(id, outsider.public_key(), 1, opening, outsider.sign(claim_message(id, outsider.public_key(), 1))),
      Error);
}

TEST(Claim, BadSignatureRejected) {
  Pool s({1, 3});
  auto id = s.deposit().id;
  const auto& pub = s.keys[0].public_key();
  auto forged = s.keys[1].sign(claim_message(id, pub, 1));
  EXPECT_THROW(s.child.claim(id, pub, 1, s.dist.opening(pub), forged), Error);
  auto wrong_deposit = s.keys[0].sign(claim_message(id + 1, pub, 1));
  EXPECT_THROW(s.child.claim(id, pub, 1, s.dist.opening(pub), wrong_deposit), Error);
}

TEST(Claim, ClaimsSumToDepositAmount) {
  Pool s({1, 2, 3, 5, 7}, 4, Rational(25, 4));
  auto id = s.deposit().id;
  Amount sum = 0;
  for (std::size_t i = 0; i < 5; ++i) sum += s.claim(id, i).amount;
  EXPECT_EQ(sum, Rational(25, 4));
  EXPECT_EQ(s.child.deposit(id).remainder(), 0);
  EXPECT_EQ(s.child.supply(), Rational(25, 4));
}

TEST(Deposit, Preconditions) {
  Pool s({1});
  ContractState fresh;
  PowDistribution empty(0);
  fresh.submit_linking_tx(1, empty.commitment());
  EXPECT_THROW(s.child.register_deposit(fresh, 0, empty), Error);

  PowDistribution other(4);
  other.add(KeyPair::from_seed("z").public_key(), 1);
  EXPECT_THROW(s.child.register_deposit(s.contract, 0, other), Error);
  s.deposit();
  EXPECT_THROW(s.deposit(), Error);

  // invalidated link: claims 5 with 1 received
  ContractState c;
  c.submit_linking_tx(5, s.dist.commitment(), 0, Amount(1));
  EXPECT_THROW(s.child.register_deposit(c, 0, s.dist), Error);
}

TEST(Exit, ThreeDepositsOneWithdrawal) {
  std::vector<KeyPair> keys{KeyPair::from_seed("me")};
  ContractState contract;
  ChildChain child;
  for (std::uint64_t p = 10; p < 13; ++p) {
    PowDistribution d(p);
    d.add(keys[0].public_key(), 1);
    auto link = contract.submit_linking_tx(1, d.commitment(), p + 2);
    auto& dep = child.register_deposit(contract, link, d);
    child.claim(dep.id, keys[0].public_key(), 1, d.opening(keys[0].public_key()),
                keys[0].sign(claim_message(dep.id, keys[0].public_key(), 1)));
  }
  auto t = child.withdraw_aggregate(keys[0].public_key(), contract, 14);
  EXPECT_EQ(t.amount, 3);
  EXPECT_EQ(t.priority_period, 7);
  EXPECT_EQ(contract.withdrawal_count(), 1u);
  EXPECT_EQ(contract.total_withdrawn(), 3);
  EXPECT_EQ(child.balance_of(keys[0].public_key()), 0);
  EXPECT_THROW(child.withdraw_aggregate(keys[0].public_key(), contract, 15), Error);
}

TEST(Exit, QueueOrdersByPriorityThenSubmission) {
  ContractState contract;
  ChildChain child;
  auto a = KeyPair::from_seed("a"), b = KeyPair::from_seed("b"), c = KeyPair::from_seed("c");
  auto fund = [&](const KeyPair& k, std::uint64_t period) {
    PowDistribution d(period);
    d.add(k.public_key(), 1);
    auto link = contract.submit_linking_tx(1, d.commitment(), period + 2);
    auto& dep = child.register_deposit(contract, link, d);
    child.claim(dep.id, k.public_key(), 1, d.opening(k.public_key()), k.sign(claim_message(dep.id, k.public_key(), 1)));
  };
  fund(a, 20);
  fund(b, 10);
  fund(c, 20);
  child.withdraw_aggregate(a.public_key(), contract, 25);
  child.withdraw_aggregate(b.public_key(), contract, 25);
  child.withdraw_aggregate(c.public_key(), contract, 25);
  auto q = child.exit_queue();
  ASSERT_EQ(q.size(), 3u);
  EXPECT_EQ(q[0].pubkey, b.public_key());
  EXPECT_EQ(q[1].pubkey, a.public_key());
  EXPECT_EQ(q[2].pubkey, c.public_key());
}

TEST(Transfer, MovesFunds) {
  Pool s({1, 1});
  auto id = s.deposit().id;
  s.claim(id, 0);
  auto from = s.keys[0].public_key(), to = s.keys[1].public_key();
  s.child.transfer(from, to, Rational(1, 4));
  EXPECT_EQ(s.child.balance_of(from), Rational(1, 4));
  EXPECT_EQ(s.child.balance_of(to), Rational(1, 4));
  s.child.transfer(from, to, 0);
  EXPECT_THROW(s.child.transfer(from, to, 1), Error);
  EXPECT_THROW(s.child.transfer(from, to, -1), Error);
  EXPECT_EQ(s.child.supply(), 1);
}

TEST(Transfer, ReceivedFundsExitWithoutPriority) {
  Pool s({1, 1});
  auto id = s.deposit().id;
  s.claim(id, 0);
  auto outsider = KeyPair::from_seed("shop").public_key();
  s.child.transfer(s.keys[0].public_key(), outsider, Rational(1, 2));
  ContractState& c = s.contract;
  auto t = s.child.withdraw_aggregate(outsider, c, 9);
  EXPECT_EQ(t.priority_period, 9);
}
