#pragma once

// Hand-built storage-chain situations for batch verification. `build_case`
// produces an honest batch for period 5 on a four-block storage chain
// (batch, beacon, opening, boundary) and applies one defect.

#include <optional>
#include <string>

#include "fiberpool/fiberpool.hpp"

namespace fixture {

using namespace fiberpool;

enum class Defect {
  none,
  late_batch,       // posted at the Prepare boundary
  wrong_index,      // opens a neighbour of the challenged share
  own_coinbase,     // shares pay the miner, not the contract
  wrong_dist,       // shares commit to a self-serving distribution
  target_mismatch,  // batch declares a different target than its shares
  invalid_pow,      // every share misses its target
  foreign_signature // batch signed with a different key
};

struct Case {
  KeyPair keys;
  StorageChain chain;
  VerificationContext ctx;
  SealedBatch sealed;
  Posted<Batch> posted;
  std::optional<BatchVerdict> verdict;  // always set
};

inline const PowDistribution& previous_distribution() {
  static const PowDistribution d = [] {
    PowDistribution x(3);
    x.add(KeyPair::from_seed("fixture/a").public_key(), 40);
    x.add(KeyPair::from_seed("fixture/b").public_key(), 120);
    return x;
  }();
  return d;
}

inline BlockTemplate honest_template(const KeyPair& kp, const ShareTarget& target) {
  BlockTemplate t;
  t.period = 5;
  t.coinbase_target = contract_address();
  t.reward = 1;
  t.dist_commit = previous_distribution().commitment();
  t.target = target;
  t.pubkey = kp.public_key();
  return t;
}

inline Case build_case(Defect defect, const std::string& miner = "fixture/miner", std::uint64_t share_count = 16) {
  KeyPair keys = KeyPair::from_seed(miner);
  const ShareTarget target = ShareTarget::from_fraction(1, 4);
  BlockTemplate t = honest_template(keys, target);
  if (defect == Defect::own_coinbase) t.coinbase_target = own_address(keys.public_key());
  if (defect == Defect::wrong_dist) {
    PowDistribution self(3);
    self.add(keys.public_key(), 1);
    t.dist_commit = self.commitment();
  }

  std::vector<Share> shares;
  if (defect == Defect::invalid_pow) {
    std::uint64_t nonce = 0;
    for (std::uint64_t i = 0; i < share_count; ++i) shares.push_back(grind_invalid_share(t, i, nonce));
  } else {
    shares = mine_until(t, share_count, 0).shares;
  }
  ShareTarget declared = defect == Defect::target_mismatch ? ShareTarget::from_fraction(1, 2) : target;
  SealedBatch sealed = seal_batch(keys, 5, declared, shares);
  if (defect == Defect::foreign_signature)
    sealed.batch.signature = KeyPair::from_seed("fixture/other").sign(sealed.batch.signing_message());

  StorageChain chain;
  chain.append({sealed.batch}, 1.0);
  chain.append({}, 2.0);  // beacon for the challenge
  std::size_t idx = challenge_index(sealed.batch, chain);
  if (defect == Defect::wrong_index) idx = (idx + 1) % sealed.shares.size();
  chain.append({open_share(keys, sealed, idx)}, 3.0);
  chain.append({}, 100.0);

  // Main-chain Prepare start: after the opening normally, before the batch
  // when it is late.
  double prepare_ts = defect == Defect::late_batch ? 0.5 : 50.0;
  VerificationContext ctx{5, chain.prepare_boundary(7, prepare_ts), previous_distribution().commitment(),
                          contract_address(), 1};
  Posted<Batch> posted = chain.batches_for_period(5).front();
  BatchVerdict verdict = verify_batch(chain, posted, ctx);
  Case c{keys, std::move(chain), ctx, std::move(sealed), posted, verdict};
  return c;
}

inline const char* name(Defect d) {
  switch (d) {
    case Defect::none: return "honest";
    case Defect::late_batch: return "late batch";
    case Defect::wrong_index: return "wrong challenge index";
    case Defect::own_coinbase: return "coinbase to own address";
    case Defect::wrong_dist: return "self-serving distribution";
    case Defect::target_mismatch: return "batch/share target mismatch";
    case Defect::invalid_pow: return "invalid PoW";
    case Defect::foreign_signature: return "foreign signature";
  }
  return "?";
}

}  // namespace fixture
