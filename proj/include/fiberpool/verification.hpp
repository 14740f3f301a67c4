#pragma once

// Local, deterministic verification of one period's storage-chain data.
//
// Each batch runs seven ordered checks; the first failing check decides the
// verdict:
//   1  batch and every challenge opening sit strictly before the Prepare boundary
//   2  opening is at the challenged index (Merkle position, share counter, beacon)
//   3  share pays the contract
//   4  share commits to the distribution of period - 2
//   5  batch target equals share target
//   6  share meets its target
//   7  batch and opening signatures verify under the share's pubkey

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "fiberpool/protocol.hpp"
#include "fiberpool/storage_chain.hpp"

namespace fiberpool {

struct VerificationContext {
  std::uint64_t period = 0;              // period whose shares are verified
  PrepareBoundary boundary;              // boundary of the Prepare phase before period + 2
  Digest expected_dist_commit;           // commitment of period - 2
  Digest contract_address;
  std::uint32_t challenges = 1;          // openings required per batch
};

enum class VerifyStep : int {
  submission_deadline = 1,
  merkle_position = 2,
  coinbase_target = 3,
  distribution_link = 4,
  target_match = 5,
  proof_of_work = 6,
  signatures = 7,
};

struct BatchVerdict {
  Digest batch_id;
  PublicKey pubkey;
  std::uint64_t period = 0;
  std::uint64_t first_counter = 0;
  std::uint64_t share_count = 0;
  std::optional<Work> accepted_work;  // N/D when accepted
  int failed_step = 0;                // 1..7 when rejected
  std::string reason;

  bool accepted() const { return accepted_work.has_value(); }
};

namespace detail {
inline BatchVerdict verdict_base(const Batch& b) {
  return {b.id(), b.pubkey, b.period, b.first_counter, b.share_count, std::nullopt, 0, {}};
}

inline BatchVerdict reject(BatchVerdict v, VerifyStep step, std::string reason) {
  v.failed_step = static_cast<int>(step);
  v.reason = std::move(reason);
  return v;
}
}  // namespace detail

inline BatchVerdict verify_batch(const StorageChain& chain, const Posted<Batch>& posted,
                                 std::span<const Posted<ShareProof>> proofs, const VerificationContext& ctx) {
  const Batch& batch = posted.entry;
  BatchVerdict v = detail::verdict_base(batch);
  const Digest id = v.batch_id;

  // 1. Deadline, and one opening per challenge slot (earliest wins).
  if (!ctx.boundary.admits(posted.height))
    return detail::reject(v, VerifyStep::submission_deadline, "batch posted at or after the Prepare boundary");
  std::vector<const Posted<ShareProof>*> openings(ctx.challenges, nullptr);
  for (const auto& p : proofs) {
    if (p.entry.batch_id != id || p.entry.slot >= ctx.challenges) continue;
    if (p.height <= posted.height || !ctx.boundary.admits(p.height)) continue;
    auto& slot = openings[p.entry.slot];
    if (!slot || p.height < slot->height) slot = &p;
  }
  for (const auto* o : openings)
    if (!o) return detail::reject(v, VerifyStep::submission_deadline, "challenge not answered before the Prepare boundary");
  auto beacon = chain.challenge_beacon(posted.height);
  if (!beacon) return detail::reject(v, VerifyStep::submission_deadline, "challenge not yet available");

  // 2. Position binding.
  for (const auto* o : openings) {
    const ShareProof& p = o->entry;
    std::size_t idx = challenge_index_from(*beacon, batch.merkle_root, batch.share_count, p.slot);
    if (p.merkle_proof.leaf_index != idx)
      return detail::reject(v, VerifyStep::merkle_position, "opening is not at the challenged index");
    if (p.challenged_share.header.counter != batch.first_counter + idx)
      return detail::reject(v, VerifyStep::merkle_position, "share counter does not match its position");
    if (!merkle_verify(batch.merkle_root, share_leaf(p.challenged_share), p.merkle_proof, batch.share_count))
      return detail::reject(v, VerifyStep::merkle_position, "Merkle opening does not reach the batch root");
  }
  // 3.
  for (const auto* o : openings)
    if (o->entry.challenged_share.header.coinbase_target != ctx.contract_address)
      return detail::reject(v, VerifyStep::coinbase_target, "share coinbase does not pay the contract");
  // 4.
  for (const auto* o : openings) {
    const auto& h = o->entry.challenged_share.header;
    if (h.dist_commit != ctx.expected_dist_commit || h.period != ctx.period || batch.period != ctx.period)
      return detail::reject(v, VerifyStep::distribution_link, "share not linked to the period - 2 distribution");
  }
  // 5.
  for (const auto* o : openings)
    if (o->entry.challenged_share.header.target != batch.target)
      return detail::reject(v, VerifyStep::target_match, "batch target differs from share target");
  // 6.
  for (const auto* o : openings) {
    const Share& s = o->entry.challenged_share;
    if (s.pow_value != share_leaf(s) || !check_pow(s))
      return detail::reject(v, VerifyStep::proof_of_work, "share does not meet its target");
  }
  // 7.
  for (const auto* o : openings) {
    const PublicKey& owner = o->entry.challenged_share.header.pubkey;
    if (batch.pubkey != owner || !verify_signature(owner, batch.signing_message(), batch.signature) ||
        !verify_signature(owner, o->entry.signing_message(), o->entry.signature))
      return detail::reject(v, VerifyStep::signatures, "signature does not match the share's pubkey");
  }

  v.accepted_work = batch_work(batch);
  return v;
}

inline BatchVerdict verify_batch(const StorageChain& chain, const Posted<Batch>& posted,
                                 const VerificationContext& ctx) {
  auto proofs = chain.proofs_for(posted.entry.id());
  return verify_batch(chain, posted, proofs, ctx);
}

// Verdicts for every batch of ctx.period, in chain order.
inline std::vector<BatchVerdict> verify_period(const StorageChain& chain, const VerificationContext& ctx) {
  std::vector<BatchVerdict> out;
  for (const auto& posted : chain.batches_for_period(ctx.period)) out.push_back(verify_batch(chain, posted, ctx));
  return out;
}

// What to do when a miner's accepted batches claim overlapping counters.
enum class OverlapPolicy {
  reject_miner,  // drop every batch of that miner for the period
  keep_disjoint, // keep a greedy disjoint subset ordered by (first_counter, batch id)
};

// Pubkeys whose accepted batches overlap in counter range.
inline std::set<PublicKey> overlapping_miners(std::span<const BatchVerdict> verdicts) {
  std::map<PublicKey, std::vector<std::pair<std::uint64_t, std::uint64_t>>> ranges;
  for (const auto& v : verdicts)
    if (v.accepted()) ranges[v.pubkey].push_back({v.first_counter, v.first_counter + v.share_count});
  std::set<PublicKey> out;
  for (auto& [pub, rs] : ranges) {
    std::sort(rs.begin(), rs.end());
    for (std::size_t i = 1; i < rs.size(); ++i)
      if (rs[i].first < rs[i - 1].second) out.insert(pub);
  }
  return out;
}

// Sums accepted work per pubkey. Result does not depend on verdict order.
inline PowDistribution aggregate_distribution(std::span<const BatchVerdict> verdicts, std::uint64_t period,
                                              OverlapPolicy policy = OverlapPolicy::reject_miner) {
  std::map<PublicKey, std::vector<const BatchVerdict*>> by_miner;
  for (const auto& v : verdicts)
    if (v.accepted() && v.period == period) by_miner[v.pubkey].push_back(&v);

  PowDistribution dist(period);
  for (auto& [pub, vs] : by_miner) {
    std::sort(vs.begin(), vs.end(), [](const BatchVerdict* a, const BatchVerdict* b) {
      return std::tie(a->first_counter, a->batch_id) < std::tie(b->first_counter, b->batch_id);
    });
    std::vector<const BatchVerdict*> kept;
    bool overlap = false;
    std::uint64_t covered_to = 0;
    for (const auto* v : vs) {
      if (!kept.empty() && v->first_counter < covered_to) {
        overlap = true;
        continue;
      }
      kept.push_back(v);
      covered_to = v->first_counter + v->share_count;
    }
    if (overlap && policy == OverlapPolicy::reject_miner) continue;
    Work total = 0;
    for (const auto* v : kept) total += *v->accepted_work;
    if (total > 0) dist.add(pub, total);
  }
  return dist;
}

// Expected payout of a batch worth `reward` when a fraction f of its shares
// are invalid and one uniformly chosen share is checked.
inline Amount expected_reward_under_cheating(const Amount& reward, const Rational& invalid_fraction) {
  if (invalid_fraction < 0 || invalid_fraction > 1) throw Error("invalid fraction must lie in [0, 1]");
  return reward * (1 - invalid_fraction) + 0 * invalid_fraction;
}

}  // namespace fiberpool
