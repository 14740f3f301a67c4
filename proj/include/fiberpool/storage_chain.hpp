#pragma once

// Timestamped append-only chain carrying batches and challenge openings.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <variant>
#include <vector>

#include "fiberpool/crypto.hpp"
#include "fiberpool/protocol.hpp"

namespace fiberpool {

using StorageEntry = std::variant<Batch, ShareProof>;

struct StorageBlock {
  std::uint64_t height = 0;
  double timestamp = 0.0;
  Digest prev_beacon;
  std::vector<StorageEntry> payload;
  Digest beacon;  // hash of the serialized block
};

// An entry together with the storage height it was included at.
template <class T>
struct Posted {
  T entry;
  std::uint64_t height = 0;
};

struct PrepareBoundary {
  std::uint64_t period = 0;
  std::optional<std::uint64_t> storage_height;  // nullopt: boundary still open

  bool admits(std::uint64_t height) const { return !storage_height || height < *storage_height; }
};

inline Digest storage_block_hash(const StorageBlock& b) {
  ByteWriter w;
  w.text("fiberpool/storage-block").u64(b.height).f64(b.timestamp) << b.prev_beacon;
  w.u32(static_cast<std::uint32_t>(b.payload.size()));
  for (const auto& e : b.payload) {
    if (const auto* batch = std::get_if<Batch>(&e)) {
      w.u8(0) << batch->id();
    } else {
      w.u8(1) << std::get<ShareProof>(e).id();
    }
  }
  return hash(w.data());
}

// Challenge index for slot `slot` of a batch: the beacon of the storage block
// after the batch, mixed with the batch root, scaled onto [0, share_count).
inline std::size_t challenge_index_from(const Digest& beacon, const Digest& merkle_root, std::uint64_t share_count,
                                        std::uint32_t slot = 0) {
  if (share_count == 0) throw Error("batch must contain at least one share");
  ByteWriter w;
  w << beacon << merkle_root;
  if (slot > 0) w.u32(slot);
  Digest mixed = hash(w.data());
  unsigned __int128 scaled = static_cast<unsigned __int128>(ShareTarget::leading_u64(mixed)) * share_count;
  return static_cast<std::size_t>(scaled >> 64);
}

class StorageChain {
 public:
  const std::vector<StorageBlock>& blocks() const { return blocks_; }
  std::size_t size() const { return blocks_.size(); }
  bool empty() const { return blocks_.empty(); }
  const StorageBlock& at(std::uint64_t height) const { return blocks_.at(height); }
  double last_timestamp() const { return blocks_.empty() ? -1.0 : blocks_.back().timestamp; }

  const StorageBlock& append(std::vector<StorageEntry> entries, double timestamp) {
    if (!blocks_.empty() && !(timestamp > blocks_.back().timestamp))
      throw Error("storage block timestamp must increase");
    StorageBlock b;
    b.height = blocks_.size();
    b.timestamp = timestamp;
    b.prev_beacon = blocks_.empty() ? hash("fiberpool/storage-genesis") : blocks_.back().beacon;
    b.payload = std::move(entries);
    b.beacon = storage_block_hash(b);
    for (std::size_t i = 0; i < b.payload.size(); ++i) {
      if (const auto* batch = std::get_if<Batch>(&b.payload[i])) {
        batches_by_period_[batch->period].push_back({b.height, i});
        batch_height_.emplace(batch->id(), b.height);
      } else {
        proofs_by_batch_[std::get<ShareProof>(b.payload[i]).batch_id].push_back({b.height, i});
      }
    }
    blocks_.push_back(std::move(b));
    return blocks_.back();
  }

  // First storage block whose timestamp strictly exceeds the timestamp of the
  // main-chain block opening the Prepare phase.
  PrepareBoundary prepare_boundary(std::uint64_t period, double main_prepare_start_timestamp) const {
    auto it = std::upper_bound(blocks_.begin(), blocks_.end(), main_prepare_start_timestamp,
                               [](double ts, const StorageBlock& b) { return ts < b.timestamp; });
    if (it == blocks_.end()) return {period, std::nullopt};
    return {period, static_cast<std::uint64_t>(it - blocks_.begin())};
  }

  std::optional<std::uint64_t> height_of(const Digest& batch_id) const {
    auto it = batch_height_.find(batch_id);
    if (it == batch_height_.end()) return std::nullopt;
    return it->second;
  }

  std::vector<Posted<Batch>> batches_for_period(std::uint64_t period) const {
    std::vector<Posted<Batch>> out;
    auto it = batches_by_period_.find(period);
    if (it == batches_by_period_.end()) return out;
    for (auto [h, i] : it->second) out.push_back({std::get<Batch>(blocks_[h].payload[i]), h});
    return out;
  }

  std::vector<Posted<ShareProof>> proofs_for(const Digest& batch_id) const {
    std::vector<Posted<ShareProof>> out;
    auto it = proofs_by_batch_.find(batch_id);
    if (it == proofs_by_batch_.end()) return out;
    for (auto [h, i] : it->second) out.push_back({std::get<ShareProof>(blocks_[h].payload[i]), h});
    return out;
  }

  // Beacon that fixes the challenges of a batch posted at `batch_height`.
  std::optional<Digest> challenge_beacon(std::uint64_t batch_height) const {
    if (batch_height + 1 >= blocks_.size()) return std::nullopt;
    return blocks_[batch_height + 1].beacon;
  }

 private:
  struct Loc {
    std::uint64_t height;
    std::size_t index;
  };
  std::vector<StorageBlock> blocks_;
  std::map<std::uint64_t, std::vector<Loc>> batches_by_period_;
  std::map<Digest, std::vector<Loc>> proofs_by_batch_;
  std::map<Digest, std::uint64_t> batch_height_;
};

inline std::size_t challenge_index(const Batch& batch, const StorageChain& chain, std::uint32_t slot = 0) {
  auto h = chain.height_of(batch.id());
  if (!h) throw Error("batch not on storage chain");
  auto beacon = chain.challenge_beacon(*h);
  if (!beacon) throw Error("challenge not yet available");
  return challenge_index_from(*beacon, batch.merkle_root, batch.share_count, slot);
}

}  // namespace fiberpool
