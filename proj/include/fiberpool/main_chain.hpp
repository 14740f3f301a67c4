#pragma once

// Simulated main chain: producer lottery, period geometry, and the pool's
// smart-contract ledger with deferred next-user settlement of linking
// transactions.

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "fiberpool/amount.hpp"
#include "fiberpool/crypto.hpp"
#include "fiberpool/protocol.hpp"

namespace fiberpool {

inline std::uint64_t period_of(std::uint64_t height, const PeriodConfig& cfg) { return height / cfg.period_len; }

inline bool in_prepare(std::uint64_t height, const PeriodConfig& cfg) {
  return height % cfg.period_len >= cfg.period_len - cfg.prepare_len;
}

// Height of the main-chain block that opens the Prepare phase preceding
// `period` (i.e. the tail of period - 1). Data for period - 2 must reach the
// storage chain before this block's timestamp.
inline std::uint64_t prepare_start_height(std::uint64_t period, const PeriodConfig& cfg) {
  if (period == 0) throw Error("period 0 has no preceding Prepare phase");
  return period * cfg.period_len - cfg.prepare_len;
}

inline Digest contract_address() { return hash("fiberpool/contract"); }

inline Digest own_address(const PublicKey& pub) {
  ByteWriter w;
  w.text("fiberpool/address") << pub;
  return hash(w.data());
}

struct RewardConfig {
  Amount block_reward = 1;
  void validate() const {
    if (block_reward <= 0) throw Error("block_reward must be positive");
  }
};

struct LinkPayload {
  Amount amount;
  Digest dist_commit;
  std::uint64_t period = 0;  // template period of the block
};

struct MainBlock {
  std::uint64_t height = 0;
  double timestamp = 0.0;
  PublicKey producer;
  Digest coinbase_target;
  std::optional<LinkPayload> link;  // present exactly for pool blocks

  bool pays_contract() const { return link.has_value(); }
};

struct Producer {
  PublicKey pubkey;
  double fraction = 0.0;
  std::optional<BlockTemplate> pool_template;  // set while the producer mines for the pool
};

inline MainBlock make_block(std::uint64_t height, double timestamp, const Producer& p) {
  MainBlock b{height, timestamp, p.pubkey, own_address(p.pubkey), std::nullopt};
  if (p.pool_template) {
    b.coinbase_target = p.pool_template->coinbase_target;
    b.link = LinkPayload{p.pool_template->reward, p.pool_template->dist_commit, p.pool_template->period};
  }
  return b;
}

inline std::size_t sample_producer(std::mt19937_64& rng, std::span<const Producer> producers) {
  if (producers.empty()) throw Error("no producers");
  double sum = 0.0;
  for (const auto& p : producers) sum += p.fraction;
  if (std::abs(sum - 1.0) > 1e-9) throw Error("producer fractions must sum to 1");
  double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double acc = 0.0;
  for (std::size_t i = 0; i < producers.size(); ++i) {
    acc += producers[i].fraction;
    if (u < acc) return i;
  }
  for (std::size_t i = producers.size(); i-- > 0;)
    if (producers[i].fraction > 0) return i;
  return producers.size() - 1;
}

// Exponential inter-block time with mean `block_interval`: the whole network
// finds blocks at rate 1/T, a miner with fraction a at rate a/T.
inline double sample_block_gap(std::mt19937_64& rng, double block_interval) {
  return std::exponential_distribution<double>(1.0 / block_interval)(rng);
}

inline MainBlock produce_block(std::uint64_t height, double prev_timestamp, std::mt19937_64& rng,
                               std::span<const Producer> producers, double block_interval) {
  std::size_t who = sample_producer(rng, producers);
  double ts = prev_timestamp + sample_block_gap(rng, block_interval);
  return make_block(height, ts, producers[who]);
}

// ---------------------------------------------------------------------------
// Contract ledger

enum class LinkStatus { pending, validated, invalidated };

struct LinkingTx {
  std::uint64_t id = 0;
  Amount amount;    // reward the transaction claims to link
  Amount credited;  // coinbase actually paid to the contract by its block
  Digest dist_commit;
  std::uint64_t period = 0;
  LinkStatus status = LinkStatus::pending;
};

class ContractState {
 public:
  explicit ContractState(Digest address = contract_address()) : address_(address) {}

  const Digest& address() const { return address_; }
  const Amount& balance() const { return balance_; }
  const Amount& total_withdrawn() const { return total_withdrawn_; }
  const Amount& validated_total() const { return validated_total_; }
  const std::vector<LinkingTx>& links() const { return links_; }
  const LinkingTx& link(std::size_t id) const { return links_.at(id); }
  std::size_t withdrawal_count() const { return withdrawals_; }

  std::size_t pending_count() const { return links_.size() - next_pending_; }

  // Appends a pending link. The block's coinbase (`coinbase`, defaulting to
  // `amount`) is credited in the same step.
  std::size_t submit_linking_tx(const Amount& amount, const Digest& dist_commit, std::uint64_t period = 0,
                                std::optional<Amount> coinbase = std::nullopt) {
    if (amount <= 0) throw Error("linking requires positive reward");
    Amount credit = coinbase.value_or(amount);
    if (credit < 0) throw Error("coinbase credit cannot be negative");
    balance_ += credit;
    std::size_t id = links_.size();
    links_.push_back({id, amount, credit, dist_commit, period, LinkStatus::pending});
    return id;
  }

  struct Settlement {
    std::vector<std::size_t> validated;
    std::vector<std::size_t> invalidated;
  };

  // Next-user check, oldest pending first: a link is legitimate iff the
  // contract has received at least the validated total plus its own amount.
  Settlement settle_pending() {
    Settlement out;
    for (; next_pending_ < links_.size(); ++next_pending_) {
      auto& l = links_[next_pending_];
      if (balance_ + total_withdrawn_ >= validated_total_ + l.amount) {
        l.status = LinkStatus::validated;
        validated_total_ += l.amount;
        out.validated.push_back(l.id);
      } else {
        l.status = LinkStatus::invalidated;
        out.invalidated.push_back(l.id);
      }
    }
    return out;
  }

  void withdraw(const Amount& amount) {
    settle_pending();
    if (amount < 0) throw Error("negative withdrawal");
    if (amount == 0) return;
    if (amount > balance_) throw Error("insufficient contract balance");
    balance_ -= amount;
    total_withdrawn_ += amount;
    ++withdrawals_;
  }

 private:
  Digest address_;
  Amount balance_ = 0;
  Amount total_withdrawn_ = 0;
  Amount validated_total_ = 0;
  std::vector<LinkingTx> links_;
  std::size_t next_pending_ = 0;
  std::size_t withdrawals_ = 0;
};

}  // namespace fiberpool
