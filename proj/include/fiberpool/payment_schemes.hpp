#pragma once

// Baseline pool payment schemes as folds over share/block event streams.
// Parameterized on the miner key so tests can use plain integers while the
// engine uses indices into its agent table.

#include <cstdint>
#include <deque>
#include <map>
#include <span>
#include <utility>

#include "fiberpool/amount.hpp"

namespace fiberpool {

template <class Miner>
struct ShareEvent {
  double time = 0.0;
  Miner miner{};
  Rational weight = 1;  // 1/D of the share
};

template <class Miner>
using Payouts = std::map<Miner, Amount>;

struct PplnsConfig {
  std::size_t window = 1;  // N most recent shares paid
  void validate() const {
    if (window < 1) throw Error("PPLNS window must be at least 1");
  }
};

struct PpsConfig {
  Amount rate = 1;  // currency per unit of share weight
  Amount operator_bankroll = 0;
  void validate() const {
    if (rate <= 0) throw Error("PPS rate must be positive");
  }
};

// `history` ends with the share that is the block. The last N shares each get
// B/N; a history shorter than N splits B over what exists.
template <class Miner>
Payouts<Miner> pplns_payout(std::span<const ShareEvent<Miner>> history, const PplnsConfig& cfg, const Amount& reward) {
  cfg.validate();
  if (history.empty()) throw Error("PPLNS needs at least the block's own share");
  std::size_t n = std::min(cfg.window, history.size());
  Payouts<Miner> out;
  Amount slice = reward / n;
  for (const auto& ev : history.last(n)) out[ev.miner] += slice;
  return out;
}

template <class Miner>
Payouts<Miner> proportional_payout(std::span<const ShareEvent<Miner>> round, const Amount& reward) {
  if (round.empty()) throw Error("proportional round needs at least one share");
  std::map<Miner, std::uint64_t> counts;
  for (const auto& ev : round) ++counts[ev.miner];
  Payouts<Miner> out;
  for (const auto& [m, c] : counts) out[m] = reward * c / round.size();
  return out;
}

struct PpsState {
  Amount bankroll = 0;
  Amount paid = 0;
  Amount received = 0;
};

// Pays rate * weight from the bankroll. The bankroll may go negative.
template <class Miner>
std::pair<Amount, PpsState> pps_payout(const ShareEvent<Miner>& share, const PpsConfig& cfg, PpsState state) {
  Amount pay = cfg.rate * share.weight;
  state.bankroll -= pay;
  state.paid += pay;
  return {pay, state};
}

inline PpsState pps_block(const Amount& reward, PpsState state) {
  state.bankroll += reward;
  state.received += reward;
  return state;
}

// ---------------------------------------------------------------------------
// Streaming forms

template <class Miner>
class PplnsStream {
 public:
  PplnsStream(PplnsConfig cfg, Amount reward) : cfg_(cfg), reward_(std::move(reward)) { cfg_.validate(); }

  void on_share(const Miner& m) {
    window_.push_back(m);
    ++counts_[m];
    if (window_.size() > cfg_.window) {
      auto& c = counts_[window_.front()];
      if (--c == 0) counts_.erase(window_.front());
      window_.pop_front();
    }
  }

  // The block is itself a share of its producer.
  Payouts<Miner> on_block(const Miner& producer) {
    on_share(producer);
    Payouts<Miner> out;
    for (const auto& [m, c] : counts_) out[m] = reward_ * c / window_.size();
    return out;
  }

  std::size_t count_in_window(const Miner& m) const {
    auto it = counts_.find(m);
    return it == counts_.end() ? 0 : it->second;
  }

 private:
  PplnsConfig cfg_;
  Amount reward_;
  std::deque<Miner> window_;
  std::map<Miner, std::size_t> counts_;
};

template <class Miner>
class ProportionalStream {
 public:
  explicit ProportionalStream(Amount reward) : reward_(std::move(reward)) {}

  void on_share(const Miner& m) {
    ++counts_[m];
    ++total_;
  }

  Payouts<Miner> on_block(const Miner& producer) {
    on_share(producer);
    Payouts<Miner> out;
    for (const auto& [m, c] : counts_) out[m] = reward_ * c / total_;
    counts_.clear();
    total_ = 0;
    return out;
  }

 private:
  Amount reward_;
  std::map<Miner, std::uint64_t> counts_;
  std::uint64_t total_ = 0;
};

template <class Miner>
class PpsStream {
 public:
  PpsStream(PpsConfig cfg, Amount reward) : cfg_(std::move(cfg)), reward_(std::move(reward)) {
    cfg_.validate();
    state_.bankroll = cfg_.operator_bankroll;
  }

  Amount on_share(const ShareEvent<Miner>& ev) {
    auto [pay, next] = pps_payout(ev, cfg_, state_);
    state_ = std::move(next);
    return pay;
  }

  void on_block() { state_ = pps_block(reward_, state_); }

  const PpsState& state() const { return state_; }
  // Bankroll change relative to the operator's starting funds.
  Amount residual() const { return state_.bankroll - cfg_.operator_bankroll; }

 private:
  PpsConfig cfg_;
  Amount reward_;
  PpsState state_;
};

}  // namespace fiberpool
