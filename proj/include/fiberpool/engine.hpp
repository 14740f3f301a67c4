#pragma once

// Discrete-event simulation of a FiberPool deployment: main chain, storage
// chain, contract ledger and child chain driven block by block, with strategy
// agents and baseline payment schemes fed from the same event stream.

#include <algorithm>
#include <cstdint>
#include <deque>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "fiberpool/amount.hpp"
#include "fiberpool/child_chain.hpp"
#include "fiberpool/main_chain.hpp"
#include "fiberpool/payment_schemes.hpp"
#include "fiberpool/protocol.hpp"
#include "fiberpool/scenario.hpp"
#include "fiberpool/storage_chain.hpp"
#include "fiberpool/verification.hpp"

namespace fiberpool {

// Independent generator for one labeled consumer of the root seed.
inline std::mt19937_64 substream(std::uint64_t seed, std::string_view label) {
  std::uint64_t tag = ShareTarget::leading_u64(hash(label));
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(tag >> 32)};
  return std::mt19937_64(seq);
}

inline KeyPair agent_keys(const std::string& name) { return KeyPair::from_seed("fiberpool/agent/" + name); }

// ---------------------------------------------------------------------------
// Run statistics

struct PoolBlockRecord {
  std::uint64_t height = 0;
  std::uint64_t period = 0;  // template period of the block
  std::size_t producer = 0;
  std::size_t link_id = 0;
  LinkStatus status = LinkStatus::pending;
  Amount amount;    // claimed by the link
  Amount credited;  // coinbase actually paid
  bool empty_distribution = false;
  std::optional<std::uint64_t> source_period;  // distribution period, when deposited
  std::vector<Amount> credits;                 // per miner
};

struct CreditRecord {
  std::uint64_t block_height = 0;
  std::uint64_t block_period = 0;
  std::uint64_t source_period = 0;
  std::size_t miner = 0;
  std::size_t producer = 0;
  Amount amount;
};

struct VerdictRecord {
  std::uint64_t period = 0;
  std::size_t miner = 0;
  std::uint64_t share_count = 0;
  std::uint64_t posted_height = 0;
  int failed_step = 0;
  std::string reason;
  Work accepted_work = 0;
};

struct ExitRecord {
  std::size_t miner = 0;
  std::uint64_t period = 0;
  ExitTicket ticket;
};

struct LedgerTotals {
  Amount pool_coinbase = 0;
  Amount distributed = 0;
  Amount unclaimed = 0;
  Amount frozen_warmup = 0;  // validated rewards linked to an empty distribution
  Amount frozen_invalidated = 0;
  Amount in_flight = 0;  // credited, link not yet settled
  Amount exited = 0;
  Amount solo_paid = 0;
  std::uint64_t links = 0;
  std::uint64_t links_invalidated = 0;
  std::uint64_t honest_links_invalidated = 0;
  std::uint64_t overclaim_links = 0;
  std::uint64_t overclaim_links_invalidated = 0;
  std::uint64_t identity_checks = 0;
  std::uint64_t identity_violations = 0;
  std::string first_violation;

  Amount frozen() const { return frozen_warmup + frozen_invalidated; }
};

struct BaselineRun {
  BaselineScheme scheme = BaselineScheme::pplns;
  std::vector<std::vector<Amount>> reward;          // [miner][period]
  std::vector<std::vector<double>> block_payouts;   // [miner][baseline block], pplns/proportional
  std::uint64_t shares = 0;
  std::uint64_t blocks = 0;
  Amount paid = 0;
  Amount received = 0;
  Amount pps_residual = 0;  // pps only
};

struct MinerSummary {
  std::string name;
  std::string pubkey;
  Rational fraction;
  StrategyKind strategy = StrategyKind::honest;
};

struct RunStats {
  std::string scenario;
  std::uint64_t seed = 0;
  std::uint64_t periods = 0;
  std::uint64_t main_blocks = 0;
  std::uint64_t storage_blocks = 0;
  std::vector<MinerSummary> miners;
  std::vector<std::vector<Amount>> pool_reward;  // [miner][block period], child-chain claims
  std::vector<std::vector<Amount>> solo_reward;  // [miner][period], blocks paid to the producer
  std::vector<Amount> pool_coinbase_by_period;
  std::vector<Amount> frozen_warmup_by_period;
  std::vector<std::vector<Work>> dist_work;              // [miner][period], verified work
  std::vector<std::vector<std::uint64_t>> dist_shares;   // [miner][period], shares behind dist_work
  std::vector<std::uint64_t> blocks_by_producer;
  std::vector<PoolBlockRecord> pool_blocks;
  std::vector<CreditRecord> credits;
  std::vector<VerdictRecord> verdicts;
  std::vector<ExitRecord> exits;
  LedgerTotals ledger;
  std::vector<BaselineRun> baselines;

  Amount reward(std::size_t miner, std::uint64_t period) const {
    return pool_reward[miner][period] + solo_reward[miner][period];
  }
  Amount total_reward(std::size_t miner) const {
    Amount s = 0;
    for (std::uint64_t p = 0; p < periods; ++p) s += reward(miner, p);
    return s;
  }
  const BaselineRun* baseline(BaselineScheme s) const {
    for (const auto& b : baselines)
      if (b.scheme == s) return &b;
    return nullptr;
  }
};

// ---------------------------------------------------------------------------
// Participation rules

inline bool participates(const MinerSpec& m, std::uint64_t period) {
  switch (m.strategy) {
    case StrategyKind::external: return false;
    case StrategyKind::pool_hopper: return period % m.cycle_len < m.cycle_len - 2;
    default: return true;
  }
}

// Producer order for one period in statistical-exact mode: smooth weighted
// round robin over the exact per-period block counts.
inline std::vector<std::size_t> exact_schedule(const std::vector<std::uint64_t>& counts) {
  std::uint64_t total = std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
  std::vector<std::int64_t> current(counts.size(), 0);
  std::vector<std::size_t> out;
  out.reserve(total);
  for (std::uint64_t step = 0; step < total; ++step) {
    std::size_t best = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
      current[i] += static_cast<std::int64_t>(counts[i]);
      if (current[i] > current[best]) best = i;
    }
    current[best] -= static_cast<std::int64_t>(total);
    out.push_back(best);
  }
  return out;
}

// Number of padding shares a cheater adds so that they make up fraction f of
// the batch: round(n * f / (1 - f)).
inline std::uint64_t padding_for(std::uint64_t valid, const Rational& f) {
  if (f <= 0) return 0;
  Rational x = Rational(valid) * f / (1 - f) + Rational(1, 2);
  return boost::multiprecision::numerator(x).convert_to<std::uint64_t>() /
         boost::multiprecision::denominator(x).convert_to<std::uint64_t>();
}

// ---------------------------------------------------------------------------

class Engine {
 public:
  explicit Engine(ScenarioConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

  RunStats run() {
    setup();
    const std::uint64_t L = cfg_.geometry.period_len;
    const std::uint64_t heights = cfg_.periods * L;
    for (std::uint64_t h = 0; h < heights; ++h) step(h);
    finish();
    return std::move(stats_);
  }

 private:
  struct Agent {
    MinerSpec spec;
    KeyPair keys;
    PublicKey pub;
    ShareTarget target;
    std::mt19937_64 rng;
    std::uint64_t nonce = 0;
    BlockTemplate tmpl;
    PowDistribution tmpl_dist;
  };

  struct PendingBatch {
    std::size_t agent = 0;
    SealedBatch sealed;
    std::optional<std::uint64_t> height;
    bool answered = false;
  };

  struct MempoolEntry {
    double time = 0.0;
    StorageEntry entry;
    std::optional<std::size_t> pending;  // index into pending_ for batches
  };

  struct HeldLink {
    std::uint64_t release_height = 0;
    std::size_t block_index = 0;
    Digest commit;
    PowDistribution dist;
  };

  struct BaselineState {
    BaselineScheme scheme;
    std::optional<PplnsStream<std::size_t>> pplns;
    std::optional<ProportionalStream<std::size_t>> prop;
    std::optional<PpsStream<std::size_t>> pps;
  };

  void setup() {
    const std::size_t n = cfg_.miners.size();
    stats_.scenario = cfg_.name;
    stats_.seed = cfg_.seed;
    stats_.periods = cfg_.periods;
    stats_.pool_reward.assign(n, std::vector<Amount>(cfg_.periods, Amount(0)));
    stats_.solo_reward = stats_.pool_reward;
    stats_.dist_work = stats_.pool_reward;
    stats_.dist_shares.assign(n, std::vector<std::uint64_t>(cfg_.periods, 0));
    stats_.pool_coinbase_by_period.assign(cfg_.periods, Amount(0));
    stats_.frozen_warmup_by_period.assign(cfg_.periods, Amount(0));
    stats_.blocks_by_producer.assign(n, 0);

    for (const auto& m : cfg_.miners) {
      Agent a{m, agent_keys(m.name), {}, ShareTarget::from_rational(m.share_target),
              substream(cfg_.seed, "agent/" + m.name), 0, {}, PowDistribution(0)};
      a.pub = a.keys.public_key();
      a.nonce = a.rng();
      agent_index_.emplace(a.pub, agents_.size());
      agents_.push_back(std::move(a));
      stats_.miners.push_back({m.name, agents_.back().pub.hex(), m.fraction, m.strategy});
    }
    time_rng_ = substream(cfg_.seed, "main/time");
    lottery_rng_ = substream(cfg_.seed, "main/lottery");
    storage_rng_ = substream(cfg_.seed, "storage/time");
    baseline_rng_ = substream(cfg_.seed, "baseline/shares");
    next_storage_time_ = sample_block_gap(storage_rng_, cfg_.storage_interval);

    for (std::size_t i = 0; i < n; ++i) fraction_d_.push_back(to_double(cfg_.miners[i].fraction));
    for (std::size_t i = 0; i < n; ++i)
      lottery_.push_back(Producer{agents_[i].pub, fraction_d_[i], std::nullopt});

    for (auto scheme : cfg_.baselines) {
      BaselineState st{scheme, std::nullopt, std::nullopt, std::nullopt};
      if (scheme == BaselineScheme::pplns) st.pplns.emplace(PplnsConfig{cfg_.pplns_window}, cfg_.block_reward);
      if (scheme == BaselineScheme::proportional) st.prop.emplace(cfg_.block_reward);
      if (scheme == BaselineScheme::pps)
        st.pps.emplace(PpsConfig{cfg_.effective_pps_rate(), cfg_.pps_bankroll}, cfg_.block_reward);
      baseline_state_.push_back(std::move(st));
      BaselineRun run;
      run.scheme = scheme;
      run.reward.assign(n, std::vector<Amount>(cfg_.periods, Amount(0)));
      run.block_payouts.assign(n, {});
      stats_.baselines.push_back(std::move(run));
    }
  }

  // ---- per-height driver

  void step(std::uint64_t h) {
    const std::uint64_t L = cfg_.geometry.period_len;
    const std::uint64_t p = h / L;
    double ts = (h == 0 ? 0.0 : main_ts_.back()) + sample_block_gap(time_rng_, cfg_.geometry.block_interval);
    advance_storage(ts);

    if (h % L == 0) start_period(p);

    if (auto it = due_batches_.find(h); it != due_batches_.end()) {
      for (std::size_t idx : it->second) mempool_.push_back({ts, pending_[idx].sealed.batch, idx});
      due_batches_.erase(it);
    }

    std::size_t who = cfg_.mode == MiningMode::statistical_exact ? schedule_[h % L]
                                                                  : sample_producer(lottery_rng_, lottery_);
    main_ts_.push_back(ts);
    ++stats_.blocks_by_producer[who];
    Agent& a = agents_[who];
    if (participates(a.spec, p)) {
      Producer prod{a.pub, fraction_d_[who], a.tmpl};
      MainBlock block = make_block(h, ts, prod);
      PoolBlockRecord rec;
      rec.height = h;
      rec.period = p;
      rec.producer = who;
      rec.amount = block.link->amount;
      rec.credited = cfg_.block_reward;
      rec.credits.assign(agents_.size(), Amount(0));
      stats_.pool_blocks.push_back(std::move(rec));
      HeldLink held{h + (a.spec.strategy == StrategyKind::delayed ? a.spec.delay : 0), stats_.pool_blocks.size() - 1,
                    block.link->dist_commit, a.tmpl_dist};
      held_links_.push_back(std::move(held));
      feed_baselines(who, p);
    } else {
      stats_.solo_reward[who][p] += cfg_.block_reward;
      stats_.ledger.solo_paid += cfg_.block_reward;
    }

    release_links(h);
    if (h % L == L - 1) mine_period(p);
    check_identity(h);
  }

  void finish() {
    release_links(std::nullopt);
    settle();  // one last contract user
    // Mined data still waiting for publication is dropped: the run ends first.
    check_identity(cfg_.periods * cfg_.geometry.period_len);
    Amount supply = child_.supply();
    Amount accounts = stats_.ledger.distributed - stats_.ledger.exited;
    if (supply != accounts + stats_.ledger.unclaimed) violation("child-chain supply differs from the ledger totals");
    stats_.main_blocks = main_ts_.size();
    stats_.storage_blocks = storage_.size();
    for (std::size_t i = 0; i < baseline_state_.size(); ++i) {
      auto& st = baseline_state_[i];
      if (st.pps) {
        stats_.baselines[i].pps_residual = st.pps->residual();
        stats_.baselines[i].paid = st.pps->state().paid;
        stats_.baselines[i].received = st.pps->state().received;
      }
    }
  }

  // ---- storage chain

  void advance_storage(double until) {
    while (next_storage_time_ < until) {
      std::vector<StorageEntry> payload;
      std::vector<std::size_t> posted;
      std::deque<MempoolEntry> rest;
      for (auto& e : mempool_) {
        if (e.time <= next_storage_time_) {
          if (e.pending) posted.push_back(*e.pending);
          payload.push_back(std::move(e.entry));
        } else {
          rest.push_back(std::move(e));
        }
      }
      mempool_ = std::move(rest);
      const auto& block = storage_.append(std::move(payload), next_storage_time_);
      for (std::size_t idx : posted) {
        pending_[idx].height = block.height;
        awaiting_.push_back(idx);
      }
      answer_challenges(block);
      next_storage_time_ += sample_block_gap(storage_rng_, cfg_.storage_interval);
    }
  }

  void answer_challenges(const StorageBlock& block) {
    std::vector<std::size_t> still;
    for (std::size_t idx : awaiting_) {
      auto& pb = pending_[idx];
      if (!pb.height || *pb.height + 1 != block.height) {
        if (!pb.answered) still.push_back(idx);
        continue;
      }
      const Agent& a = agents_[pb.agent];
      for (std::uint32_t slot = 0; slot < cfg_.challenges; ++slot) {
        std::size_t i = challenge_index_from(block.beacon, pb.sealed.batch.merkle_root, pb.sealed.batch.share_count, slot);
        mempool_.push_back({block.timestamp, open_share(a.keys, pb.sealed, i, slot), std::nullopt});
      }
      pb.answered = true;
      pb.sealed.shares.clear();  // only the opened shares were needed
      pb.sealed.shares.shrink_to_fit();
    }
    awaiting_ = std::move(still);
  }

  // ---- periods

  void start_period(std::uint64_t p) {
    if (p >= 2) finalize_distribution(p - 2, p);
    if (cfg_.exit_interval > 0 && p > 0 && p % cfg_.exit_interval == 0) run_exits(p);
    build_templates(p);
    if (cfg_.mode == MiningMode::statistical_exact) {
      std::vector<std::uint64_t> counts;
      for (const auto& m : cfg_.miners) {
        Rational c = m.fraction * Rational(cfg_.geometry.period_len);
        counts.push_back(boost::multiprecision::numerator(c).convert_to<std::uint64_t>());
      }
      schedule_ = exact_schedule(counts);
    }
    if (p > 0) {
      // Cross-check the incremental totals against a full ledger scan.
      if (child_.unclaimed() != stats_.ledger.unclaimed) violation("unclaimed total drifted from the child chain");
    }
  }

  const PowDistribution& distribution(std::uint64_t period) const { return dists_.at(period); }

  Digest expected_commit(std::uint64_t period) const {
    return period >= 2 ? distribution(period - 2).commitment() : empty_distribution_commitment();
  }

  void finalize_distribution(std::uint64_t period, std::uint64_t current) {
    const PeriodConfig& g = cfg_.geometry;
    double boundary_ts = main_ts_.at(prepare_start_height(current, g));
    VerificationContext ctx{period, storage_.prepare_boundary(current, boundary_ts), expected_commit(period),
                            contract_.address(), cfg_.challenges};
    auto verdicts = verify_period(storage_, ctx);
    PowDistribution dist = aggregate_distribution(verdicts, period, cfg_.overlap_policy);
    for (const auto& v : verdicts) {
      auto it = agent_index_.find(v.pubkey);
      if (it == agent_index_.end()) continue;
      VerdictRecord r{period, it->second, v.share_count, storage_.height_of(v.batch_id).value_or(0), v.failed_step,
                      v.reason, v.accepted_work.value_or(Work(0))};
      if (v.accepted() && dist.work_of(v.pubkey) > 0) stats_.dist_shares[it->second][period] += v.share_count;
      stats_.verdicts.push_back(std::move(r));
    }
    for (std::size_t i = 0; i < agents_.size(); ++i) stats_.dist_work[i][period] = dist.work_of(agents_[i].pub);
    if (dists_.size() != period) throw Error("distributions finalized out of order");
    dists_.push_back(std::move(dist));
  }

  void build_templates(std::uint64_t p) {
    PowDistribution honest = p >= 2 ? distribution(p - 2) : PowDistribution(0);
    Digest honest_commit = honest.commitment();
    for (auto& a : agents_) {
      BlockTemplate t;
      t.period = p;
      t.coinbase_target = contract_.address();
      t.reward = cfg_.block_reward;
      t.dist_commit = honest_commit;
      t.target = a.target;
      t.pubkey = a.pub;
      a.tmpl_dist = honest;
      if (a.spec.strategy == StrategyKind::over_claim) t.reward = cfg_.block_reward * a.spec.overclaim_factor;
      if (a.spec.strategy == StrategyKind::self_serving) {
        PowDistribution mine(p >= 2 ? p - 2 : 0);
        mine.add(a.pub, 1);
        t.dist_commit = mine.commitment();
        a.tmpl_dist = std::move(mine);
      }
      a.tmpl = t;
    }
  }

  void run_exits(std::uint64_t p) {
    settle();
    for (std::size_t i = 0; i < agents_.size(); ++i) {
      if (child_.balance_of(agents_[i].pub) <= 0) continue;
      ExitTicket t = child_.withdraw_aggregate(agents_[i].pub, contract_, p);
      stats_.ledger.exited += t.amount;
      stats_.exits.push_back({i, p, t});
    }
  }

  // ---- mining

  std::uint64_t share_count_for(Agent& a, std::size_t idx, std::uint64_t p) {
    Rational hashes = cfg_.hashes_for(idx, p);
    Rational expected = hashes * a.spec.share_target;
    switch (cfg_.mode) {
      case MiningMode::statistical_exact:
        return boost::multiprecision::numerator(expected).convert_to<std::uint64_t>();
      case MiningMode::statistical_poisson: {
        double mean = to_double(expected);
        if (mean <= 0) return 0;
        return std::poisson_distribution<std::uint64_t>(mean)(a.rng);
      }
      case MiningMode::grind:
        break;
    }
    throw Error("grind mode has no share count");
  }

  std::uint64_t hash_budget(std::size_t idx, std::uint64_t p) const {
    Rational hashes = cfg_.hashes_for(idx, p);
    return (boost::multiprecision::numerator(hashes) / boost::multiprecision::denominator(hashes))
        .convert_to<std::uint64_t>();
  }

  void mine_period(std::uint64_t p) {
    const std::uint64_t due = (p + 1) * cfg_.geometry.period_len;
    for (std::size_t i = 0; i < agents_.size(); ++i) {
      Agent& a = agents_[i];
      if (!participates(a.spec, p)) continue;
      std::vector<Share> shares;
      if (cfg_.mode == MiningMode::grind) {
        auto res = mine_shares(a.tmpl, hash_budget(i, p), a.nonce);
        a.nonce = res.next_nonce;
        shares = std::move(res.shares);
      } else {
        auto res = mine_until(a.tmpl, share_count_for(a, i, p), a.nonce);
        a.nonce = res.next_nonce;
        shares = std::move(res.shares);
      }
      if (a.spec.strategy == StrategyKind::cheater) shares = pad_with_invalid(a, shares.size());
      if (shares.empty()) continue;
      pending_.push_back({i, seal_batch(a.keys, p, a.target, std::move(shares)), std::nullopt, false});
      std::uint64_t at = due + (a.spec.strategy == StrategyKind::delayed ? a.spec.delay : 0);
      if (at < cfg_.periods * cfg_.geometry.period_len) due_batches_[at].push_back(pending_.size() - 1);
    }
  }

  // Rebuilds a batch of `valid` honest shares plus invalid padding at random
  // counter positions.
  std::vector<Share> pad_with_invalid(Agent& a, std::uint64_t valid) {
    if (valid == 0) return {};
    std::uint64_t total = valid + padding_for(valid, a.spec.invalid_fraction);
    std::vector<bool> bad(total, false);
    std::fill(bad.begin() + static_cast<std::ptrdiff_t>(valid), bad.end(), true);
    std::shuffle(bad.begin(), bad.end(), a.rng);
    std::vector<Share> out;
    out.reserve(total);
    for (std::uint64_t c = 0; c < total; ++c) {
      if (bad[c]) {
        out.push_back(grind_invalid_share(a.tmpl, c, a.nonce));
      } else {
        auto res = mine_until(a.tmpl, 1, a.nonce, c);
        a.nonce = res.next_nonce;
        out.push_back(res.shares.front());
      }
    }
    return out;
  }

  // ---- contract and child chain

  void release_links(std::optional<std::uint64_t> height) {
    while (true) {
      auto it = std::min_element(held_links_.begin(), held_links_.end(), [](const HeldLink& x, const HeldLink& y) {
        return std::tie(x.release_height, x.block_index) < std::tie(y.release_height, y.block_index);
      });
      if (it == held_links_.end() || (height && it->release_height > *height)) return;
      HeldLink held = std::move(*it);
      held_links_.erase(it);
      publish_link(held);
    }
  }

  // Settles every pending link; each contract user does this before acting.
  void settle() {
    auto settled = contract_.settle_pending();
    for (std::size_t id : settled.invalidated) on_invalidated(id);
    for (std::size_t id : settled.validated) on_validated(id);
  }

  // The producer is the next contract user: earlier links are settled against
  // the balance before its own coinbase arrives. Its link waits for the user
  // after it.
  void publish_link(const HeldLink& held) {
    settle();
    auto& rec = stats_.pool_blocks[held.block_index];
    auto& led = stats_.ledger;
    rec.link_id = contract_.submit_linking_tx(rec.amount, held.commit, rec.period, rec.credited);
    ++led.links;
    if (rec.amount != rec.credited) ++led.overclaim_links;
    led.pool_coinbase += rec.credited;
    led.in_flight += rec.credited;
    stats_.pool_coinbase_by_period[rec.period] += rec.credited;
    link_blocks_.push_back(held.block_index);
    link_dists_.push_back(held.dist);
  }

  void on_invalidated(std::size_t link_id) {
    auto& rec = stats_.pool_blocks[link_blocks_.at(link_id)];
    rec.status = LinkStatus::invalidated;
    auto& led = stats_.ledger;
    led.in_flight -= rec.credited;
    led.frozen_invalidated += rec.credited;
    ++led.links_invalidated;
    if (rec.amount != rec.credited) ++led.overclaim_links_invalidated;
    else ++led.honest_links_invalidated;
  }

  void on_validated(std::size_t link_id) {
    auto& rec = stats_.pool_blocks[link_blocks_.at(link_id)];
    rec.status = LinkStatus::validated;
    auto& led = stats_.ledger;
    led.in_flight -= rec.credited;
    // An over-claim that validates draws the excess out of earlier frozen funds.
    led.frozen_invalidated -= rec.amount - rec.credited;
    const PowDistribution& dist = link_dists_.at(link_id);
    if (dist.empty()) {
      rec.empty_distribution = true;
      led.frozen_warmup += rec.amount;
      stats_.frozen_warmup_by_period[rec.period] += rec.amount;
      return;
    }
    const Deposit& dep = child_.register_deposit(contract_, link_id, dist);
    rec.source_period = dep.period;
    led.unclaimed += dep.amount;
    MerkleTree tree = dist.tree();
    std::size_t leaf = 0;
    for (const auto& [pub, work] : dist.entries()) {
      auto it = agent_index_.find(pub);
      std::size_t index = leaf++;
      if (it == agent_index_.end()) continue;
      const Agent& claimant = agents_[it->second];
      Signature sig = claimant.keys.sign(claim_message(dep.id, pub, work));
      Credit c = child_.claim(dep.id, pub, work, tree.prove(index), sig);
      led.unclaimed -= c.amount;
      led.distributed += c.amount;
      rec.credits[it->second] += c.amount;
      stats_.pool_reward[it->second][rec.period] += c.amount;
      stats_.credits.push_back({rec.height, rec.period, c.source_period, it->second, rec.producer, c.amount});
    }
  }

  // ---- baselines

  void feed_baselines(std::size_t producer, std::uint64_t p) {
    if (baseline_state_.empty()) return;
    if (agents_[producer].spec.strategy == StrategyKind::self_serving) return;
    std::vector<double> weights(agents_.size(), 0.0);
    for (std::size_t i = 0; i < agents_.size(); ++i)
      if (participates(agents_[i].spec, p) && agents_[i].spec.strategy != StrategyKind::self_serving)
        weights[i] = fraction_d_[i];
    std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
    double q = 1.0 / (to_double(cfg_.baseline_shares_per_block) + 1.0);
    std::uint64_t gap = std::geometric_distribution<std::uint64_t>(q)(baseline_rng_);
    const Rational weight = 1 / cfg_.baseline_share_target;

    std::vector<std::size_t> shares;
    shares.reserve(gap + 1);
    for (std::uint64_t k = 0; k < gap; ++k) shares.push_back(pick(baseline_rng_));

    for (std::size_t s = 0; s < baseline_state_.size(); ++s) {
      auto& st = baseline_state_[s];
      auto& out = stats_.baselines[s];
      out.shares += shares.size() + 1;
      ++out.blocks;
      Payouts<std::size_t> pay;
      if (st.pplns) {
        for (auto m : shares) st.pplns->on_share(m);
        pay = st.pplns->on_block(producer);
      } else if (st.prop) {
        for (auto m : shares) st.prop->on_share(m);
        pay = st.prop->on_block(producer);
      } else {
        for (auto m : shares) out.reward[m][p] += st.pps->on_share({0.0, m, weight});
        out.reward[producer][p] += st.pps->on_share({0.0, producer, weight});
        st.pps->on_block();
        continue;
      }
      for (std::size_t i = 0; i < agents_.size(); ++i) {
        auto it = pay.find(i);
        Amount v = it == pay.end() ? Amount(0) : it->second;
        out.reward[i][p] += v;
        out.paid += v;
        out.block_payouts[i].push_back(to_double(v));
      }
      out.received += cfg_.block_reward;
    }
  }

  // ---- conservation

  void violation(const std::string& what) {
    auto& led = stats_.ledger;
    if (led.identity_violations++ == 0) led.first_violation = what;
  }

  void check_identity(std::uint64_t h) {
    auto& led = stats_.ledger;
    ++led.identity_checks;
    Amount accounted = led.distributed + led.unclaimed + led.frozen() + led.in_flight;
    if (accounted != led.pool_coinbase)
      violation("height " + std::to_string(h) + ": pool coinbase != distributed + unclaimed + frozen + in flight");
    if (contract_.balance() + contract_.total_withdrawn() != led.pool_coinbase)
      violation("height " + std::to_string(h) + ": contract balance + withdrawn != pool coinbase");
    if (contract_.validated_total() > contract_.balance() + contract_.total_withdrawn())
      violation("height " + std::to_string(h) + ": validated links exceed received funds");
  }

  ScenarioConfig cfg_;
  RunStats stats_;
  std::vector<Agent> agents_;
  std::map<PublicKey, std::size_t> agent_index_;
  std::vector<double> fraction_d_;
  std::vector<Producer> lottery_;
  std::vector<std::size_t> schedule_;
  std::mt19937_64 time_rng_, lottery_rng_, storage_rng_, baseline_rng_;

  std::vector<double> main_ts_;
  double next_storage_time_ = 0.0;
  StorageChain storage_;
  std::deque<MempoolEntry> mempool_;
  std::vector<PendingBatch> pending_;
  std::vector<std::size_t> awaiting_;
  std::map<std::uint64_t, std::vector<std::size_t>> due_batches_;
  std::vector<PowDistribution> dists_;

  ContractState contract_;
  ChildChain child_;
  std::vector<HeldLink> held_links_;
  std::vector<std::size_t> link_blocks_;
  std::vector<PowDistribution> link_dists_;

  std::vector<BaselineState> baseline_state_;
};

inline RunStats run(const ScenarioConfig& cfg) { return Engine(cfg).run(); }

// ---------------------------------------------------------------------------
// Closed-form expectations

// Pool-hopping loss per cycle relative to staying solo.
inline Rational hopping_loss(const Rational& R, const Rational& alpha, const Rational& beta) {
  return 2 * R * alpha * alpha / (alpha + beta);
}

// Per-cycle reward of a cross-period allocation when every other miner is in
// the pool: sum over periods of R x_i / (P (1 - a) + x_i).
inline Rational cross_period_objective(const Rational& R, const Rational& P, const Rational& alpha,
                                       const std::vector<Rational>& x) {
  Rational s = 0;
  for (const auto& xi : x) s += R * xi / (P * (1 - alpha) + xi);
  return s;
}

}  // namespace fiberpool
