#pragma once

// Layer-2 ledger: validated block rewards become deposits against a
// distribution commitment; miners claim their slice with a Merkle opening of
// their (pubkey, work) entry, spend it on the child chain, and exit in one
// aggregated withdrawal.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "fiberpool/amount.hpp"
#include "fiberpool/crypto.hpp"
#include "fiberpool/main_chain.hpp"
#include "fiberpool/protocol.hpp"

namespace fiberpool {

// Rewards that were never spent on the child chain exit with this many
// periods of extra priority.
inline constexpr std::int64_t kExitPriorityLag = 3;

struct Deposit {
  std::uint64_t id = 0;
  std::size_t link_id = 0;
  Amount amount;
  Digest dist_commit;
  std::uint64_t period = 0;        // mining period the distribution describes
  std::uint64_t block_period = 0;  // period of the block that paid the reward
  Work total_work;
  std::size_t entry_count = 0;
  std::set<PublicKey> claimed;
  Amount claimed_total = 0;

  Amount remainder() const { return amount - claimed_total; }
};

struct ChildAccount {
  PublicKey pubkey;
  Amount balance = 0;
  std::optional<std::uint64_t> oldest_deposit_period;  // of funds credited since the last exit
};

struct ExitTicket {
  PublicKey pubkey;
  Amount amount;
  std::int64_t priority_period = 0;
  std::uint64_t sequence = 0;
};

struct Credit {
  std::uint64_t deposit_id = 0;
  PublicKey pubkey;
  Amount amount;
  std::uint64_t source_period = 0;
  std::uint64_t block_period = 0;
};

inline std::vector<std::uint8_t> claim_message(std::uint64_t deposit_id, const PublicKey& pub, const Work& work) {
  ByteWriter w;
  w.text("fiberpool/claim").u64(deposit_id) << pub;
  w.rational(work);
  return std::move(w).take();
}

class ChildChain {
 public:
  const std::vector<Deposit>& deposits() const { return deposits_; }
  const Deposit& deposit(std::uint64_t id) const { return deposits_.at(id); }
  const std::map<PublicKey, ChildAccount>& accounts() const { return accounts_; }
  const std::vector<ExitTicket>& exits() const { return exits_; }

  Amount balance_of(const PublicKey& pub) const {
    auto it = accounts_.find(pub);
    return it == accounts_.end() ? Amount(0) : it->second.balance;
  }

  // Funds living on the child chain: account balances plus unclaimed deposit
  // remainders.
  Amount supply() const {
    Amount s = 0;
    for (const auto& [_, a] : accounts_) s += a.balance;
    for (const auto& d : deposits_) s += d.remainder();
    return s;
  }

  Amount unclaimed() const {
    Amount s = 0;
    for (const auto& d : deposits_) s += d.remainder();
    return s;
  }

  const Deposit& register_deposit(ContractState& contract, std::size_t link_id, const PowDistribution& dist) {
    contract.settle_pending();
    const LinkingTx& link = contract.link(link_id);
    if (link.status != LinkStatus::validated) throw Error("link is not validated");
    if (deposited_links_.count(link_id)) throw Error("link already deposited");
    if (dist.empty()) throw Error("cannot deposit against an empty distribution");
    if (dist.commitment() != link.dist_commit) throw Error("distribution does not match link");
    Deposit d;
    d.id = deposits_.size();
    d.link_id = link_id;
    d.amount = link.amount;
    d.dist_commit = link.dist_commit;
    d.period = dist.period();
    d.block_period = link.period;
    d.total_work = dist.total_work();
    d.entry_count = dist.size();
    deposited_links_.insert(link_id);
    deposits_.push_back(std::move(d));
    return deposits_.back();
  }

  Credit claim(std::uint64_t deposit_id, const PublicKey& pub, const Work& work, const MerkleProof& opening,
               const Signature& sig) {
    Deposit& d = deposits_.at(deposit_id);
    if (d.claimed.count(pub)) throw Error("already claimed on this deposit");
    if (work <= 0 || !merkle_verify(d.dist_commit, PowDistribution::entry_leaf(pub, work), opening, d.entry_count))
      throw Error("opening does not match the deposit's distribution");
    if (!verify_signature(pub, claim_message(deposit_id, pub, work), sig)) throw Error("bad claim signature");
    Amount credit = d.amount * work / d.total_work;
    d.claimed.insert(pub);
    d.claimed_total += credit;
    auto& acct = account(pub);
    acct.balance += credit;
    if (!acct.oldest_deposit_period || d.period < *acct.oldest_deposit_period) acct.oldest_deposit_period = d.period;
    return {d.id, pub, credit, d.period, d.block_period};
  }

  void transfer(const PublicKey& from, const PublicKey& to, const Amount& amount) {
    if (amount < 0) throw Error("negative transfer");
    if (amount == 0) return;
    auto& src = account(from);
    if (src.balance < amount) throw Error("insufficient child-chain balance");
    src.balance -= amount;
    account(to).balance += amount;
  }

  ExitTicket withdraw_aggregate(const PublicKey& pub, ContractState& contract, std::uint64_t current_period) {
    auto& acct = account(pub);
    if (acct.balance <= 0) throw Error("nothing to withdraw");
    std::int64_t base = static_cast<std::int64_t>(acct.oldest_deposit_period.value_or(current_period));
    std::int64_t priority = acct.oldest_deposit_period ? base - kExitPriorityLag : base;
    contract.withdraw(acct.balance);
    ExitTicket t{pub, acct.balance, priority, exits_.size()};
    acct.balance = 0;
    acct.oldest_deposit_period.reset();
    exits_.push_back(t);
    return t;
  }

  // Exits in processing order: older priority period first, then submission.
  std::vector<ExitTicket> exit_queue() const {
    auto out = exits_;
    std::stable_sort(out.begin(), out.end(), [](const ExitTicket& a, const ExitTicket& b) {
      return std::tie(a.priority_period, a.sequence) < std::tie(b.priority_period, b.sequence);
    });
    return out;
  }

 private:
  ChildAccount& account(const PublicKey& pub) {
    auto [it, inserted] = accounts_.try_emplace(pub);
    if (inserted) it->second.pubkey = pub;
    return it->second;
  }

  std::vector<Deposit> deposits_;
  std::set<std::size_t> deposited_links_;
  std::map<PublicKey, ChildAccount> accounts_;
  std::vector<ExitTicket> exits_;
};

}  // namespace fiberpool
