#pragma once

// Shares, templates, batches and per-period PoW distributions, plus the pure
// rules over them (PoW check, batch pricing, distribution commitment).

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "fiberpool/amount.hpp"
#include "fiberpool/codec.hpp"
#include "fiberpool/crypto.hpp"

namespace fiberpool {

struct PeriodConfig {
  std::uint64_t period_len = 100;   // main-chain blocks per period
  std::uint64_t prepare_len = 10;   // trailing blocks of each period spent in Prepare
  double block_interval = 600.0;    // mean main-chain block time

  void validate() const {
    if (prepare_len < 1) throw Error("prepare_len must be at least 1");
    if (period_len < 2 * prepare_len) throw Error("period_len must be at least 2 * prepare_len");
    if (!(block_interval > 0.0)) throw Error("block_interval must be positive");
  }
};

// Share target D in (0, 1], stored as an exact fraction num/den. A hash whose
// normalized value is <= D is a valid share; one share stands for 1/D
// expected hashes.
class ShareTarget {
 public:
  ShareTarget() = default;

  static ShareTarget from_fraction(std::uint64_t num, std::uint64_t den) {
    if (num == 0 || den == 0 || num > den) throw Error("share target must lie in (0, 1]");
    Rational r(num, den);
    ShareTarget t;
    t.num_ = boost::multiprecision::numerator(r).convert_to<std::uint64_t>();
    t.den_ = boost::multiprecision::denominator(r).convert_to<std::uint64_t>();
    return t;
  }

  static ShareTarget from_rational(const Rational& r) {
    if (r <= 0 || r > 1) throw Error("share target must lie in (0, 1]");
    auto num = boost::multiprecision::numerator(r);
    auto den = boost::multiprecision::denominator(r);
    if (den > std::numeric_limits<std::uint64_t>::max()) throw Error("share target denominator too large");
    return from_fraction(num.convert_to<std::uint64_t>(), den.convert_to<std::uint64_t>());
  }

  std::uint64_t num() const { return num_; }
  std::uint64_t den() const { return den_; }
  Rational value() const { return Rational(num_, den_); }
  double as_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }

  // Expected hashes represented by one share.
  Work work_per_share() const { return Rational(den_, num_); }

  // Exact test of first8(d) / 2^64 <= num / den.
  bool admits(const Digest& d) const {
    unsigned __int128 lhs = static_cast<unsigned __int128>(leading_u64(d)) * den_;
    unsigned __int128 rhs = static_cast<unsigned __int128>(num_) << 64;
    return lhs <= rhs;
  }

  static std::uint64_t leading_u64(const Digest& d) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = (v << 8) | d.bytes[i];
    return v;
  }

  friend bool operator==(const ShareTarget&, const ShareTarget&) = default;

 private:
  std::uint64_t num_ = 1;
  std::uint64_t den_ = 1;
};

// First 8 digest bytes as an unsigned integer over 2^64, truncated to 53 bits
// so the double result stays strictly below 1.
inline double normalized(const Digest& d) {
  return std::ldexp(static_cast<double>(ShareTarget::leading_u64(d) >> 11), -53);
}

inline Rational normalized_exact(const Digest& d) {
  boost::multiprecision::cpp_int two64 = 1;
  two64 <<= 64;
  return Rational(boost::multiprecision::cpp_int(ShareTarget::leading_u64(d)), two64);
}

// ---------------------------------------------------------------------------
// Shares

struct ShareHeader {
  PublicKey pubkey;
  std::uint64_t period = 0;
  std::uint64_t counter = 0;
  ShareTarget target;
  Digest dist_commit;
  Digest coinbase_target;
  std::uint64_t nonce = 0;
  friend bool operator==(const ShareHeader&, const ShareHeader&) = default;
};

// Fixed layout: tag(1) pubkey(32) period(8) counter(8) target_num(8)
// target_den(8) dist_commit(32) coinbase_target(32) nonce(8).
inline constexpr std::size_t kShareHeaderSize = 137;
inline constexpr std::size_t kCounterOffset = 41;
inline constexpr std::size_t kNonceOffset = kShareHeaderSize - 8;
inline constexpr std::uint8_t kShareHeaderTag = 0x48;

using EncodedHeader = std::array<std::uint8_t, kShareHeaderSize>;

namespace detail {
inline void put_u64(std::uint8_t* out, std::uint64_t v) {
  for (int i = 7; i >= 0; --i) {
    out[i] = static_cast<std::uint8_t>(v);
    v >>= 8;
  }
}
}  // namespace detail

inline EncodedHeader encode(const ShareHeader& h) {
  EncodedHeader out{};
  std::uint8_t* p = out.data();
  *p++ = kShareHeaderTag;
  p = std::copy(h.pubkey.digest.bytes.begin(), h.pubkey.digest.bytes.end(), p);
  detail::put_u64(p, h.period), p += 8;
  detail::put_u64(p, h.counter), p += 8;
  detail::put_u64(p, h.target.num()), p += 8;
  detail::put_u64(p, h.target.den()), p += 8;
  p = std::copy(h.dist_commit.bytes.begin(), h.dist_commit.bytes.end(), p);
  p = std::copy(h.coinbase_target.bytes.begin(), h.coinbase_target.bytes.end(), p);
  detail::put_u64(p, h.nonce);
  return out;
}

struct Share {
  ShareHeader header;
  Digest pow_value;  // hash(encode(header))
  friend bool operator==(const Share&, const Share&) = default;
};

inline Share seal(const ShareHeader& header) { return {header, hash(encode(header))}; }

// Merkle leaf for a share: the header hash recomputed from the fields, never
// the carried pow_value.
inline Digest share_leaf(const Share& s) { return hash(encode(s.header)); }

inline bool check_pow(const Share& s) { return s.header.target.admits(s.pow_value); }

inline ByteWriter& operator<<(ByteWriter& w, const Share& s) {
  auto enc = encode(s.header);
  return w.raw(enc) << s.pow_value;
}

// ---------------------------------------------------------------------------
// Templates and distributions

struct BlockTemplate {
  std::uint64_t period = 0;
  Digest coinbase_target;   // contract address for pool templates
  Amount reward;            // linking payload: claimed block reward
  Digest dist_commit;       // linking payload: commitment of period - 2
  ShareTarget target;
  PublicKey pubkey;
};

inline ShareHeader header_for(const BlockTemplate& t, std::uint64_t counter, std::uint64_t nonce) {
  return {t.pubkey, t.period, counter, t.target, t.dist_commit, t.coinbase_target, nonce};
}

inline Digest empty_distribution_commitment() { return hash("fiberpool/empty-period"); }

class PowDistribution {
 public:
  explicit PowDistribution(std::uint64_t period = 0) : period_(period) {}

  std::uint64_t period() const { return period_; }
  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }
  const std::map<PublicKey, Work>& entries() const { return entries_; }
  const Work& total_work() const { return total_; }

  void add(const PublicKey& pub, const Work& work) {
    if (work <= 0) throw Error("distribution work must be positive");
    entries_[pub] += work;
    total_ += work;
  }

  Work work_of(const PublicKey& pub) const {
    auto it = entries_.find(pub);
    return it == entries_.end() ? Work(0) : it->second;
  }

  std::optional<std::size_t> index_of(const PublicKey& pub) const {
    auto it = entries_.find(pub);
    if (it == entries_.end()) return std::nullopt;
    return static_cast<std::size_t>(std::distance(entries_.begin(), it));
  }

  static Digest entry_leaf(const PublicKey& pub, const Work& work) {
    ByteWriter w;
    w.text("fiberpool/dist-entry") << pub;
    w.rational(work);
    return hash(w.data());
  }

  MerkleTree tree() const {
    if (entries_.empty()) throw Error("empty distribution has no tree");
    std::vector<Digest> leaves;
    leaves.reserve(entries_.size());
    for (const auto& [pub, work] : entries_) leaves.push_back(entry_leaf(pub, work));
    return MerkleTree(std::move(leaves));
  }

  // Merkle opening of `pub`'s (pubkey, work) leaf against commitment().
  MerkleProof opening(const PublicKey& pub) const {
    auto idx = index_of(pub);
    if (!idx) throw Error("pubkey not in distribution");
    return tree().prove(*idx);
  }

  Digest commitment() const {
    if (entries_.empty()) return empty_distribution_commitment();
    return tree().root();
  }

  friend bool operator==(const PowDistribution&, const PowDistribution&) = default;

 private:
  std::uint64_t period_;
  std::map<PublicKey, Work> entries_;
  Work total_ = 0;
};

inline Digest commit_distribution(const PowDistribution& d) { return d.commitment(); }

// ---------------------------------------------------------------------------
// Batches and challenge openings

struct Batch {
  PublicKey pubkey;
  std::uint64_t period = 0;
  std::uint64_t first_counter = 0;  // counters covered: [first_counter, first_counter + share_count)
  Digest merkle_root;
  ShareTarget target;
  std::uint64_t share_count = 0;
  Signature signature;

  std::vector<std::uint8_t> signing_message() const {
    ByteWriter w;
    w.text("fiberpool/batch") << pubkey;
    w.u64(period).u64(first_counter) << merkle_root;
    w.u64(target.num()).u64(target.den()).u64(share_count);
    return std::move(w).take();
  }

  Digest id() const {
    ByteWriter w;
    w.raw(signing_message()) << signature.signing_key << signature.tag;
    return hash(w.data());
  }
};

inline Work batch_work(const Batch& b) {
  if (b.share_count < 1) throw Error("batch must contain at least one share");
  return Work(b.share_count) * b.target.work_per_share();
}

struct ShareProof {
  Digest batch_id;
  std::uint32_t slot = 0;  // which challenge of the batch this answers
  Share challenged_share;
  MerkleProof merkle_proof;
  Signature signature;

  std::vector<std::uint8_t> signing_message() const {
    ByteWriter w;
    w.text("fiberpool/proof") << batch_id;
    w.u32(slot) << challenged_share << merkle_proof;
    return std::move(w).take();
  }

  Digest id() const {
    ByteWriter w;
    w.raw(signing_message()) << signature.signing_key << signature.tag;
    return hash(w.data());
  }
};

// A batch together with the private material its owner needs to answer
// challenges.
struct SealedBatch {
  Batch batch;
  std::vector<Share> shares;
  MerkleTree tree;
};

inline SealedBatch seal_batch(const KeyPair& kp, std::uint64_t period, const ShareTarget& target,
                              std::vector<Share> shares) {
  if (shares.empty()) throw Error("empty batch");
  std::vector<Digest> leaves;
  leaves.reserve(shares.size());
  for (const auto& s : shares) leaves.push_back(share_leaf(s));
  MerkleTree tree(std::move(leaves));
  Batch b{kp.public_key(), period, shares.front().header.counter, tree.root(), target, shares.size(), {}};
  b.signature = kp.sign(b.signing_message());
  return {std::move(b), std::move(shares), std::move(tree)};
}

inline ShareProof open_share(const KeyPair& kp, const SealedBatch& sealed, std::size_t index, std::uint32_t slot = 0) {
  ShareProof p{sealed.batch.id(), slot, sealed.shares.at(index), sealed.tree.prove(index), {}};
  p.signature = kp.sign(p.signing_message());
  return p;
}

// ---------------------------------------------------------------------------
// Grinding

struct MiningResult {
  std::vector<Share> shares;
  std::vector<std::size_t> block_candidates;  // indices into shares
  std::uint64_t hashes = 0;
  std::uint64_t next_nonce = 0;
};

// Tries `hash_budget` consecutive nonces against the template; every header
// meeting the share target becomes a share with the next counter. Headers that
// also meet `main_target` are flagged as block candidates.
inline MiningResult mine_shares(const BlockTemplate& tmpl, std::uint64_t hash_budget, std::uint64_t first_nonce,
                                std::uint64_t first_counter = 0,
                                std::optional<ShareTarget> main_target = std::nullopt) {
  MiningResult out;
  std::uint64_t counter = first_counter;
  auto header = header_for(tmpl, counter, first_nonce);
  auto enc = encode(header);
  std::uint64_t nonce = first_nonce;
  for (std::uint64_t i = 0; i < hash_budget; ++i, ++nonce) {
    detail::put_u64(enc.data() + kNonceOffset, nonce);
    Digest pow = hash(enc);
    if (!tmpl.target.admits(pow)) continue;
    header.counter = counter;
    header.nonce = nonce;
    if (main_target && main_target->admits(pow)) out.block_candidates.push_back(out.shares.size());
    out.shares.push_back({header, pow});
    ++counter;
    detail::put_u64(enc.data() + kCounterOffset, counter);
  }
  out.hashes = hash_budget;
  out.next_nonce = nonce;
  return out;
}

// Grinds until exactly `share_count` shares are found.
inline MiningResult mine_until(const BlockTemplate& tmpl, std::uint64_t share_count, std::uint64_t first_nonce,
                               std::uint64_t first_counter = 0) {
  MiningResult out;
  out.shares.reserve(share_count);
  auto header = header_for(tmpl, first_counter, first_nonce);
  auto enc = encode(header);
  std::uint64_t nonce = first_nonce;
  while (out.shares.size() < share_count) {
    detail::put_u64(enc.data() + kNonceOffset, nonce);
    Digest pow = hash(enc);
    ++out.hashes;
    if (tmpl.target.admits(pow)) {
      header.counter = first_counter + out.shares.size();
      header.nonce = nonce;
      out.shares.push_back({header, pow});
      detail::put_u64(enc.data() + kCounterOffset, header.counter + 1);
    }
    ++nonce;
  }
  out.next_nonce = nonce;
  return out;
}

// A header at `counter` whose hash does NOT meet the template's target.
inline Share grind_invalid_share(const BlockTemplate& tmpl, std::uint64_t counter, std::uint64_t& nonce) {
  if (tmpl.target.num() == tmpl.target.den()) throw Error("every hash is a valid share at D = 1");
  for (;; ++nonce) {
    Share s = seal(header_for(tmpl, counter, nonce));
    if (!check_pow(s)) {
      ++nonce;
      return s;
    }
  }
}

}  // namespace fiberpool
