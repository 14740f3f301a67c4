#pragma once

// Deterministic stand-in cryptography: SHA-256 digests, hash-tag signatures
// and a domain-separated Merkle tree with index-binding proofs.

#include <algorithm>
#include <array>
#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <openssl/sha.h>

#include "fiberpool/amount.hpp"
#include "fiberpool/codec.hpp"

namespace fiberpool {

struct Digest {
  static constexpr std::size_t size = 32;
  std::array<std::uint8_t, size> bytes{};

  static Digest from_bytes(std::span<const std::uint8_t, size> raw) {
    Digest d;
    std::copy(raw.begin(), raw.end(), d.bytes.begin());
    return d;
  }

  std::string hex() const {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * size);
    for (auto b : bytes) {
      out.push_back(digits[b >> 4]);
      out.push_back(digits[b & 0xf]);
    }
    return out;
  }

  std::span<const std::uint8_t> span() const { return bytes; }

  friend auto operator<=>(const Digest&, const Digest&) = default;
};

inline Digest hash(std::span<const std::uint8_t> data) {
  Digest out;
  SHA256(data.data(), data.size(), out.bytes.data());
  return out;
}

inline Digest hash(std::string_view text) {
  return hash({reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

inline ByteWriter& operator<<(ByteWriter& w, const Digest& d) { return w.raw(d.bytes); }

struct PublicKey {
  Digest digest;
  std::string hex() const { return digest.hex(); }
  std::string short_hex() const { return digest.hex().substr(0, 12); }
  friend auto operator<=>(const PublicKey&, const PublicKey&) = default;
};

inline ByteWriter& operator<<(ByteWriter& w, const PublicKey& p) { return w << p.digest; }

// The signature reveals the secret-derived signing key next to the tag. That
// makes it forgeable by anyone who has seen one signature, which is fine for
// a simulation that only needs key/message binding.
struct Signature {
  Digest signing_key;
  Digest tag;
  friend bool operator==(const Signature&, const Signature&) = default;
};

namespace detail {
inline constexpr std::uint8_t kPublicTag = 0x50;
inline constexpr std::uint8_t kSigningKeyTag = 0x4b;
inline constexpr std::uint8_t kSignatureTag = 0x53;
inline constexpr std::uint8_t kMerkleLeafTag = 0x00;
inline constexpr std::uint8_t kMerkleNodeTag = 0x01;

inline Digest tagged(std::uint8_t tag, std::span<const std::uint8_t> a, std::span<const std::uint8_t> b = {}) {
  ByteWriter w;
  w.u8(tag).raw(a).raw(b);
  return hash(w.data());
}
}  // namespace detail

class KeyPair {
 public:
  static KeyPair from_seed(std::span<const std::uint8_t> seed) {
    KeyPair kp;
    kp.secret_ = hash(seed);
    kp.signing_key_ = detail::tagged(detail::kSigningKeyTag, kp.secret_.bytes);
    kp.public_.digest = detail::tagged(detail::kPublicTag, kp.signing_key_.bytes);
    return kp;
  }

  static KeyPair from_seed(std::string_view seed) {
    return from_seed({reinterpret_cast<const std::uint8_t*>(seed.data()), seed.size()});
  }

  const PublicKey& public_key() const { return public_; }

  Signature sign(std::span<const std::uint8_t> message) const {
    return {signing_key_, detail::tagged(detail::kSignatureTag, signing_key_.bytes, message)};
  }

 private:
  Digest secret_;
  Digest signing_key_;
  PublicKey public_;
};

inline Signature sign(const KeyPair& kp, std::span<const std::uint8_t> message) { return kp.sign(message); }

inline bool verify_signature(const PublicKey& pub, std::span<const std::uint8_t> message, const Signature& sig) {
  if (detail::tagged(detail::kPublicTag, sig.signing_key.bytes) != pub.digest) return false;
  return detail::tagged(detail::kSignatureTag, sig.signing_key.bytes, message) == sig.tag;
}

// ---------------------------------------------------------------------------
// Merkle tree
//
// Leaves are hashed as H(0x00 || leaf) and interior nodes as
// H(0x01 || left || right). A level with an odd number of nodes pairs its last
// node with itself.

enum class Side : std::uint8_t { left = 0, right = 1 };

struct MerkleSibling {
  Digest digest;
  Side side;
  friend bool operator==(const MerkleSibling&, const MerkleSibling&) = default;
};

struct MerkleProof {
  std::size_t leaf_index = 0;
  std::vector<MerkleSibling> siblings;
  friend bool operator==(const MerkleProof&, const MerkleProof&) = default;
};

inline ByteWriter& operator<<(ByteWriter& w, const MerkleProof& p) {
  w.u64(p.leaf_index).u32(static_cast<std::uint32_t>(p.siblings.size()));
  for (const auto& s : p.siblings) w.u8(static_cast<std::uint8_t>(s.side)) << s.digest;
  return w;
}

inline std::size_t merkle_height(std::size_t leaf_count) {
  std::size_t height = 0;
  for (std::size_t width = 1; width < leaf_count; width <<= 1) ++height;
  return height;
}

inline Digest merkle_leaf_hash(const Digest& leaf) {
  return detail::tagged(detail::kMerkleLeafTag, leaf.bytes);
}

inline Digest merkle_node_hash(const Digest& left, const Digest& right) {
  return detail::tagged(detail::kMerkleNodeTag, left.bytes, right.bytes);
}

class MerkleTree {
 public:
  explicit MerkleTree(std::vector<Digest> leaves) : leaves_(std::move(leaves)) {
    if (leaves_.empty()) throw Error("empty batch");
    std::vector<Digest> level;
    level.reserve(leaves_.size());
    for (const auto& leaf : leaves_) level.push_back(merkle_leaf_hash(leaf));
    levels_.push_back(std::move(level));
    while (levels_.back().size() > 1) {
      const auto& below = levels_.back();
      std::vector<Digest> above;
      above.reserve((below.size() + 1) / 2);
      for (std::size_t i = 0; i < below.size(); i += 2) {
        const Digest& right = i + 1 < below.size() ? below[i + 1] : below[i];
        above.push_back(merkle_node_hash(below[i], right));
      }
      levels_.push_back(std::move(above));
    }
  }

  const Digest& root() const { return levels_.back().front(); }
  std::size_t leaf_count() const { return leaves_.size(); }
  std::size_t height() const { return levels_.size() - 1; }
  std::span<const Digest> leaves() const { return leaves_; }

  MerkleProof prove(std::size_t index) const {
    if (index >= leaves_.size()) throw Error("merkle leaf index out of range");
    MerkleProof proof{index, {}};
    std::size_t pos = index;
    for (std::size_t lvl = 0; lvl + 1 < levels_.size(); ++lvl) {
      const auto& nodes = levels_[lvl];
      if (pos % 2 == 0) {
        const Digest& sib = pos + 1 < nodes.size() ? nodes[pos + 1] : nodes[pos];
        proof.siblings.push_back({sib, Side::right});
      } else {
        proof.siblings.push_back({nodes[pos - 1], Side::left});
      }
      pos /= 2;
    }
    return proof;
  }

 private:
  std::vector<Digest> leaves_;
  std::vector<std::vector<Digest>> levels_;
};

inline MerkleTree merkle_build(std::vector<Digest> leaves) { return MerkleTree(std::move(leaves)); }

inline MerkleProof merkle_prove(const MerkleTree& tree, std::size_t index) { return tree.prove(index); }

// Checks the path AND that every sibling side is the one forced by
// proof.leaf_index, so a valid path for one position never verifies for
// another. A duplicated last node must literally equal the running hash.
inline bool merkle_verify(const Digest& root, const Digest& leaf, const MerkleProof& proof, std::size_t leaf_count) {
  if (leaf_count == 0 || proof.leaf_index >= leaf_count) return false;
  if (proof.siblings.size() != merkle_height(leaf_count)) return false;

  Digest acc = merkle_leaf_hash(leaf);
  std::size_t pos = proof.leaf_index;
  std::size_t width = leaf_count;
  for (const auto& sib : proof.siblings) {
    const Side expected = pos % 2 == 0 ? Side::right : Side::left;
    if (sib.side != expected) return false;
    if (expected == Side::right) {
      if (pos + 1 == width && sib.digest != acc) return false;
      acc = merkle_node_hash(acc, sib.digest);
    } else {
      acc = merkle_node_hash(sib.digest, acc);
    }
    pos /= 2;
    width = (width + 1) / 2;
  }
  return acc == root;
}

}  // namespace fiberpool
