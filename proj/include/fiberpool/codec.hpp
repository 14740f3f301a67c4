#pragma once

// Canonical byte encoding used for every digest in the protocol.
//
//   integers   fixed-width big-endian (u8 / u32 / u64)
//   doubles    IEEE-754 bit pattern as big-endian u64
//   digests    32 raw bytes, no prefix
//   bytes      u32 big-endian length, then the bytes
//   rationals  u8 sign (0 = non-negative, 1 = negative), then numerator
//              magnitude and denominator as length-prefixed big-endian bytes
//
// Commitments are only reproducible across nodes if every field goes through
// this writer in a fixed order.

#include <bit>
#include <cstdint>
#include <iterator>
#include <span>
#include <string_view>
#include <vector>

#include "fiberpool/amount.hpp"

namespace fiberpool {

class ByteWriter {
 public:
  ByteWriter() { buf_.reserve(128); }

  ByteWriter& u8(std::uint8_t v) {
    buf_.push_back(v);
    return *this;
  }

  ByteWriter& u32(std::uint32_t v) {
    for (int shift = 24; shift >= 0; shift -= 8) buf_.push_back(static_cast<std::uint8_t>(v >> shift));
    return *this;
  }

  ByteWriter& u64(std::uint64_t v) {
    for (int shift = 56; shift >= 0; shift -= 8) buf_.push_back(static_cast<std::uint8_t>(v >> shift));
    return *this;
  }

  ByteWriter& f64(double v) { return u64(std::bit_cast<std::uint64_t>(v)); }

  ByteWriter& raw(std::span<const std::uint8_t> bytes) {
    buf_.insert(buf_.end(), bytes.begin(), bytes.end());
    return *this;
  }

  ByteWriter& bytes(std::span<const std::uint8_t> bytes) {
    u32(static_cast<std::uint32_t>(bytes.size()));
    return raw(bytes);
  }

  ByteWriter& text(std::string_view s) {
    return bytes({reinterpret_cast<const std::uint8_t*>(s.data()), s.size()});
  }

  ByteWriter& rational(const Rational& r) {
    auto num = boost::multiprecision::numerator(r);
    auto den = boost::multiprecision::denominator(r);
    u8(num < 0 ? 1 : 0);
    if (num < 0) num = -num;
    magnitude(num);
    magnitude(den);
    return *this;
  }

  const std::vector<std::uint8_t>& data() const& { return buf_; }
  std::vector<std::uint8_t> take() && { return std::move(buf_); }

 private:
  void magnitude(const boost::multiprecision::cpp_int& v) {
    std::vector<std::uint8_t> out;
    if (v != 0) boost::multiprecision::export_bits(v, std::back_inserter(out), 8);
    bytes(out);
  }

  std::vector<std::uint8_t> buf_;
};

}  // namespace fiberpool
