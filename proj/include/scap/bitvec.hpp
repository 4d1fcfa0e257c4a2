#pragma once

#include <bit>
#include <cstdint>
#include <vector>

#include "scap/common.hpp"

namespace scap {

/// Fixed-size bit vector. Packed LSB-first: bit i lives in byte i/8 at mask 1 << (i%8).
class BitVector {
 public:
  BitVector() = default;
  explicit BitVector(std::size_t bits) : bits_(bits), words_((bits + 63) / 64, 0) {}

  std::size_t size() const { return bits_; }

  bool test(std::size_t i) const { return (words_[i / 64] >> (i % 64)) & 1u; }
  void set(std::size_t i, bool v = true) {
    const std::uint64_t mask = std::uint64_t{1} << (i % 64);
    if (v)
      words_[i / 64] |= mask;
    else
      words_[i / 64] &= ~mask;
  }

  std::size_t popcount() const {
    std::size_t c = 0;
    for (auto w : words_) c += static_cast<std::size_t>(std::popcount(w));
    return c;
  }

  bool none() const {
    for (auto w : words_)
      if (w) return false;
    return true;
  }

  /// True iff every bit set in other is also set here.
  bool contains(const BitVector& other) const {
    if (other.bits_ != bits_) return false;
    for (std::size_t k = 0; k < words_.size(); ++k)
      if ((other.words_[k] & ~words_[k]) != 0) return false;
    return true;
  }

  BitVector& operator|=(const BitVector& other) {
    if (other.bits_ != bits_) throw PreconditionError("bit vector size mismatch");
    for (std::size_t k = 0; k < words_.size(); ++k) words_[k] |= other.words_[k];
    return *this;
  }

  friend bool operator==(const BitVector&, const BitVector&) = default;

  /// Appends the packed bits to out starting at absolute bit offset bit_offset
  /// of out's bit stream (out is grown as needed).
  void pack_into(Bytes& out, std::size_t bit_offset) const {
    const std::size_t need = (bit_offset + bits_ + 7) / 8;
    if (out.size() < need) out.resize(need, 0);
    for (std::size_t i = 0; i < bits_; ++i)
      if (test(i)) {
        const std::size_t b = bit_offset + i;
        out[b / 8] |= static_cast<std::uint8_t>(1u << (b % 8));
      }
  }

  static BitVector unpack(ByteView in, std::size_t bit_offset, std::size_t bits) {
    if ((bit_offset + bits + 7) / 8 > in.size()) throw DecodeError("bit vector truncated");
    BitVector v(bits);
    for (std::size_t i = 0; i < bits; ++i) {
      const std::size_t b = bit_offset + i;
      if ((in[b / 8] >> (b % 8)) & 1u) v.set(i);
    }
    return v;
  }

  std::string to_string() const {
    std::string s(bits_, '0');
    for (std::size_t i = 0; i < bits_; ++i)
      if (test(i)) s[i] = '1';
    return s;
  }

 private:
  std::size_t bits_ = 0;
  std::vector<std::uint64_t> words_;
};

}  // namespace scap
