#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace scap {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

/// Device identifiers start at 1; 0 addresses the network operator.
using DeviceId = std::uint32_t;
inline constexpr DeviceId kOperatorId = 0;
/// Sentinel for "no device".
inline constexpr DeviceId kNoDevice = 0xFFFFFFFFu;

/// Raised when a caller violates an operation's precondition.
class PreconditionError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Raised when a serialized structure cannot be parsed.
class DecodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised for invalid scenario configuration. The message names the violated constraint.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a simulator invariant fails during a run.
class InvariantViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void put_be32(Bytes& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

inline std::uint32_t get_be32(ByteView in, std::size_t offset) {
  if (offset + 4 > in.size()) throw DecodeError("truncated 32-bit field");
  return (std::uint32_t{in[offset]} << 24) | (std::uint32_t{in[offset + 1]} << 16) |
         (std::uint32_t{in[offset + 2]} << 8) | std::uint32_t{in[offset + 3]};
}

/// LEB128 unsigned varint.
inline void put_varint(Bytes& out, std::uint64_t v) {
  while (v >= 0x80) {
    out.push_back(static_cast<std::uint8_t>(v | 0x80));
    v >>= 7;
  }
  out.push_back(static_cast<std::uint8_t>(v));
}

inline std::uint64_t get_varint(ByteView in, std::size_t& offset) {
  std::uint64_t v = 0;
  for (int shift = 0; shift < 64; shift += 7) {
    if (offset >= in.size()) throw DecodeError("truncated varint");
    const std::uint8_t b = in[offset++];
    v |= std::uint64_t{b & 0x7Fu} << shift;
    if ((b & 0x80) == 0) return v;
  }
  throw DecodeError("varint overflow");
}

inline std::size_t varint_size(std::uint64_t v) {
  std::size_t n = 1;
  while (v >= 0x80) {
    v >>= 7;
    ++n;
  }
  return n;
}

/// Smallest b with 2^b >= n (0 for n <= 1).
inline unsigned ceil_log2(std::uint64_t n) {
  unsigned b = 0;
  while ((std::uint64_t{1} << b) < n) ++b;
  return b;
}

std::string to_hex(ByteView bytes);
Bytes from_hex(const std::string& hex);

}  // namespace scap
