#pragma once

#include <cstdint>
#include <vector>

#include "scap/bitvec.hpp"
#include "scap/common.hpp"
#include "scap/crypto.hpp"

namespace scap {

/// Tree-mode attest: HMAC-SHA-512(dk, be32(ts)) truncated to 16 bytes.
Tag16 tree_attest(const CryptoBackend& crypto, const SymmetricKey& dk, std::uint32_t ts);

/// Reduces a digest to [0, n_s) by reading it as a big-endian integer mod n_s.
std::uint32_t compress(const Digest& digest, std::uint32_t n_s);

/// Dynamic-mode attest bit position: compress(H(dk || be32(ts)), n_s).
std::uint32_t dynamic_attest(const CryptoBackend& crypto, const SymmetricKey& dk, std::uint32_t ts,
                             std::uint32_t n_s);

struct Attest {
  DeviceId device = 0;
  Tag16 tag{};
  std::uint32_t bit = 0;
};

/// Computes both attest forms; bit is only meaningful when n_s > 0.
Attest make_attest(const CryptoBackend& crypto, DeviceId device, const SymmetricKey& dk, std::uint32_t ts,
                   std::uint32_t n_s = 0);

/// XOR-aggregated report for spanning-tree attestation.
///
/// Wire layout: flag byte, description, 16-byte aggregate. Flag 0 is a
/// boolean-mode report with no description. Flag 1 is an id list (varint
/// count, then each id-1 packed LSB-first in max(1, ceil(log2 n)) bits).
/// Flag 2 is an n-bit presence vector. The list is used iff
/// count * ceil(log2 n) < n.
struct TreeReport {
  bool boolean_mode = false;
  std::vector<DeviceId> ids;  // ascending; empty in boolean mode
  Tag16 aggregate{};

  static TreeReport single(DeviceId id, const Tag16& attest, bool boolean_mode);
  std::size_t count() const { return ids.size(); }
  friend bool operator==(const TreeReport&, const TreeReport&) = default;
};

/// Union of descriptions, XOR of aggregates. Throws PreconditionError if the
/// descriptions overlap or the modes differ.
TreeReport tree_merge(const TreeReport& a, const TreeReport& b);

std::size_t serialized_size(const TreeReport& r, std::uint32_t n);
Bytes serialize(const TreeReport& r, std::uint32_t n);
TreeReport deserialize_tree(ByteView in, std::uint32_t n);

/// OR-aggregated report for dynamic networks: n device bits followed by
/// n + s attest bits.
struct DynamicReport {
  std::uint32_t n = 0;
  std::uint32_t s = 0;
  BitVector devices;
  BitVector attest_bits;

  DynamicReport() = default;
  DynamicReport(std::uint32_t n_devices, std::uint32_t s_bits)
      : n(n_devices), s(s_bits), devices(n_devices), attest_bits(n_devices + s_bits) {}

  std::uint32_t n_s() const { return n + s; }
  static DynamicReport single(std::uint32_t n, std::uint32_t s, DeviceId id, std::uint32_t bit);
  friend bool operator==(const DynamicReport&, const DynamicReport&) = default;
};

/// Bitwise OR; throws PreconditionError on mismatched (n, s).
DynamicReport dynamic_merge(const DynamicReport& a, const DynamicReport& b);
/// In-place OR; returns true iff acc changed.
bool dynamic_merge_into(DynamicReport& acc, const DynamicReport& b);

/// ceil((2n + s) / 8).
std::size_t raw_size(std::uint32_t n, std::uint32_t s);
Bytes serialize_raw(const DynamicReport& r);
DynamicReport deserialize_raw(ByteView in, std::uint32_t n, std::uint32_t s);

/// Run-length form of a bit vector. Byte 0 is 0 for runs or 1 for a raw
/// fallback. Runs are LEB128 varints alternating zero/one, starting with a
/// (possibly empty) zero run. Output never exceeds the raw packing plus one byte.
Bytes rle_encode(const BitVector& v);
BitVector rle_decode(ByteView in, std::size_t bits);

/// RLE over the concatenated raw report bit stream.
Bytes rle_encode(const DynamicReport& r);
DynamicReport rle_decode_report(ByteView in, std::uint32_t n, std::uint32_t s);

/// Per-device operator verdict; bit k-1 describes device k.
struct Verdict {
  BitVector bits;
  bool accepted = false;

  static Verdict reject(std::uint32_t n) { return Verdict{BitVector(n), false}; }
  bool all_healthy() const { return accepted && bits.popcount() == bits.size(); }
};

/// device_keys[k-1] is dk of device k.
Verdict verify_tree(const CryptoBackend& crypto, const TreeReport& report, std::uint32_t ts,
                    const std::vector<SymmetricKey>& device_keys, std::uint32_t n);

Verdict verify_dynamic(const CryptoBackend& crypto, const DynamicReport& report, std::uint32_t ts,
                       const std::vector<SymmetricKey>& device_keys, std::uint32_t n, std::uint32_t s);

}  // namespace scap
