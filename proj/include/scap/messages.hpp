#pragma once

#include <cstdint>
#include <string_view>

#include "scap/common.hpp"
#include "scap/crypto.hpp"

namespace scap {

/// One-byte message identifiers.
enum class MsgType : std::uint8_t {
  kNew = 1,      // heartbeat announcement, unencrypted, empty body
  kPoll = 2,     // dynamic-mode heartbeat poll, unencrypted, empty body
  kPubKey = 3,   // channel establishment, 32-byte public value
  kReq = 4,      // heartbeat request under the session key
  kHb = 5,       // next heartbeat under the session key
  kLeReq = 6,    // leader-election request
  kLeHb = 7,     // candidate heartbeat and leader id
  kLeader = 8,   // requester's min-compare result
  kV = 9,        // operator request to the entry device, under dk
  kAtt = 10,     // forwarded request under the session key
  kAgg = 11,     // report under the session key
  kRes = 12,     // entry device report to the operator, under dk
  kCollect = 13  // operator collection request (dynamic mode), under dk
};

std::string_view to_string(MsgType t);

/// Attestation-class messages, for per-phase byte accounting.
inline bool is_attestation_type(MsgType t) {
  return t == MsgType::kV || t == MsgType::kAtt || t == MsgType::kAgg || t == MsgType::kRes ||
         t == MsgType::kCollect;
}

inline bool is_le_type(MsgType t) { return t == MsgType::kLeReq || t == MsgType::kLeHb || t == MsgType::kLeader; }

/// A message on the wire. body is either plaintext (kNew, kPoll, kPubKey) or
/// an AEAD payload; auth carries the AEAD nonce/tag and is excluded from the
/// byte count.
struct Frame {
  MsgType type = MsgType::kNew;
  Bytes body;
  Bytes auth;

  std::size_t wire_size() const { return 1 + body.size(); }

  Ciphertext ciphertext() const { return Ciphertext{body, auth}; }

  static Frame plain(MsgType t, Bytes body = {}) { return Frame{t, std::move(body), {}}; }
  static Frame sealed(MsgType t, Ciphertext ct) { return Frame{t, std::move(ct.payload), std::move(ct.auth_tag)}; }
};

/// Request header carried by kV / kAtt: ts, flagged device count, tss digests.
struct RequestPayload {
  std::uint32_t ts = 0;
  std::uint32_t n = 0;
  bool boolean_mode = false;
  bool dynamic_mode = false;
  /// Reference measurement per device type; missing entries are untrustworthy.
  std::vector<Digest> tss;

  Bytes encode() const;
  static RequestPayload decode(ByteView in);
};

inline constexpr std::uint32_t kBooleanFlag = 1u << 31;
inline constexpr std::uint32_t kDynamicFlag = 1u << 30;
inline constexpr std::uint32_t kCountMask = kDynamicFlag - 1;

}  // namespace scap
