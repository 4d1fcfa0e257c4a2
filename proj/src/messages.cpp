#include "scap/messages.hpp"

#include <cstring>

namespace scap {

std::string_view to_string(MsgType t) {
  switch (t) {
    case MsgType::kNew: return "new";
    case MsgType::kPoll: return "poll";
    case MsgType::kPubKey: return "pubkey";
    case MsgType::kReq: return "req";
    case MsgType::kHb: return "hb";
    case MsgType::kLeReq: return "le_req";
    case MsgType::kLeHb: return "le_hb";
    case MsgType::kLeader: return "leader";
    case MsgType::kV: return "v";
    case MsgType::kAtt: return "att";
    case MsgType::kAgg: return "agg";
    case MsgType::kRes: return "res";
    case MsgType::kCollect: return "collect";
  }
  return "unknown";
}

Bytes RequestPayload::encode() const {
  if (n > kCountMask) throw PreconditionError("device count exceeds 30 bits");
  Bytes out;
  out.reserve(8 + tss.size() * kDigestBytes);
  put_be32(out, ts);
  put_be32(out, n | (boolean_mode ? kBooleanFlag : 0) | (dynamic_mode ? kDynamicFlag : 0));
  for (const auto& d : tss) out.insert(out.end(), d.bytes.begin(), d.bytes.end());
  return out;
}

RequestPayload RequestPayload::decode(ByteView in) {
  if (in.size() < 8 || (in.size() - 8) % kDigestBytes != 0) throw DecodeError("malformed request payload");
  RequestPayload p;
  p.ts = get_be32(in, 0);
  const std::uint32_t f = get_be32(in, 4);
  p.n = f & kCountMask;
  p.boolean_mode = (f & kBooleanFlag) != 0;
  p.dynamic_mode = (f & kDynamicFlag) != 0;
  p.tss.resize((in.size() - 8) / kDigestBytes);
  for (std::size_t i = 0; i < p.tss.size(); ++i)
    std::memcpy(p.tss[i].bytes.data(), in.data() + 8 + i * kDigestBytes, kDigestBytes);
  return p;
}

}  // namespace scap
