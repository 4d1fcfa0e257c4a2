#include "scap/operator.hpp"

#include <cmath>

namespace scap {

Operator::Enrollment Operator::enroll(std::uint32_t n, Rng& rng, const CryptoBackend& crypto,
                                      std::vector<std::uint32_t> types) {
  if (n < 1) throw PreconditionError("enroll: n must be at least 1");
  if (!types.empty() && types.size() != n) throw PreconditionError("enroll: one type per device");
  Enrollment e{Operator(crypto), {}};
  const SymmetricKey hb_cur = sample_heartbeat(rng);
  const SymmetricKey hb_next = sample_heartbeat(rng);
  e.devices.reserve(n);
  e.op.device_keys_.reserve(n);
  for (std::uint32_t k = 1; k <= n; ++k) {
    TeeState st;
    st.t = 1;
    st.hb_cur = hb_cur;
    st.hb_next = hb_next;
    st.dk = random_key(rng);
    st.keypair = crypto.keypair_generate(rng);
    st.self_id = k;
    st.d_min = 1;
    st.device_type = types.empty() ? 0 : types[k - 1];
    e.op.device_keys_.push_back(st.dk);
    e.op.device_types_.push_back(st.device_type);
    e.devices.push_back(std::move(st));
  }
  return e;
}

TeeState Operator::enroll_late(Rng& rng, const CryptoBackend& crypto, const TeeState& reference,
                               std::uint32_t type) {
  TeeState st;
  st.t = reference.t;
  st.hb_cur = reference.hb_cur;
  st.hb_next = reference.hb_next;
  st.d_min = reference.d_min;
  st.dk = random_key(rng);
  st.keypair = crypto.keypair_generate(rng);
  st.self_id = n() + 1;
  st.device_type = type;
  device_keys_.push_back(st.dk);
  device_types_.push_back(type);
  return st;
}

const IssuedRequest* Operator::issued(std::uint32_t ts) const {
  auto it = issued_.find(ts);
  return it == issued_.end() ? nullptr : &it->second;
}

Frame Operator::issue_request(DeviceId entry, double clock, AttMode mode, bool informative) {
  if (entry < 1 || entry > n()) throw PreconditionError("issue_request: entry device is not enrolled");
  const auto now_s = static_cast<std::uint32_t>(std::floor(std::max(0.0, clock)));
  const std::uint32_t ts = std::max(now_s, last_ts_ + 1);
  last_ts_ = ts;
  RequestPayload req;
  req.ts = ts;
  req.n = n();
  req.boolean_mode = !informative;
  req.dynamic_mode = mode == AttMode::kDynamic;
  req.tss = tss_;
  issued_[ts] = IssuedRequest{entry, clock, mode, !informative, n()};
  return Frame::sealed(MsgType::kV, crypto_->aenc(device_keys_[entry - 1], req.encode()));
}

Frame Operator::collect_request(std::uint32_t ts) const {
  const auto* r = issued(ts);
  if (!r) throw PreconditionError("collect_request: unknown ts");
  Bytes body;
  put_be32(body, ts);
  return Frame::sealed(MsgType::kCollect, crypto_->aenc(device_keys_[r->entry - 1], body));
}

Verdict Operator::collect_and_verify(const Frame& msg_res, std::uint32_t ts, double clock) const {
  const auto* r = issued(ts);
  if (!r) return Verdict::reject(n());
  const std::uint32_t n_req = r->n;
  if (msg_res.type != MsgType::kRes || clock - r->issued_at > t_attack_) return Verdict::reject(n_req);
  const auto pt = crypto_->adec(device_keys_[r->entry - 1], msg_res.ciphertext());
  if (!pt) return Verdict::reject(n_req);
  try {
    if (r->mode == AttMode::kTree) {
      const TreeReport rep = deserialize_tree(*pt, n_req);
      if (rep.boolean_mode != r->boolean_mode) return Verdict::reject(n_req);
      return verify_tree(*crypto_, rep, ts, device_keys_, n_req);
    }
    if (pt->size() < 4 || get_be32(*pt, 0) != ts) return Verdict::reject(n_req);
    const DynamicReport rep = rle_decode_report(ByteView(*pt).subspan(4), n_req, s_);
    return verify_dynamic(*crypto_, rep, ts, device_keys_, n_req, s_);
  } catch (const DecodeError&) {
    return Verdict::reject(n_req);
  }
}

}  // namespace scap
