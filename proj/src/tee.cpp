#include "scap/tee.hpp"

#include <algorithm>
#include <cmath>

namespace scap {

std::uint32_t TimeConfig::period_at(double clock) const {
  return static_cast<std::uint32_t>(std::floor(clock / delta)) + 1;
}

void TimeConfig::validate(bool allow_unsafe) const {
  if (!(delta > 0)) throw ConfigError("delta must be positive");
  if (!(delta_hb > 0) || !(delta_hb < delta)) throw ConfigError("delta_hb must satisfy 0 < delta_hb < delta");
  if (!(t_attack > 0)) throw ConfigError("t_attack must be positive");
  if (!allow_unsafe && delta > t_attack / 2)
    throw ConfigError("delta exceeds t_attack/2 (a device could be captured within one heartbeat period)");
}

Phase checktime(std::uint32_t t, double clock, const TimeConfig& cfg) {
  if (t < 1) return Phase::kNone;
  const double start = cfg.period_start(t);
  if (clock >= start && clock < start + cfg.delta_hb) return Phase::kHb;
  if (clock >= start + cfg.delta_hb && clock < start + cfg.delta) return Phase::kLe;
  return Phase::kNone;
}

// ---------------------------------------------------------------------------

const ChannelEntry* TeeState::channel(DeviceId peer) const {
  for (const auto& c : channel_keys)
    if (c.peer == peer) return &c;
  return nullptr;
}

ChannelEntry* TeeState::channel(DeviceId peer) {
  for (auto& c : channel_keys)
    if (c.peer == peer) return &c;
  return nullptr;
}

void TeeState::set_channel(DeviceId peer, const SymmetricKey& key, bool confirmed) {
  if (auto* c = channel(peer)) {
    c->key = key;
    c->confirmed = confirmed;
    return;
  }
  channel_keys.push_back(ChannelEntry{peer, key, confirmed});
}

std::optional<SymmetricKey> TeeState::current_heartbeat(std::uint32_t p) const {
  if (t == p + 1) return hb_cur;
  if (t == p) return hb_next;
  return std::nullopt;
}

void FirmwareImage::patch(std::size_t offset, std::uint8_t mask) {
  if (offset >= size()) throw PreconditionError("firmware patch offset out of range");
  patch_ = std::make_shared<Patch>(Patch{offset, mask, std::nullopt});
}

Digest FirmwareImage::measure(const CryptoBackend& crypto) const {
  static const Bytes kEmpty;
  if (!base_) return crypto.hash(kEmpty);
  if (patch_) {
    if (!patch_->digest) {
      Bytes copy = *base_->bytes;
      copy[patch_->offset] ^= patch_->mask;
      patch_->digest = crypto.hash(copy);
    }
    return *patch_->digest;
  }
  if (!base_->digest) base_->digest = crypto.hash(*base_->bytes);
  return *base_->digest;
}

void Env::broadcast(const Frame& f, DeviceId except) {
  for (DeviceId nb : neighbors)
    if (nb != except) send(nb, f);
}

// ---------------------------------------------------------------------------

namespace {

constexpr std::size_t kMaxDeferred = 4;

Bytes zero_block() { return Bytes(kKeyBytes, 0); }

bool is_zero_block(const Bytes& b) {
  return b.size() == kKeyBytes && std::all_of(b.begin(), b.end(), [](std::uint8_t v) { return v == 0; });
}

Bytes hb_and_leader(const SymmetricKey& hb, DeviceId d) {
  Bytes out(hb.bytes.begin(), hb.bytes.end());
  put_be32(out, d);
  return out;
}

std::optional<std::pair<SymmetricKey, DeviceId>> parse_hb_leader(const Bytes& b) {
  if (b.size() != kKeyBytes + 4) return std::nullopt;
  SymmetricKey k;
  std::copy(b.begin(), b.begin() + kKeyBytes, k.bytes.begin());
  return std::make_pair(k, get_be32(b, kKeyBytes));
}

}  // namespace

Tee::Tee(TeeState state, const ProtocolConfig* cfg, FirmwareImage firmware)
    : st_(std::move(state)), cfg_(cfg), fw_(std::move(firmware)) {}

std::optional<SymmetricKey> Tee::session_key(DeviceId peer, double now) const {
  const auto* c = st_.channel(peer);
  if (!c) return std::nullopt;
  const auto hb = st_.current_heartbeat(cfg_->time.period_at(now));
  if (!hb) return std::nullopt;
  return *hb ^ c->key;
}

std::optional<Bytes> Tee::open(Env& env, DeviceId peer, const SymmetricKey& key, const Frame& f) {
  env.meter.charge(env.cost.adec(f.body.size()));
  auto pt = env.crypto.adec(key, f.ciphertext());
  if (!pt) {
    env.note(NoteKind::kAuthFailure, peer);
    return std::nullopt;
  }
  if (peer != kOperatorId)
    if (auto* c = st_.channel(peer)) c->confirmed = true;
  return pt;
}

Frame Tee::seal(Env& env, MsgType type, const SymmetricKey& key, ByteView plaintext) {
  env.meter.charge(env.cost.aenc(plaintext.size()));
  return Frame::sealed(type, env.crypto.aenc(key, plaintext));
}

bool Tee::recently(MsgType type, DeviceId peer, double now) {
  std::erase_if(outstanding_, [&](const Outstanding& o) { return now - o.at >= cfg_->retry_s; });
  for (const auto& o : outstanding_)
    if (o.type == type && (peer == kNoDevice || o.peer == peer)) return true;
  return false;
}

bool Tee::ensure_channel(Env& env, DeviceId peer, Deferred d) {
  if (st_.channel(peer)) return true;
  auto it = std::find_if(kx_.begin(), kx_.end(), [&](const PendingKx& p) { return p.peer == peer; });
  if (it == kx_.end()) {
    kx_.push_back(PendingKx{peer, true, env.now, {}});
    it = kx_.end() - 1;
    env.send(peer, Frame::plain(MsgType::kPubKey, Bytes(st_.keypair.public_value.begin(), st_.keypair.public_value.end())));
  } else if (env.now - it->started >= cfg_->retry_s) {
    it->started = env.now;
    it->initiated = true;
    env.send(peer, Frame::plain(MsgType::kPubKey, Bytes(st_.keypair.public_value.begin(), st_.keypair.public_value.end())));
  }
  const bool dup = std::any_of(it->queue.begin(), it->queue.end(), [&](const Deferred& q) { return q.kind == d.kind; });
  if (!dup && it->queue.size() < kMaxDeferred) it->queue.push_back(std::move(d));
  return false;
}

// ---------------------------------------------------------------------------
// Dispatch

void Tee::on_frame(Env& env, DeviceId from, const Frame& f) {
  switch (f.type) {
    case MsgType::kNew: return on_new(env, from, f);
    case MsgType::kPoll: return on_poll(env, from);
    case MsgType::kPubKey: return on_pubkey(env, from, f);
    case MsgType::kReq: return on_req(env, from, f);
    case MsgType::kHb: return on_hb(env, from, f);
    case MsgType::kLeReq: return on_le_req(env, from, f);
    case MsgType::kLeHb: return on_le_hb(env, from, f);
    case MsgType::kLeader: return on_leader(env, from, f);
    case MsgType::kV:
      if (from == kOperatorId) on_v(env, f);
      return;
    case MsgType::kAtt: return on_att(env, from, f);
    case MsgType::kAgg: return on_agg(env, from, f);
    case MsgType::kCollect:
      if (from == kOperatorId) on_collect(env, f);
      return;
    case MsgType::kRes:
      return;  // only the operator consumes reports
  }
}

void Tee::on_timer(Env& env, TimerKind kind, std::uint32_t tag) {
  if (kind == TimerKind::kChildTimeout && session_ && session_->req.ts == tag && !session_->req.dynamic_mode) {
    session_->timed_out = true;
    try_report(env);
  }
}

void Tee::on_neighbor_up(Env& env, DeviceId peer) {
  if (cfg_->polling) {
    // A new radio contact gets a poll if we still lack the heartbeat,
    // otherwise an announcement.
    if (lacking(env.now))
      env.send(peer, Frame::plain(MsgType::kPoll));
    else if (holder(env.now) || le_participant(env.now))
      env.send(peer, Frame::plain(MsgType::kNew));
  }
  if (!session_ || !session_->req.dynamic_mode || session_->aborted) return;
  if (env.now > session_->req.ts + cfg_->request_window_s) return;
  send_att(env, peer);
}

// ---------------------------------------------------------------------------
// Channel establishment

void Tee::on_pubkey(Env& env, DeviceId from, const Frame& f) {
  if (f.body.size() != kPublicBytes || from == kOperatorId) return;
  if (const auto* c = st_.channel(from); c && c->confirmed) return;
  std::array<std::uint8_t, kPublicBytes> peer_pk{};
  std::copy(f.body.begin(), f.body.end(), peer_pk.begin());
  env.meter.charge(env.cost.key_exchange);
  const SymmetricKey k = env.crypto.key_exchange(st_.keypair.secret_value, peer_pk);
  const auto* existing = st_.channel(from);
  const bool same = existing && existing->key == k;
  st_.set_channel(from, k, false);
  env.note(NoteKind::kKeyDerived, from);

  auto it = std::find_if(kx_.begin(), kx_.end(), [&](const PendingKx& p) { return p.peer == from; });
  const bool initiated = it != kx_.end() && it->initiated;
  if (!initiated && !same)
    env.send(from, Frame::plain(MsgType::kPubKey, Bytes(st_.keypair.public_value.begin(), st_.keypair.public_value.end())));
  if (it == kx_.end()) return;
  std::vector<Deferred> queue = std::move(it->queue);
  kx_.erase(it);
  for (auto& d : queue) {
    if (d.kind == Deferred::kReprocess)
      on_new(env, from, d.frame);
    else
      send_att(env, from);
  }
}

// ---------------------------------------------------------------------------
// Heartbeat transmission

bool Tee::leader_emit(Env& env) {
  if (st_.self_id != st_.d_min || phase(st_.t, env.now) != Phase::kHb) return false;
  st_.hb_cur = st_.hb_next;
  st_.hb_next = sample_heartbeat(env.rng);
  ++st_.t;
  env.note(NoteKind::kLeaderEmitted);
  env.broadcast(Frame::plain(MsgType::kNew));
  return true;
}

void Tee::on_new(Env& env, DeviceId from, const Frame& f) {
  if (from == kOperatorId) return;
  const Phase p = phase(st_.t, env.now);
  const bool relevant = p == Phase::kHb || p == Phase::kLe || le_participant(env.now);
  if (!relevant) return;
  if (!ensure_channel(env, from, Deferred{Deferred::kReprocess, f})) return;

  if (p == Phase::kHb) {
    if (recently(MsgType::kReq, kNoDevice, env.now)) return;
    st_.hb_cur = st_.hb_next;
    const auto key = *session_key(from, env.now);
    env.send(from, seal(env, MsgType::kReq, key, zero_block()));
    outstanding_.push_back(Outstanding{from, MsgType::kReq, env.now});
    return;
  }
  if (p == Phase::kLe) le_init(env);
  if (!le_participant(env.now) || recently(MsgType::kLeReq, from, env.now)) return;
  const auto key = *session_key(from, env.now);
  env.send(from, seal(env, MsgType::kLeReq, key, zero_block()));
  outstanding_.push_back(Outstanding{from, MsgType::kLeReq, env.now});
}

void Tee::on_poll(Env& env, DeviceId from) {
  if (from != kOperatorId && holder(env.now)) env.send(from, Frame::plain(MsgType::kNew));
}

void Tee::on_req(Env& env, DeviceId from, const Frame& f) {
  if (!holder(env.now)) return;
  const auto key = session_key(from, env.now);
  if (!key) return;
  const auto pt = open(env, from, *key, f);
  if (!pt || !is_zero_block(*pt)) return;
  env.send(from, seal(env, MsgType::kHb, *key, st_.hb_next.bytes));
}

void Tee::on_hb(Env& env, DeviceId from, const Frame& f) {
  if (!lacking(env.now)) return;
  const auto key = session_key(from, env.now);
  if (!key) return;
  const auto pt = open(env, from, *key, f);
  if (!pt || pt->size() != kKeyBytes) return;
  st_.hb_cur = st_.hb_next;
  std::copy(pt->begin(), pt->end(), st_.hb_next.bytes.begin());
  ++st_.t;
  std::erase_if(outstanding_, [](const Outstanding& o) { return o.type == MsgType::kReq; });
  env.note(NoteKind::kHeartbeatAcquired, from);
  env.broadcast(Frame::plain(MsgType::kNew), from);
}

void Tee::poll_tick(Env& env) {
  if (!cfg_->polling) return;
  if (lacking(env.now)) env.broadcast(Frame::plain(MsgType::kPoll));
}

// ---------------------------------------------------------------------------
// Leader election

bool Tee::le_init(Env& env) {
  if (phase(st_.t, env.now) != Phase::kLe) return false;
  st_.hb_cur = st_.hb_next;
  st_.hb_next = sample_heartbeat(env.rng);
  ++st_.t;
  st_.d_min = st_.self_id;
  env.note(NoteKind::kLeInit);
  env.broadcast(Frame::plain(MsgType::kNew));
  return true;
}

void Tee::on_le_req(Env& env, DeviceId from, const Frame& f) {
  if (!le_participant(env.now)) return;
  const auto key = session_key(from, env.now);
  if (!key) return;
  const auto pt = open(env, from, *key, f);
  if (!pt || !is_zero_block(*pt)) return;
  env.send(from, seal(env, MsgType::kLeHb, *key, hb_and_leader(st_.hb_next, st_.d_min)));
}

void Tee::on_le_hb(Env& env, DeviceId from, const Frame& f) {
  if (!le_participant(env.now)) return;
  const auto key = session_key(from, env.now);
  if (!key) return;
  const auto pt = open(env, from, *key, f);
  if (!pt) return;
  const auto parsed = parse_hb_leader(*pt);
  if (!parsed) return;
  std::erase_if(outstanding_, [&](const Outstanding& o) { return o.type == MsgType::kLeReq && o.peer == from; });
  bool changed = false;
  if (parsed->second < st_.d_min) {
    st_.hb_next = parsed->first;
    st_.d_min = parsed->second;
    changed = true;
  }
  env.send(from, seal(env, MsgType::kLeader, *key, hb_and_leader(st_.hb_next, st_.d_min)));
  if (changed) {
    env.note(NoteKind::kLeUpdated, from);
    env.broadcast(Frame::plain(MsgType::kNew), from);
  }
}

void Tee::on_leader(Env& env, DeviceId from, const Frame& f) {
  if (!le_participant(env.now)) return;
  const auto key = session_key(from, env.now);
  if (!key) return;
  const auto pt = open(env, from, *key, f);
  if (!pt) return;
  const auto parsed = parse_hb_leader(*pt);
  if (!parsed || parsed->second >= st_.d_min) return;
  st_.hb_next = parsed->first;
  st_.d_min = parsed->second;
  env.note(NoteKind::kLeUpdated, from);
  env.broadcast(Frame::plain(MsgType::kNew), from);
}

// ---------------------------------------------------------------------------
// Attestation

bool Tee::measure_software(Env& env, const std::vector<Digest>& tss) {
  if (tss.empty()) {
    st_.sw_trustworthy = true;
    return true;
  }
  env.meter.charge(env.cost.hash(fw_.size()));
  st_.sw_trustworthy = fw_.type() < tss.size() && fw_.measure(env.crypto) == tss[fw_.type()];
  return st_.sw_trustworthy;
}

bool Tee::valid_request(std::uint32_t ts, double now) const {
  return ts > last_ts_ && static_cast<double>(ts) + cfg_->request_window_s >= now;
}

void Tee::on_v(Env& env, const Frame& f) {
  const auto pt = open(env, kOperatorId, st_.dk, f);
  if (!pt) return;
  RequestPayload req;
  try {
    req = RequestPayload::decode(*pt);
  } catch (const DecodeError&) {
    return;
  }
  if (!valid_request(req.ts, env.now)) return;
  begin_session(env, req, kOperatorId, true);
}

void Tee::begin_session(Env& env, const RequestPayload& req, DeviceId parent, bool entry) {
  last_ts_ = req.ts;
  session_ = std::make_unique<AttSession>();
  AttSession& s = *session_;
  s.req = req;
  s.parent = parent;
  s.entry = entry;
  env.note(NoteKind::kAttJoined, parent);

  // Forward before measuring so the request keeps moving while this device hashes.
  for (DeviceId nb : env.neighbors) {
    if (nb == parent) continue;
    if (!req.dynamic_mode) s.pending.push_back(nb);
    send_att(env, nb);
  }

  const bool ok = measure_software(env, req.tss);
  s.measured = true;
  if (!ok) {
    s.aborted = true;
    env.note(NoteKind::kRecoveryRequested);
    return;
  }
  if (req.dynamic_mode) {
    const std::uint32_t n_s = req.n + cfg_->s;
    env.meter.charge(env.cost.hash(kKeyBytes + 4));
    s.dyn = DynamicReport::single(req.n, cfg_->s, st_.self_id, dynamic_attest(env.crypto, st_.dk, req.ts, n_s));
    return;
  }
  env.meter.charge(env.cost.aenc(kKeyBytes));
  s.tree = TreeReport::single(st_.self_id, tree_attest(env.crypto, st_.dk, req.ts), req.boolean_mode);
  if (!s.pending.empty()) {
    // Deeper devices join later and so time out earlier, leaving their
    // partial reports time to reach a parent that is still waiting.
    const double joined = env.now - static_cast<double>(req.ts);
    const double at = static_cast<double>(req.ts) + cfg_->child_timeout_s - 2.0 * joined;
    env.timers.push_back(TimerRequest{TimerKind::kChildTimeout, std::max(at, env.now), req.ts});
  }
  try_report(env);
}

void Tee::send_att(Env& env, DeviceId peer) {
  if (!session_) return;
  if (!ensure_channel(env, peer, Deferred{Deferred::kSendAtt, {}})) return;
  const auto key = session_key(peer, env.now);
  if (!key) return;
  env.send(peer, seal(env, MsgType::kAtt, *key, session_->req.encode()));
}

void Tee::on_att(Env& env, DeviceId from, const Frame& f) {
  if (from == kOperatorId) return;
  const auto key = session_key(from, env.now);
  if (!key) return;
  const auto pt = open(env, from, *key, f);
  if (!pt) return;
  RequestPayload req;
  try {
    req = RequestPayload::decode(*pt);
  } catch (const DecodeError&) {
    return;
  }
  if (session_ && session_->req.ts == req.ts) {
    if (session_->aborted) return;
    if (req.dynamic_mode) {
      send_dynamic_report(env, from);
    } else {
      // Already attached elsewhere in the spanning tree: acknowledge with an empty report.
      TreeReport empty;
      empty.boolean_mode = req.boolean_mode;
      env.send(from, seal(env, MsgType::kAgg, *key, serialize(empty, req.n)));
    }
    return;
  }
  if (!valid_request(req.ts, env.now)) return;
  begin_session(env, req, from, false);
  if (req.dynamic_mode && !session_->aborted) send_dynamic_report(env, from);
}

Bytes Tee::dynamic_report_body() const {
  Bytes body;
  put_be32(body, session_->req.ts);
  const Bytes enc = rle_encode(session_->dyn);
  body.insert(body.end(), enc.begin(), enc.end());
  return body;
}

void Tee::send_dynamic_report(Env& env, DeviceId peer) {
  const auto key = session_key(peer, env.now);
  if (!key) return;
  env.send(peer, seal(env, MsgType::kAgg, *key, dynamic_report_body()));
}

void Tee::on_agg(Env& env, DeviceId from, const Frame& f) {
  if (!session_ || session_->aborted || from == kOperatorId) return;
  AttSession& s = *session_;
  if (!s.req.dynamic_mode) {
    auto it = std::find(s.pending.begin(), s.pending.end(), from);
    if (s.reported || it == s.pending.end()) return;
    const auto key = session_key(from, env.now);
    if (!key) return;
    const auto pt = open(env, from, *key, f);
    if (!pt) return;
    try {
      s.tree = tree_merge(s.tree, deserialize_tree(*pt, s.req.n));
    } catch (const std::exception&) {
      return;
    }
    s.pending.erase(it);
    try_report(env);
    return;
  }

  const auto key = session_key(from, env.now);
  if (!key) return;
  const auto pt = open(env, from, *key, f);
  if (!pt || pt->size() < 4 || get_be32(*pt, 0) != s.req.ts) return;
  DynamicReport theirs;
  try {
    theirs = rle_decode_report(ByteView(*pt).subspan(4), s.req.n, cfg_->s);
  } catch (const DecodeError&) {
    return;
  }
  if (dynamic_merge_into(s.dyn, theirs)) {
    for (DeviceId nb : env.neighbors)
      if (nb != from || !(theirs == s.dyn)) send_dynamic_report(env, nb);
  } else if (!(theirs == s.dyn)) {
    send_dynamic_report(env, from);
  }
}

void Tee::try_report(Env& env) {
  AttSession& s = *session_;
  if (s.req.dynamic_mode || s.reported || s.aborted || !s.measured) return;
  if (!s.pending.empty() && !s.timed_out) return;
  const Bytes body = serialize(s.tree, s.req.n);
  if (s.entry) {
    env.send(kOperatorId, seal(env, MsgType::kRes, st_.dk, body));
  } else {
    const auto key = session_key(s.parent, env.now);
    if (!key) return;
    env.send(s.parent, seal(env, MsgType::kAgg, *key, body));
  }
  s.reported = true;
  env.note(NoteKind::kReportSent, s.parent);
}

void Tee::on_collect(Env& env, const Frame& f) {
  const auto pt = open(env, kOperatorId, st_.dk, f);
  if (!pt || pt->size() != 4 || !session_ || !session_->req.dynamic_mode || session_->aborted) return;
  if (get_be32(*pt, 0) != session_->req.ts) return;
  env.send(kOperatorId, seal(env, MsgType::kRes, st_.dk, dynamic_report_body()));
}

}  // namespace scap
