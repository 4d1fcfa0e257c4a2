#include "scap/netsim/simulator.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <string>

namespace scap::netsim {

Simulator::Simulator(SimConfig cfg) : cfg_(std::move(cfg)), rng_(cfg_.seed) {
  cfg_.protocol.time.validate(cfg_.allow_unsafe_timing);
  const std::uint32_t n = cfg_.n();
  if (n < 1) throw ConfigError("simulation needs at least one device");
  if (!cfg_.firmware_types.empty() && cfg_.firmware_types.size() != n)
    throw ConfigError("firmware_types must list one type per device");

  crypto_ = cfg_.null_crypto ? make_null_backend(cfg_.seed) : make_openssl_backend(cfg_.seed);
  protocol_ = std::make_shared<const ProtocolConfig>(cfg_.protocol);

  std::uint32_t types = 1;
  for (std::uint32_t t : cfg_.firmware_types) types = std::max(types, t + 1);
  for (std::uint32_t t = 0; t < types; ++t) {
    auto img = std::make_shared<Bytes>(cfg_.firmware_bytes);
    rng_.fill(*img);
    images_.push_back(std::move(img));
  }

  auto enrollment = Operator::enroll(n, rng_, *crypto_, cfg_.firmware_types);
  op_ = std::make_unique<Operator>(std::move(enrollment.op));
  op_->set_t_attack(cfg_.protocol.time.t_attack);
  op_->set_s(cfg_.protocol.s);
  if (cfg_.software_attestation) {
    std::vector<Digest> tss;
    for (const auto& img : images_) tss.push_back(crypto_->hash(*img));
    op_->set_tss(std::move(tss));
  }

  nodes_.reserve(n + 1);
  nodes_.push_back(nullptr);
  for (auto& st : enrollment.devices) {
    const std::uint32_t type = st.device_type;
    nodes_.push_back(std::make_unique<Node>(Tee(std::move(st), protocol_.get(), FirmwareImage(type, images_[type]))));
  }
  enrollment.devices.clear();

  if (cfg_.dynamic)
    mobility_ = std::make_unique<Mobility>(n, cfg_.mobility, rng_.fork());
  else
    topo_ = cfg_.topology;
  radio_free_.assign(n + 1, 0.0);
  metrics_.resize(n);
  if (cfg_.preestablish_channels) preestablish();

  push(Event{0.0, 0, 0, 1, 0, EvKind::kPeriodStart, Work::kFrame});
  if (cfg_.protocol.polling) push(Event{cfg_.protocol.poll_interval_s, 0, 0, 0, 0, EvKind::kPoll, Work::kFrame});
  if (mobility_) push(Event{cfg_.mobility.tick, 0, 0, 0, 0, EvKind::kMobility, Work::kFrame});
}

Simulator::~Simulator() = default;

void Simulator::preestablish() {
  const std::uint32_t N = n();
  for (DeviceId a = 1; a <= N; ++a) {
    auto pair = [&](DeviceId b) {
      const SymmetricKey k = random_key(rng_);
      nodes_[a]->tee.mutable_state().set_channel(b, k, true);
      nodes_[b]->tee.mutable_state().set_channel(a, k, true);
    };
    if (cfg_.dynamic) {
      for (DeviceId b = a + 1; b <= N; ++b) pair(b);
    } else {
      for (DeviceId b : topo_.neighbors(a))
        if (b > a) pair(b);
    }
  }
}

// ---------------------------------------------------------------------------
// Event loop

void Simulator::push(Event e) {
  if (e.time < now_) throw InvariantViolation("event scheduled in the past");
  e.seq = ++seq_;
  queue_.push(e);
}

void Simulator::run_until(double t) { run_until(t, {}); }

bool Simulator::run_until(double t, const std::function<bool()>& stop) {
  while (!queue_.empty() && queue_.top().time <= t) {
    const Event e = queue_.top();
    queue_.pop();
    if (e.time < now_) throw InvariantViolation("event time decreased at event " + std::to_string(events_));
    now_ = e.time;
    ++events_;
    dispatch(e);
    if (stop && stop()) return true;
  }
  now_ = std::max(now_, t);
  if (metrics_.bytes_sent != metrics_.bytes_delivered + metrics_.bytes_dropped + inflight_bytes_)
    throw InvariantViolation("byte conservation violated at event " + std::to_string(events_));
  return false;
}

void Simulator::at(double t, Callback fn) {
  std::uint32_t idx;
  if (!free_callbacks_.empty()) {
    idx = free_callbacks_.back();
    free_callbacks_.pop_back();
    callbacks_[idx] = std::move(fn);
  } else {
    idx = static_cast<std::uint32_t>(callbacks_.size());
    callbacks_.push_back(std::move(fn));
  }
  push(Event{std::max(t, now_), 0, 0, idx, 0, EvKind::kCallback, Work::kFrame});
}

void Simulator::dispatch(const Event& e) {
  switch (e.kind) {
    case EvKind::kTransmit: return transmit(e.arg);
    case EvKind::kDeliver: return deliver(e.arg);
    case EvKind::kWork: return run_work(e);
    case EvKind::kPeriodStart: return period_start(e.arg);
    case EvKind::kLeStart: return le_start(e.arg);
    case EvKind::kPoll: return poll_all();
    case EvKind::kMobility: return mobility_tick();
    case EvKind::kCallback: {
      Callback fn = std::move(callbacks_[e.arg]);
      callbacks_[e.arg] = nullptr;
      free_callbacks_.push_back(e.arg);
      fn(*this);
      return;
    }
  }
}

// ---------------------------------------------------------------------------
// Radio

std::uint32_t Simulator::stash(DeviceId from, DeviceId to, Frame f) {
  const auto size = static_cast<std::uint32_t>(f.wire_size());
  const PhaseClass cls = classify(f.type);
  InFlight item{from, to, std::move(f), size, cls};
  if (!free_slots_.empty()) {
    const std::uint32_t s = free_slots_.back();
    free_slots_.pop_back();
    slab_[s] = std::move(item);
    return s;
  }
  slab_.push_back(std::move(item));
  return static_cast<std::uint32_t>(slab_.size() - 1);
}

void Simulator::release(std::uint32_t slot) {
  slab_[slot].frame = Frame{};
  free_slots_.push_back(slot);
}

PhaseClass Simulator::classify(MsgType t) const {
  if (is_attestation_type(t)) return PhaseClass::kAttestation;
  if (is_le_type(t)) return PhaseClass::kLe;
  const TimeConfig& tc = cfg_.protocol.time;
  const double offset = now_ - tc.period_start(tc.period_at(now_));
  return offset < tc.delta_hb ? PhaseClass::kHeartbeat : PhaseClass::kLe;
}

void Simulator::trace(const char* what, DeviceId from, DeviceId to, const Frame& f) {
  if (!trace_) return;
  char buf[160];
  const std::string_view type = to_string(f.type);
  std::snprintf(buf, sizeof buf, "%.9f %" PRIu64 " %s %u %u %.*s %zu\n", now_, events_, what, from, to,
                static_cast<int>(type.size()), type.data(), f.wire_size());
  *trace_ << buf;
}

bool Simulator::linked(DeviceId a, DeviceId b) const {
  if (a == b) return false;
  if (a == kOperatorId || b == kOperatorId) return true;
  for (const auto& d : drops_)
    if (d.until > now_ && ((d.a == a && d.b == b) || (d.a == b && d.b == a))) return false;
  if (mobility_) return mobility_->in_range(a, b);
  return topo_.adjacent(a, b);
}

std::span<const DeviceId> Simulator::neighbors(DeviceId d) const {
  return mobility_ ? mobility_->neighbors(d) : topo_.neighbors(d);
}

void Simulator::drop(std::uint32_t slot, const char* why) {
  const InFlight& f = slab_[slot];
  metrics_.bytes_dropped += f.size;
  ++metrics_.frames_dropped;
  trace(why, f.from, f.to, f.frame);
  release(slot);
}

void Simulator::transmit(std::uint32_t slot) {
  InFlight& f = slab_[slot];
  const auto ti = static_cast<std::size_t>(f.frame.type);
  metrics_.bytes_sent += f.size;
  ++metrics_.sent_count[ti];
  ++metrics_.sent_by_phase[static_cast<std::size_t>(f.cls)];
  metrics_.bytes[f.from].sent[static_cast<std::size_t>(f.cls)] += f.size;
  metrics_.type_bytes[static_cast<std::size_t>(f.cls)][ti] += f.size;
  if ((f.from != kOperatorId && !nodes_[f.from]->online) || f.to > n() || !linked(f.from, f.to)) {
    drop(slot, "drop");
    return;
  }
  trace("tx", f.from, f.to, f.frame);
  const double start = std::max({now_, radio_free_[f.from], radio_free_[f.to]});
  const double end = start + cfg_.delay.transmit_time(f.size);
  radio_free_[f.from] = radio_free_[f.to] = end;
  inflight_bytes_ += f.size;
  push(Event{end, 0, 0, slot, 0, EvKind::kDeliver, Work::kFrame});
}

void Simulator::deliver(std::uint32_t slot) {
  InFlight& f = slab_[slot];
  inflight_bytes_ -= f.size;
  if (f.to != kOperatorId && (!nodes_[f.to]->online || !linked(f.from, f.to))) {
    drop(slot, "drop");
    return;
  }
  if (frame_hook_) frame_hook_(*this, f.from, f.to, f.frame);
  InFlight& g = slab_[slot];  // the hook may not stash, but stay defensive about references
  metrics_.bytes_delivered += g.size;
  ++metrics_.delivered_count[static_cast<std::size_t>(g.frame.type)];
  metrics_.bytes[g.to].recv[static_cast<std::size_t>(g.cls)] += g.size;
  metrics_.type_bytes[static_cast<std::size_t>(g.cls)][static_cast<std::size_t>(g.frame.type)] += g.size;
  trace("rx", g.from, g.to, g.frame);
  if (g.claimed != kNoDevice) g.from = g.claimed;
  if (g.to == kOperatorId) {
    const Frame fr = std::move(g.frame);
    const DeviceId from = g.from;
    release(slot);
    operator_receive(from, fr);
    return;
  }
  Node& node = *nodes_[g.to];
  if (node.agent) {
    const Frame fr = std::move(g.frame);
    const DeviceId from = g.from, to = g.to;
    release(slot);
    node.agent->on_frame(*this, to, from, fr);
    return;
  }
  push(Event{now_, 0, g.to, slot, 0, EvKind::kWork, Work::kFrame});
}

// ---------------------------------------------------------------------------
// Device execution

void Simulator::work(DeviceId d, Work w, std::uint32_t arg, std::uint32_t tag) {
  push(Event{now_, 0, d, arg, tag, EvKind::kWork, w});
}

void Simulator::run_work(const Event& e) {
  const DeviceId d = e.dev;
  Node& node = *nodes_[d];
  if (!honest_running(d)) {
    if (e.work == Work::kFrame) release(e.arg);
    return;
  }
  if (node.cpu_free > now_) {
    Event again = e;
    again.time = node.cpu_free;
    push(again);
    return;
  }
  Env env(now_, *crypto_, cfg_.delay.compute, rng_, neighbors(d));
  Tee& tee = node.tee;
  switch (e.work) {
    case Work::kFrame: {
      const Frame f = std::move(slab_[e.arg].frame);
      const DeviceId from = slab_[e.arg].from;
      release(e.arg);
      tee.on_frame(env, from, f);
      break;
    }
    case Work::kTimer: tee.on_timer(env, static_cast<TimerKind>(e.arg), e.tag); break;
    case Work::kEmit: tee.leader_emit(env); break;
    case Work::kLeInit: tee.le_init(env); break;
    case Work::kPoll: tee.poll_tick(env); break;
    case Work::kNeighborUp: tee.on_neighbor_up(env, e.arg); break;
  }
  finish(d, env);
  check_invariants(d);
}

void Simulator::finish(DeviceId d, Env& env) {
  Node& node = *nodes_[d];
  const double done = now_ + env.meter.seconds;
  node.cpu_free = done;
  for (const Note& note : env.notes) {
    switch (note.kind) {
      case NoteKind::kHeartbeatAcquired:
        if (node.compromised) ++metrics_.compromised_acquisitions;
        node.hb_time = done;
        break;
      case NoteKind::kLeaderEmitted:
      case NoteKind::kLeInit: node.hb_time = done; break;
      case NoteKind::kKeyDerived: ++metrics_.key_exchanges; break;
      case NoteKind::kAuthFailure: ++metrics_.auth_failures; break;
      case NoteKind::kRecoveryRequested: ++metrics_.recovery_requests; break;
      default: break;
    }
    if (note_hook_) note_hook_(*this, d, note, done);
  }
  for (const TimerRequest& t : env.timers)
    push(Event{std::max(t.at, now_), 0, d, static_cast<std::uint32_t>(t.kind), t.tag, EvKind::kWork, Work::kTimer});
  for (Send& s : env.sends) {
    const MsgType type = s.frame.type;
    if (!node.compromised && s.to != kOperatorId && s.to <= n() && nodes_[s.to]->compromised &&
        (type == MsgType::kHb || type == MsgType::kLeHb || type == MsgType::kLeader))
      ++metrics_.compromised_acquisitions;
    const std::uint32_t slot = stash(d, s.to, std::move(s.frame));
    if (s.offset <= 0)
      transmit(slot);
    else
      push(Event{now_ + s.offset, 0, 0, slot, 0, EvKind::kTransmit, Work::kFrame});
  }
}

void Simulator::check_invariants(DeviceId d) const {
  const auto p = cfg_.protocol.time.period_at(now_);
  if (nodes_[d]->tee.state().t > p + 1)
    throw InvariantViolation("device " + std::to_string(d) + " ahead of real time at event " + std::to_string(events_));
}

void Simulator::period_start(std::uint32_t p) {
  const TimeConfig& tc = cfg_.protocol.time;
  push(Event{tc.period_start(p) + tc.delta_hb, 0, 0, p, 0, EvKind::kLeStart, Work::kFrame});
  push(Event{tc.period_start(p + 1), 0, 0, p + 1, 0, EvKind::kPeriodStart, Work::kFrame});
  for (DeviceId d = 1; d <= n(); ++d)
    if (honest_running(d) && nodes_[d]->tee.state().d_min == d) work(d, Work::kEmit);
}

void Simulator::le_start(std::uint32_t p) {
  for (DeviceId d = 1; d <= n(); ++d)
    if (honest_running(d) && nodes_[d]->tee.state().t <= p) work(d, Work::kLeInit);
}

void Simulator::poll_all() {
  push(Event{now_ + cfg_.protocol.poll_interval_s, 0, 0, 0, 0, EvKind::kPoll, Work::kFrame});
  for (DeviceId d = 1; d <= n(); ++d)
    if (honest_running(d)) work(d, Work::kPoll);
}

void Simulator::mobility_tick() {
  push(Event{now_ + cfg_.mobility.tick, 0, 0, 0, 0, EvKind::kMobility, Work::kFrame});
  mobility_->step(cfg_.mobility.tick);
  for (auto [a, b] : mobility_->recompute()) {
    if (honest_running(a)) work(a, Work::kNeighborUp, b);
    if (honest_running(b)) work(b, Work::kNeighborUp, a);
  }
}

// ---------------------------------------------------------------------------
// Operator

std::uint32_t Simulator::issue_attestation(DeviceId entry, AttMode mode, bool informative) {
  Frame v = op_->issue_request(entry, now_, mode, informative);
  const std::uint32_t ts = op_->last_ts();
  auto it = std::find_if(entry_ts_.begin(), entry_ts_.end(), [&](const auto& p) { return p.first == entry; });
  if (it == entry_ts_.end())
    entry_ts_.emplace_back(entry, ts);
  else
    it->second = ts;
  transmit(stash(kOperatorId, entry, std::move(v)));
  return ts;
}

void Simulator::request_collection(std::uint32_t ts) {
  const auto* r = op_->issued(ts);
  if (!r) throw PreconditionError("request_collection: unknown ts");
  transmit(stash(kOperatorId, r->entry, op_->collect_request(ts)));
}

void Simulator::operator_receive(DeviceId from, const Frame& f) {
  if (f.type != MsgType::kRes) return;
  auto it = std::find_if(entry_ts_.begin(), entry_ts_.end(), [&](const auto& p) { return p.first == from; });
  if (it == entry_ts_.end()) return;
  verdicts_.push_back(VerdictRecord{it->second, now_, op_->collect_and_verify(f, it->second, now_)});
}

const VerdictRecord* Simulator::verdict(std::uint32_t ts) const {
  // The first result counts; later ones for the same ts are replays.
  for (const auto& v : verdicts_)
    if (v.ts == ts) return &v;
  return nullptr;
}

DeviceId Simulator::enroll_late(DeviceId reference, const std::vector<DeviceId>& nbrs, std::uint32_t type) {
  if (mobility_) throw PreconditionError("enroll_late: static topologies only");
  if (reference < 1 || reference > n()) throw PreconditionError("enroll_late: unknown reference device");
  while (images_.size() <= type) {
    auto img = std::make_shared<Bytes>(cfg_.firmware_bytes);
    rng_.fill(*img);
    images_.push_back(std::move(img));
  }
  TeeState st = op_->enroll_late(rng_, *crypto_, nodes_[reference]->tee.state(), type);
  topo_ = topo_.with_device(nbrs);
  nodes_.push_back(std::make_unique<Node>(Tee(std::move(st), protocol_.get(), FirmwareImage(type, images_[type]))));
  radio_free_.push_back(now_);
  metrics_.bytes.emplace_back();
  return n();
}

// ---------------------------------------------------------------------------
// Adversary

void Simulator::take_offline(DeviceId d) {
  Node& node = *nodes_.at(d);
  if (!node.online) return;
  node.online = false;
  node.offline_since = now_;
}

void Simulator::bring_online(DeviceId d) {
  Node& node = *nodes_.at(d);
  node.online = true;
  node.cpu_free = std::max(node.cpu_free, now_);
}

TeeState Simulator::physical_compromise(DeviceId d) {
  Node& node = *nodes_.at(d);
  const double need = cfg_.protocol.time.t_attack;
  if (node.online || now_ - node.offline_since < need - 1e-9)
    throw ConfigError("physical compromise of device " + std::to_string(d) +
                      " requires it to be offline for at least t_attack");
  node.compromised = true;
  node.tee.mutable_state().compromised = true;
  return node.tee.state();
}

void Simulator::install_agent(DeviceId d, std::unique_ptr<Agent> agent) {
  Node& node = *nodes_.at(d);
  if (!node.compromised) throw PreconditionError("install_agent: device is not compromised");
  node.agent = std::move(agent);
}

void Simulator::compromise_software(DeviceId d, std::size_t offset, std::uint8_t mask) {
  nodes_.at(d)->tee.mutable_firmware().patch(offset, mask);
}

void Simulator::inject(DeviceId from, DeviceId to, Frame f, DeviceId claimed_from) {
  if (from < 1 || from > n()) throw PreconditionError("inject: unknown source device");
  const std::uint32_t slot = stash(from, to, std::move(f));
  slab_[slot].claimed = claimed_from;
  transmit(slot);
}

void Simulator::drop_link(DeviceId a, DeviceId b, double until) { drops_.push_back(LinkDrop{a, b, until}); }

}  // namespace scap::netsim
