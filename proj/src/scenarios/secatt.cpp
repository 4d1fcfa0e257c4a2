#include "scap/scenarios/secatt.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace scap::scenarios {

using netsim::Simulator;

namespace {

constexpr std::pair<Strategy, const char*> kStrategyNames[] = {
    {Strategy::kRejoin, "rejoin"},
    {Strategy::kReplayHeartbeat, "extract-then-replay-heartbeat"},
    {Strategy::kReportReplay, "report-replay"},
    {Strategy::kBitflip, "bitflip"},
    {Strategy::kCollisionGuess, "collision-guess"},
    {Strategy::kTwoKey, "two-key"},
};

bool heartbeat_type(MsgType t) {
  return t == MsgType::kNew || t == MsgType::kReq || t == MsgType::kHb || t == MsgType::kLeReq ||
         t == MsgType::kLeHb || t == MsgType::kLeader;
}

struct Captured {
  double time;
  DeviceId from, to;
  Frame frame;
};

/// Shared adversary for one run: leaked state of every compromised device,
/// a radio capture of the whole network, and the strategy's behavior.
class Adversary {
 public:
  Adversary(Strategy s, Rng rng) : strategy_(s), rng_(std::move(rng)) {}

  void observe(Simulator& sim, DeviceId from, DeviceId to, Frame& f) {
    if (!active_) captured_.push_back(Captured{sim.now(), from, to, f});
    if (strategy_ == Strategy::kBitflip && active_) tamper(sim, from, to, f);
  }

  void compromise(Simulator& sim, DeviceId d, const TeeState& leak) {
    leaks_[d] = leak;
    known_hb_.insert(leak.hb_cur.bytes);
    known_hb_.insert(leak.hb_next.bytes);
    active_ = true;
    guessed_hb_[d] = random_key(rng_);
    guessed_ck_[d] = random_key(rng_);
    if (strategy_ == Strategy::kTwoKey)
      for (DeviceId nb : sim.neighbors(d))
        if (!sim.compromised(nb))
          sim.inject(d, nb, Frame::plain(MsgType::kPubKey, Bytes(leak.keypair.public_value.begin(),
                                                                 leak.keypair.public_value.end())));
    if (strategy_ == Strategy::kReplayHeartbeat) replay_heartbeats(sim, d);
  }

  bool is_compromised(DeviceId d) const { return leaks_.count(d) != 0; }

  /// Periodic impersonation attempt toward every honest neighbor.
  void tick(Simulator& sim, DeviceId d) {
    if (!is_compromised(d)) return;
    if (strategy_ != Strategy::kReplayHeartbeat && strategy_ != Strategy::kTwoKey) return;
    for (DeviceId nb : sim.neighbors(d)) {
      if (is_compromised(nb)) continue;
      sim.inject(d, nb, Frame::plain(MsgType::kNew));
      const auto keys = candidates(d, nb);
      const SymmetricKey& k = keys[rng_.below(keys.size())];
      sim.inject(d, nb, Frame::sealed(MsgType::kReq, sim.crypto().aenc(k, Bytes(kKeyBytes, 0))));
      sim.inject(d, nb, Frame::sealed(MsgType::kLeReq, sim.crypto().aenc(k, Bytes(kKeyBytes, 0))));
    }
  }

  void period_replay(Simulator& sim, DeviceId d) {
    if (is_compromised(d) && strategy_ == Strategy::kReplayHeartbeat) replay_heartbeats(sim, d);
  }

  /// Re-sends captured attestation traffic into the current session.
  void replay_reports(Simulator& sim) {
    if (strategy_ != Strategy::kReportReplay) return;
    for (const auto& c : captured_) {
      const MsgType t = c.frame.type;
      if (t != MsgType::kAgg && t != MsgType::kRes && t != MsgType::kAtt && t != MsgType::kV) continue;
      if (c.to != kOperatorId && is_compromised(c.to)) continue;
      const DeviceId radio = radio_near(sim, c.to);
      if (radio == kNoDevice) continue;
      sim.inject(radio, c.to, c.frame, c.from);
    }
  }

  void on_frame(Simulator& sim, DeviceId self, DeviceId from, const Frame& f) {
    if (from == kOperatorId) {
      if (f.type == MsgType::kV && strategy_ == Strategy::kCollisionGuess) forge_report(sim, self, f);
      return;
    }
    if (is_compromised(from)) return;
    switch (f.type) {
      case MsgType::kPubKey: {
        if (f.body.size() != kPublicBytes) return;
        std::array<std::uint8_t, kPublicBytes> pk{};
        std::copy(f.body.begin(), f.body.end(), pk.begin());
        kx_keys_[{self, from}] = sim.crypto().key_exchange(leaks_[self].keypair.secret_value, pk);
        return;
      }
      case MsgType::kNew:
      case MsgType::kPoll:
        if (strategy_ == Strategy::kReplayHeartbeat || strategy_ == Strategy::kTwoKey)
          for (const auto& k : candidates(self, from))
            sim.inject(self, from, Frame::sealed(MsgType::kReq, sim.crypto().aenc(k, Bytes(kKeyBytes, 0))));
        return;
      case MsgType::kReq:
      case MsgType::kLeReq:
      case MsgType::kHb:
      case MsgType::kLeHb:
      case MsgType::kLeader:
      case MsgType::kAtt:
      case MsgType::kAgg:
        for (const auto& k : candidates(self, from)) {
          const auto pt = sim.crypto().adec(k, f.ciphertext());
          if (!pt) continue;
          ++decrypts;
          // A cut-off honest device may share our stale key; only a heartbeat
          // we did not already hold counts as a gain.
          const bool carries_hb = f.type == MsgType::kHb || f.type == MsgType::kLeHb || f.type == MsgType::kLeader;
          if (carries_hb && pt->size() >= kKeyBytes) {
            std::array<std::uint8_t, kKeyBytes> hb{};
            std::copy_n(pt->begin(), kKeyBytes, hb.begin());
            if (known_hb_.insert(hb).second) ++fresh_heartbeats;
          }
          return;
        }
        return;
      default: return;
    }
  }

  std::uint64_t decrypts = 0;
  std::uint64_t fresh_heartbeats = 0;

 private:
  std::vector<SymmetricKey> candidates(DeviceId self, DeviceId peer) {
    const TeeState& st = leaks_[self];
    std::vector<SymmetricKey> hbs = {st.hb_cur, st.hb_next};
    std::vector<SymmetricKey> cks;
    if (const auto* c = st.channel(peer)) cks.push_back(c->key);
    if (auto it = kx_keys_.find({self, peer}); it != kx_keys_.end()) cks.push_back(it->second);
    if (strategy_ == Strategy::kTwoKey) {
      hbs.push_back(guessed_hb_[self]);
      cks.push_back(guessed_ck_[self]);
    }
    std::vector<SymmetricKey> out;
    for (const auto& hb : hbs)
      for (const auto& ck : cks) out.push_back(hb ^ ck);
    if (strategy_ == Strategy::kTwoKey) {
      // Each key on its own, without the other half of the session key.
      out.insert(out.end(), hbs.begin(), hbs.end());
      out.insert(out.end(), cks.begin(), cks.end());
    }
    if (out.empty()) out.push_back(st.hb_next);
    return out;
  }

  DeviceId radio_near(const Simulator& sim, DeviceId to) const {
    for (const auto& [d, st] : leaks_)
      if (to == kOperatorId || sim.linked(d, to)) return d;
    return kNoDevice;
  }

  void replay_heartbeats(Simulator& sim, DeviceId d) {
    std::size_t sent = 0;
    for (auto it = captured_.rbegin(); it != captured_.rend() && sent < 64; ++it) {
      // Only honest receivers: replaying old traffic to ourselves proves nothing.
      if (!heartbeat_type(it->frame.type) || it->to == kOperatorId || is_compromised(it->to)) continue;
      if (!sim.linked(d, it->to)) continue;
      sim.inject(d, it->to, it->frame, it->from);
      ++sent;
    }
  }

  void tamper(Simulator& sim, DeviceId from, DeviceId to, Frame& f) {
    if (f.body.empty() || is_compromised(to)) return;
    auto near = [&](DeviceId x) { return x != kOperatorId && (is_compromised(x) || radio_near(sim, x) != kNoDevice); };
    if (!near(from) && !near(to)) return;
    const bool att = is_attestation_type(f.type);
    if (!att && !(heartbeat_type(f.type) && rng_.below(4) == 0)) return;
    Bytes& target = (f.auth.empty() || rng_.below(2) == 0) ? f.body : f.auth;
    target[rng_.below(target.size())] ^= static_cast<std::uint8_t>(1u << rng_.below(8));
  }

  /// The compromised entry device answers the operator itself. Attests of
  /// compromised devices are exact; every honest device claimed needs a guess.
  void forge_report(Simulator& sim, DeviceId self, const Frame& v) {
    const TeeState& st = leaks_[self];
    const auto pt = sim.crypto().adec(st.dk, v.ciphertext());
    if (!pt) return;
    RequestPayload req;
    try {
      req = RequestPayload::decode(*pt);
    } catch (const DecodeError&) {
      return;
    }
    if (req.dynamic_mode) return;
    const std::uint32_t n = req.n;
    Tag16 known{};
    std::vector<DeviceId> ids;
    for (const auto& [d, leak] : leaks_) {
      known = known ^ tree_attest(sim.crypto(), leak.dk, req.ts);
      ids.push_back(d);
    }
    TreeReport r;
    r.boolean_mode = req.boolean_mode;
    const std::size_t need = req.boolean_mode ? n : (n + 1) / 2;
    bool guess = false;
    for (DeviceId d = 1; d <= n && ids.size() < need; ++d)
      if (!is_compromised(d)) {
        ids.push_back(d);
        guess = true;
      }
    if (guess) {
      Tag16 g;
      rng_.fill(g);
      known = known ^ g;
    }
    std::sort(ids.begin(), ids.end());
    if (!r.boolean_mode) r.ids = ids;
    r.aggregate = known;
    sim.inject(self, kOperatorId, Frame::sealed(MsgType::kRes, sim.crypto().aenc(st.dk, serialize(r, n))));
  }

  Strategy strategy_;
  Rng rng_;
  bool active_ = false;
  std::map<DeviceId, TeeState> leaks_;
  std::map<DeviceId, SymmetricKey> guessed_hb_, guessed_ck_;
  std::map<std::pair<DeviceId, DeviceId>, SymmetricKey> kx_keys_;
  std::set<std::array<std::uint8_t, kKeyBytes>> known_hb_;
  std::vector<Captured> captured_;
};

class LeakedAgent : public netsim::Agent {
 public:
  explicit LeakedAgent(Adversary& adv) : adv_(adv) {}
  void on_frame(Simulator& sim, DeviceId self, DeviceId from, const Frame& f) override {
    adv_.on_frame(sim, self, from, f);
  }

 private:
  Adversary& adv_;
};

}  // namespace

Strategy parse_strategy(const std::string& name) {
  for (const auto& [s, n] : kStrategyNames)
    if (name == n) return s;
  throw ConfigError("unknown secatt strategy '" + name + "'");
}

std::string to_string(Strategy s) {
  for (const auto& [k, n] : kStrategyNames)
    if (k == s) return n;
  return "?";
}

const std::vector<Strategy>& all_strategies() {
  static const std::vector<Strategy> all = [] {
    std::vector<Strategy> v;
    for (const auto& [s, n] : kStrategyNames) v.push_back(s);
    return v;
  }();
  return all;
}

SecattOutcome run_secatt(const SecattParams& p) {
  if (p.n < 2 || p.c >= p.n) throw PreconditionError("run_secatt: need n >= 2 and c < n");
  Rng rng(p.seed * 0x2545F4914F6CDD1Dull + 0x1234567ull);

  netsim::SimConfig sc;
  sc.topology = netsim::Topology::random_connected(p.n, p.n / 2, rng);
  sc.protocol.time = p.unsafe_timing ? TimeConfig{10, 8, 4} : TimeConfig{10, 6, 20};
  sc.protocol.request_window_s = 20;
  sc.protocol.child_timeout_s = 5;
  sc.protocol.s = p.s;
  sc.allow_unsafe_timing = p.unsafe_timing;
  sc.null_crypto = p.null_crypto;
  sc.seed = rng.next_u64();
  Simulator sim(sc);
  const TimeConfig& tc = sc.protocol.time;

  std::vector<DeviceId> ids(p.n);
  for (DeviceId d = 1; d <= p.n; ++d) ids[d - 1] = d;
  for (std::size_t i = ids.size(); i > 1; --i) std::swap(ids[i - 1], ids[rng.below(i)]);
  const std::vector<DeviceId> comp(ids.begin(), ids.begin() + p.c);
  const std::vector<DeviceId> honest(ids.begin() + p.c, ids.end());

  Adversary adv(p.strategy, rng.fork());
  sim.set_frame_hook([&](Simulator& s, DeviceId from, DeviceId to, Frame& f) { adv.observe(s, from, to, f); });

  SecattOutcome out;
  out.compromised = comp;
  out.honest_majority = 2 * p.c < p.n;

  const std::uint32_t ts1 = [&] {
    sim.run_until(3.0);
    return sim.issue_attestation(ids[rng.below(p.n)], AttMode::kTree, true);
  }();

  // Offline inside period 2 (holding hb_3), compromised t_attack later.
  const double off_hi = p.unsafe_timing ? 15.5 : 19.5;
  double first = 3 * tc.delta, last = 3 * tc.delta;
  std::vector<double> offline_at;
  for (std::size_t i = 0; i < comp.size(); ++i) {
    offline_at.push_back(rng.uniform(10.5, off_hi));
    const double at = offline_at.back() + tc.t_attack;
    first = i == 0 ? at : std::min(first, at);
    last = i == 0 ? at : std::max(last, at);
  }
  for (std::size_t i = 0; i < comp.size(); ++i) {
    const DeviceId d = comp[i];
    sim.at(offline_at[i], [d](Simulator& s) { s.take_offline(d); });
    sim.at(offline_at[i] + tc.t_attack, [&, d](Simulator& s) {
      const TeeState leak = s.physical_compromise(d);
      if (p.strategy != Strategy::kRejoin) s.install_agent(d, std::make_unique<LeakedAgent>(adv));
      s.bring_online(d);
      if (p.strategy != Strategy::kRejoin) adv.compromise(s, d, leak);
    });
  }

  const double t2 = last + 1.0, end = t2 + 20.0;
  for (const DeviceId d : comp) {
    for (double t = last + 0.5; t < end; t += 2.0) sim.at(t, [&, d](Simulator& s) { adv.tick(s, d); });
    for (std::uint32_t q = tc.period_at(first) + 1; tc.period_start(q) < end; ++q)
      sim.at(tc.period_start(q) + 0.2, [&, d](Simulator& s) { adv.period_replay(s, d); });
  }

  auto pick_entry = [&]() -> DeviceId {
    if (p.strategy == Strategy::kCollisionGuess && !comp.empty()) return comp[rng.below(comp.size())];
    return honest[rng.below(honest.size())];
  };
  for (const bool informative : {true, false}) {
    const double at = informative ? t2 : t2 + 6.0;
    sim.at(at, [&, informative](Simulator& s) {
      s.issue_attestation(pick_entry(), AttMode::kTree, informative);
      s.at(s.now() + 0.05, [&](Simulator& s2) { adv.replay_reports(s2); });
      s.at(s.now() + 1.0, [&](Simulator& s2) { adv.replay_reports(s2); });
    });
  }
  sim.run_until(end);

  out.acquisitions = sim.metrics().compromised_acquisitions + adv.fresh_heartbeats;
  if (const auto* v = sim.verdict(ts1)) out.round1_all_ones = v->verdict.all_healthy();
  for (const auto& rec : sim.verdicts()) {
    if (rec.time < first) continue;
    ++out.verdicts_after;
    if (rec.verdict.all_healthy()) ++out.all_ones_after;
    for (DeviceId d : comp)
      if (rec.verdict.accepted && rec.verdict.bits.test(d - 1)) ++out.compromised_healthy;
    const auto* req = sim.op().issued(rec.ts);
    if (p.c >= 1 && req && req->boolean_mode && rec.verdict.all_healthy()) ++out.boolean_all_ones;
  }
  return out;
}

double wilson_upper(std::uint64_t k, std::uint64_t n) {
  if (n == 0) return 1.0;
  const double z = 1.959963984540054;
  const double nn = static_cast<double>(n);
  const double ph = static_cast<double>(k) / nn;
  const double denom = 1 + z * z / nn;
  const double centre = ph + z * z / (2 * nn);
  const double margin = z * std::sqrt(ph * (1 - ph) / nn + z * z / (4 * nn * nn));
  return (centre + margin) / denom;
}

ForgeryResult run_forgery(std::uint32_t n, std::uint32_t s, std::uint32_t c, std::uint64_t trials, std::uint64_t seed,
                          bool null_crypto) {
  const std::uint32_t need = (n + 1) / 2;
  if (c < 1 || c >= need) throw PreconditionError("run_forgery: need 1 <= c < n/2");
  Rng rng(seed);
  auto crypto = null_crypto ? make_null_backend(seed) : make_openssl_backend(seed);
  auto e = Operator::enroll(n, rng, *crypto);
  Operator& op = e.op;
  op.set_s(s);
  op.set_t_attack(1e18);
  const auto& keys = op.device_keys();

  // Which devices are compromised or claimed does not matter by symmetry.
  std::vector<DeviceId> comp, claimed;
  for (DeviceId d = 1; d <= c; ++d) comp.push_back(d);
  for (DeviceId d = c + 1; d <= need; ++d) claimed.push_back(d);
  const DeviceId entry = comp.front();
  const std::uint32_t n_s = n + s;

  ForgeryResult r;
  r.trials = trials;
  r.bound = std::ldexp(1.0, -static_cast<int>(s));
  for (std::uint64_t i = 0; i < trials; ++i) {
    op.issue_request(entry, static_cast<double>(i + 1), AttMode::kDynamic, true);
    const std::uint32_t ts = op.last_ts();
    // Optimal guess: exactly the union of the known bits. Any extra bit
    // must also be hit by a claimed honest device, which only lowers the odds.
    DynamicReport rep(n, s);
    for (DeviceId d : comp) {
      rep.devices.set(d - 1);
      rep.attest_bits.set(dynamic_attest(*crypto, keys[d - 1], ts, n_s));
    }
    for (DeviceId d : claimed) rep.devices.set(d - 1);
    Bytes body;
    put_be32(body, ts);
    const Bytes enc = rle_encode(rep);
    body.insert(body.end(), enc.begin(), enc.end());
    const Frame res = Frame::sealed(MsgType::kRes, crypto->aenc(keys[entry - 1], body));
    if (op.collect_and_verify(res, ts, static_cast<double>(i + 1)).accepted) ++r.accepted;
  }
  r.rate = static_cast<double>(r.accepted) / static_cast<double>(trials);
  r.ci_upper = wilson_upper(r.accepted, trials);
  return r;
}

}  // namespace scap::scenarios
