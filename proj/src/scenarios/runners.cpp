#include "scap/scenarios/runners.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "scap/scenarios/secatt.hpp"

namespace scap::scenarios {

using netsim::PhaseClass;
using netsim::Simulator;

void ScenarioResult::append(ScenarioResult&& other) {
  rows.insert(rows.end(), std::make_move_iterator(other.rows.begin()), std::make_move_iterator(other.rows.end()));
  verdicts.insert(verdicts.end(), std::make_move_iterator(other.verdicts.begin()),
                  std::make_move_iterator(other.verdicts.end()));
}

std::vector<double> ScenarioResult::values(const std::string& scenario, const std::string& metric) const {
  std::vector<double> out;
  for (const auto& r : rows)
    if (r.scenario == scenario && r.metric == metric) out.push_back(r.value);
  return out;
}

Summary summarize(std::vector<double> v) {
  Summary s;
  s.count = v.size();
  if (v.empty()) return s;
  std::sort(v.begin(), v.end());
  double sum = 0;
  for (double x : v) sum += x;
  s.mean = sum / static_cast<double>(v.size());
  const std::size_t m = v.size() / 2;
  s.median = v.size() % 2 ? v[m] : (v[m - 1] + v[m]) / 2;
  s.min = v.front();
  s.max = v.back();
  return s;
}

void write_rows_csv(std::ostream& out, const std::vector<Row>& rows, bool header) {
  if (header) netsim::write_csv_header(out);
  for (const auto& r : rows)
    out << r.scenario << ',' << r.seed << ',' << r.metric << ',' << netsim::fmt(r.time) << ','
        << netsim::fmt(r.value) << '\n';
}

void write_verdicts_csv(std::ostream& out, const std::vector<VerdictRow>& rows, bool header) {
  if (header) out << "scenario,seed,ts,time,bits\n";
  for (const auto& r : rows)
    out << r.scenario << ',' << r.seed << ',' << r.ts << ',' << netsim::fmt(r.time) << ',' << r.bits << '\n';
}

namespace {

/// Collects rows for one labelled point of a scenario.
struct Emitter {
  ScenarioResult& res;
  std::string label;
  std::uint64_t seed;

  void operator()(const std::string& metric, double time, double value) const {
    res.rows.push_back(Row{label, seed, metric, time, value});
  }
  void verdict(const netsim::VerdictRecord& v) const {
    res.verdicts.push_back(VerdictRow{label, seed, v.ts, v.time, v.verdict.bits.to_string()});
  }
};

std::string point_label(const ScenarioConfig& cfg, std::uint32_t n) {
  std::string l = cfg.name;
  if (cfg.topology.type == TopologySpec::Type::kKaryTree) l += "/arity=" + std::to_string(cfg.topology.arity);
  return l + "/n=" + std::to_string(n);
}

bool live(const Simulator& sim, DeviceId d) { return sim.online(d) && !sim.compromised(d); }

/// Frames captured for scripted replay actions.
struct Capture {
  double time;
  DeviceId from, to;
  Frame frame;
};

void schedule_adversary(Simulator& sim, const std::vector<AdversaryAction>& actions,
                        std::shared_ptr<std::vector<Capture>> capture) {
  using T = AdversaryAction::Type;
  const bool replays =
      std::any_of(actions.begin(), actions.end(), [](const AdversaryAction& a) { return a.type == T::kReplay; });
  if (replays)
    sim.set_frame_hook([capture](Simulator& s, DeviceId from, DeviceId to, Frame& f) {
      capture->push_back(Capture{s.now(), from, to, f});
    });
  for (const AdversaryAction& a : actions) {
    sim.at(a.time, [a, capture](Simulator& s) {
      switch (a.type) {
        case T::kTakeOffline:
          s.take_offline(a.device);
          if (a.duration > 0) s.at(s.now() + a.duration, [d = a.device](Simulator& s2) { s2.bring_online(d); });
          break;
        case T::kBringOnline: s.bring_online(a.device); break;
        case T::kPhysicalCompromise: s.physical_compromise(a.device); break;
        case T::kCompromiseSoftware: s.compromise_software(a.device, a.offset, a.mask); break;
        case T::kDropLink: s.drop_link(a.device, a.peer, a.until); break;
        case T::kInject: s.inject(a.device, a.peer, Frame::plain(a.msg, a.body)); break;
        case T::kReplay:
          for (const Capture& c : *capture)
            if (c.time >= a.from && c.time < a.until && c.to != a.device) s.inject(a.device, c.to, c.frame, c.from);
          break;
      }
    });
  }
}

struct Harness {
  std::unique_ptr<Simulator> sim;
  std::shared_ptr<std::vector<Capture>> capture = std::make_shared<std::vector<Capture>>();
};

Harness make_harness(const ScenarioConfig& cfg, netsim::SimConfig sc, const RunOptions& opts) {
  if (opts.force_null_crypto) sc.null_crypto = true;
  Harness h;
  h.sim = std::make_unique<Simulator>(std::move(sc));
  h.sim->set_trace(opts.trace);
  schedule_adversary(*h.sim, cfg.adversary, h.capture);
  return h;
}

/// Per-device byte means split by degree: interior (degree > 1) and leaf
/// (degree 1) devices, excluding device 1 (leader / entry).
struct ByteSplit {
  double all = 0, interior = 0, leaf = 0;
};

ByteSplit byte_split(const Simulator& sim, PhaseClass cls) {
  double a = 0, i = 0, l = 0;
  std::uint64_t na = 0, ni = 0, nl = 0;
  for (DeviceId d = 1; d <= sim.n(); ++d) {
    const double b = static_cast<double>(sim.metrics().bytes[d].total(cls));
    a += b;
    ++na;
    if (d == 1) continue;
    if (sim.neighbors(d).size() > 1) {
      i += b;
      ++ni;
    } else {
      l += b;
      ++nl;
    }
  }
  return ByteSplit{na ? a / na : 0, ni ? i / ni : 0, nl ? l / nl : 0};
}

void run_heartbeat(const ScenarioConfig& cfg, std::uint64_t seed, const RunOptions& opts, ScenarioResult& res) {
  const TimeConfig& tc = cfg.protocol.time;
  const double end = cfg.horizon > 0 ? cfg.horizon : tc.delta_hb - 1e-6;
  for (const std::uint32_t n : cfg.n_list)
    for (const bool kx : cfg.key_exchange) {
      netsim::SimConfig sc = make_sim_config(cfg, n, seed);
      sc.preestablish_channels = !kx;
      Harness h = make_harness(cfg, std::move(sc), opts);
      Simulator& sim = *h.sim;
      sim.run_until(end);
      const Emitter emit{res, point_label(cfg, n) + "/kx=" + (kx ? "1" : "0"), seed};
      double completion = 0;
      std::uint32_t have = 0;
      for (DeviceId d = 1; d <= n; ++d)
        if (sim.tee(d).state().t >= 2) {
          ++have;
          completion = std::max(completion, sim.last_heartbeat_time(d));
        }
      const auto& m = sim.metrics();
      const ByteSplit b = byte_split(sim, PhaseClass::kHeartbeat);
      emit("completion_s", completion, completion);
      emit("coverage", end, static_cast<double>(have) / n);
      emit("messages", end, static_cast<double>(m.messages_in_phase(PhaseClass::kHeartbeat)));
      emit("messages_per_device", end, static_cast<double>(m.messages_in_phase(PhaseClass::kHeartbeat)) / n);
      emit("bytes_per_device", end, b.all);
      emit("bytes_interior", end, b.interior);
      emit("bytes_leaf", end, b.leaf);
      emit("key_exchanges", end, static_cast<double>(m.key_exchanges));
      if (cfg.topology.type == TopologySpec::Type::kKaryTree)
        emit("depth", end, netsim::Topology::kary_depth(n, cfg.topology.arity));
      for (const auto& v : sim.verdicts()) emit.verdict(v);
    }
}

void run_attestation(const ScenarioConfig& cfg, std::uint64_t seed, const RunOptions& opts, ScenarioResult& res) {
  const DeviceId entry = cfg.attestations.empty() ? 1 : cfg.attestations.front().entry;
  const double window = std::max(cfg.protocol.request_window_s, cfg.protocol.time.t_attack);
  for (const std::uint32_t n : cfg.n_list)
    for (const bool informative : cfg.informative) {
      Harness h = make_harness(cfg, make_sim_config(cfg, n, seed), opts);
      Simulator& sim = *h.sim;
      sim.run_until(cfg.attest_at);
      const std::uint32_t ts = sim.issue_attestation(entry, AttMode::kTree, informative);
      const double end = cfg.horizon > 0 ? cfg.horizon : cfg.attest_at + window + 1;
      sim.run_until(end, [&] { return sim.verdict(ts) != nullptr; });
      const Emitter emit{res, point_label(cfg, n) + (informative ? "/informative" : "/boolean"), seed};
      const auto* v = sim.verdict(ts);
      emit("completed", sim.now(), v ? 1 : 0);
      if (v) {
        emit("completion_s", v->time, v->time - cfg.attest_at);
        emit("healthy_fraction", v->time, static_cast<double>(v->verdict.bits.popcount()) / n);
        emit("accepted", v->time, v->verdict.accepted ? 1 : 0);
        emit.verdict(*v);
      }
      const ByteSplit b = byte_split(sim, PhaseClass::kAttestation);
      emit("bytes_per_device", sim.now(), b.all);
      emit("bytes_nonleaf", sim.now(), b.interior);
      emit("bytes_leaf", sim.now(), b.leaf);
      emit("messages", sim.now(), static_cast<double>(sim.metrics().messages_in_phase(PhaseClass::kAttestation)));
      emit("recovery_requests", sim.now(), static_cast<double>(sim.metrics().recovery_requests));
    }
}

/// Live devices lacking the period's heartbeat or holding a minority value.
std::uint32_t false_positives(const Simulator& sim, std::uint32_t period, std::uint32_t* live_count) {
  std::map<SymmetricKey, std::uint32_t> votes;
  std::uint32_t alive = 0;
  for (DeviceId d = 1; d <= sim.n(); ++d) {
    if (!live(sim, d)) continue;
    ++alive;
    const TeeState& st = sim.tee(d).state();
    if (st.t == period + 1) ++votes[st.hb_next];
  }
  std::uint32_t best = 0;
  for (const auto& [k, c] : votes) best = std::max(best, c);
  if (live_count) *live_count = alive;
  return alive - best;
}

void run_dynamic_heartbeat(const ScenarioConfig& cfg, std::uint64_t seed, const RunOptions& opts,
                           ScenarioResult& res) {
  const TimeConfig& tc = cfg.protocol.time;
  const double horizon = cfg.horizon > 0 ? cfg.horizon : 10 * tc.delta;
  for (const std::uint32_t n : cfg.n_list) {
    Harness h = make_harness(cfg, make_sim_config(cfg, n, seed), opts);
    Simulator& sim = *h.sim;
    const Emitter emit{res, point_label(cfg, n), seed};
    std::uint32_t periods = 0, fp_periods = 0;
    double first_fp = -1;
    for (std::uint32_t p = 1; tc.period_start(p + 1) <= horizon + 1e-9; ++p) {
      const double t = tc.period_start(p + 1) - 1e-6;
      sim.run_until(t);
      ++periods;
      std::uint32_t alive = 0;
      const std::uint32_t fp = false_positives(sim, p, &alive);
      emit("false_positives", tc.period_start(p + 1), fp);
      emit("coverage", tc.period_start(p + 1), alive ? static_cast<double>(alive - fp) / alive : 0.0);
      if (fp > 0) {
        ++fp_periods;
        if (first_fp < 0) first_fp = tc.period_start(p + 1);
      }
    }
    const double end = sim.now();
    emit("periods", end, periods);
    emit("fp_periods", end, fp_periods);
    emit("fp_free", end, fp_periods == 0 ? 1 : 0);
    if (first_fp >= 0) emit("first_fp_s", first_fp, first_fp);
    const double denom = static_cast<double>(n) * std::max<std::uint32_t>(periods, 1);
    double hb = 0, le = 0;
    for (DeviceId d = 1; d <= n; ++d) {
      hb += static_cast<double>(sim.metrics().bytes[d].total(PhaseClass::kHeartbeat));
      le += static_cast<double>(sim.metrics().bytes[d].total(PhaseClass::kLe));
    }
    // Key exchanges with newly met neighbors are reported apart from the
    // heartbeat messages proper (new, poll, req, hb).
    const double kx = static_cast<double>(sim.metrics().bytes_of(PhaseClass::kHeartbeat, MsgType::kPubKey));
    emit("hb_bytes_per_device_period", end, (hb - kx) / denom);
    emit("hb_kx_bytes_per_device_period", end, kx / denom);
    emit("hb_total_bytes_per_device_period", end, hb / denom);
    emit("le_bytes_per_device_period", end, le / denom);
    emit("key_exchanges", end, static_cast<double>(sim.metrics().key_exchanges));
  }
}

void run_leader_outage(const ScenarioConfig& cfg, std::uint64_t seed, const RunOptions& opts, ScenarioResult& res) {
  const TimeConfig& tc = cfg.protocol.time;
  const std::uint32_t p = cfg.outage_period;
  const double outage = tc.period_start(p) - 1.0;
  const double le = tc.period_start(p) + tc.delta_hb;
  const double stop = tc.period_start(p + 1) - 1e-6;
  for (const std::uint32_t n : cfg.n_list) {
    Harness h = make_harness(cfg, make_sim_config(cfg, n, seed), opts);
    Simulator& sim = *h.sim;
    const Emitter emit{res, point_label(cfg, n), seed};
    sim.run_until(outage);
    const DeviceId leader = sim.tee(1).state().d_min;
    sim.take_offline(leader);
    sim.run_until(le);
    const std::uint32_t before = static_cast<std::uint32_t>(sim.metrics().bytes.size());
    std::vector<std::uint64_t> le_before(before);
    for (DeviceId d = 1; d < before; ++d) le_before[d] = sim.metrics().bytes[d].total(PhaseClass::kLe);

    // Agreement: every live device names the smallest live id as leader and
    // holds that device's heartbeat.
    DeviceId target = kNoDevice;
    for (DeviceId d = 1; d <= n && target == kNoDevice; ++d)
      if (live(sim, d)) target = d;
    auto agreement = [&] {
      std::uint32_t alive = 0, agree = 0;
      const SymmetricKey& hb = sim.tee(target).state().hb_next;
      for (DeviceId d = 1; d <= n; ++d) {
        if (!live(sim, d)) continue;
        ++alive;
        const TeeState& st = sim.tee(d).state();
        if (st.d_min == target && st.hb_next == hb && st.t == p + 1) ++agree;
      }
      return alive ? static_cast<double>(agree) / alive : 1.0;
    };
    double agreed_at = -1;
    for (double t = le; t <= stop; t += 1.0) {
      sim.run_until(std::min(t, stop));
      const double a = agreement();
      emit("le_agreement", sim.now() - le, a);
      if (a >= 1.0) {
        agreed_at = sim.now() - le;
        break;
      }
    }
    emit("agreed", sim.now(), agreed_at >= 0 ? 1 : 0);
    // Capped at the LE window when agreement is never reached.
    emit("agreement_s", sim.now(), agreed_at >= 0 ? agreed_at : tc.delta_le());
    double le_bytes = 0;
    for (DeviceId d = 1; d <= n; ++d)
      le_bytes += static_cast<double>(sim.metrics().bytes[d].total(PhaseClass::kLe) - le_before[d]);
    emit("le_bytes_per_device", sim.now(), le_bytes / n);
  }
}

void run_dynamic_attestation(const ScenarioConfig& cfg, std::uint64_t seed, const RunOptions& opts,
                             ScenarioResult& res) {
  const DeviceId entry = cfg.attestations.empty() ? 1 : cfg.attestations.front().entry;
  const bool informative = cfg.attestations.empty() ? true : cfg.attestations.front().informative;
  const double window = cfg.protocol.request_window_s;
  for (const std::uint32_t n : cfg.n_list) {
    Harness h = make_harness(cfg, make_sim_config(cfg, n, seed), opts);
    Simulator& sim = *h.sim;
    const Emitter emit{res, point_label(cfg, n), seed};
    sim.run_until(cfg.attest_at);
    const std::uint32_t ts = sim.issue_attestation(entry, AttMode::kDynamic, informative);
    // Complete once every live device holds a report describing all live devices.
    auto complete = [&] {
      std::uint32_t alive = 0;
      for (DeviceId d = 1; d <= n; ++d) alive += live(sim, d);
      for (DeviceId d = 1; d <= n; ++d) {
        if (!live(sim, d)) continue;
        const auto* s = sim.tee(d).session();
        if (!s || s->req.ts != ts || s->dyn.devices.popcount() < alive) return false;
      }
      return true;
    };
    double done = -1;
    for (double t = cfg.attest_at + 1; t <= cfg.attest_at + window; t += 1.0) {
      sim.run_until(t);
      if (complete()) {
        done = t - cfg.attest_at;
        break;
      }
    }
    emit("completed", sim.now(), done >= 0 ? 1 : 0);
    if (done >= 0) emit("completion_s", sim.now(), done);
    sim.request_collection(ts);
    sim.run_until(sim.now() + 30, [&] { return sim.verdict(ts) != nullptr; });
    if (const auto* v = sim.verdict(ts)) {
      emit("healthy_fraction", v->time, static_cast<double>(v->verdict.bits.popcount()) / n);
      emit("accepted", v->time, v->verdict.accepted ? 1 : 0);
      emit.verdict(*v);
    }
    emit("bytes_per_device", sim.now(), byte_split(sim, PhaseClass::kAttestation).all);
  }
}

void run_custom(const ScenarioConfig& cfg, std::uint64_t seed, const RunOptions& opts, ScenarioResult& res) {
  const TimeConfig& tc = cfg.protocol.time;
  const double horizon = cfg.horizon > 0 ? cfg.horizon : 2 * tc.delta;
  for (const std::uint32_t n : cfg.n_list) {
    Harness h = make_harness(cfg, make_sim_config(cfg, n, seed), opts);
    Simulator& sim = *h.sim;
    for (const AttestationSpec& a : cfg.attestations)
      sim.at(a.at, [a](Simulator& s) {
        const std::uint32_t ts = s.issue_attestation(a.entry, a.mode, a.informative);
        if (a.mode == AttMode::kDynamic && a.collect_after > 0)
          s.at(s.now() + a.collect_after, [ts](Simulator& s2) { s2.request_collection(ts); });
      });
    const Emitter emit{res, point_label(cfg, n), seed};
    for (std::uint32_t p = 1; tc.period_start(p + 1) <= horizon + 1e-9; ++p) {
      sim.run_until(tc.period_start(p + 1) - 1e-6);
      std::uint32_t alive = 0;
      const std::uint32_t fp = false_positives(sim, p, &alive);
      emit("coverage", tc.period_start(p + 1), alive ? static_cast<double>(alive - fp) / alive : 0.0);
    }
    sim.run_until(horizon);
    const auto& m = sim.metrics();
    emit("bytes_sent", horizon, static_cast<double>(m.bytes_sent));
    emit("frames_dropped", horizon, static_cast<double>(m.frames_dropped));
    emit("auth_failures", horizon, static_cast<double>(m.auth_failures));
    emit("key_exchanges", horizon, static_cast<double>(m.key_exchanges));
    emit("recovery_requests", horizon, static_cast<double>(m.recovery_requests));
    emit("compromised_acquisitions", horizon, static_cast<double>(m.compromised_acquisitions));
    for (const auto& v : sim.verdicts()) {
      emit("verdict_healthy", v.time, static_cast<double>(v.verdict.bits.popcount()));
      emit.verdict(v);
    }
  }
}

void run_secatt_suite(const ScenarioConfig& cfg, std::uint64_t seed, const RunOptions& opts, ScenarioResult& res) {
  const SecattSpec& sp = cfg.secatt;
  std::vector<Strategy> strategies;
  for (const auto& s : sp.strategies) strategies.push_back(parse_strategy(s));
  Rng rng(seed);
  struct Tally {
    std::uint32_t runs = 0, violations = 0, won = 0, dishonest_majority_healthy = 0, completeness = 0;
  };
  std::map<std::string, Tally> tally;
  for (std::uint32_t i = 0; i < sp.runs; ++i) {
    SecattParams p;
    p.strategy = strategies[i % strategies.size()];
    p.n = sp.n_min + static_cast<std::uint32_t>(rng.below(sp.n_max - sp.n_min + 1));
    p.c = sp.c ? sp.c : 1 + static_cast<std::uint32_t>(rng.below(p.n - 1));
    p.s = sp.s;
    p.seed = rng.next_u64();
    p.null_crypto = cfg.null_crypto || opts.force_null_crypto;
    const SecattOutcome o = run_secatt(p);
    Tally& t = tally[to_string(p.strategy)];
    ++t.runs;
    t.violations += o.violation();
    t.won += o.adversary_won();
    t.completeness += o.round1_all_ones;
    if (!o.honest_majority && o.compromised_healthy) ++t.dishonest_majority_healthy;
    const Emitter emit{res, cfg.name + "/" + to_string(p.strategy) + "/n=" + std::to_string(p.n) + "/c=" +
                                std::to_string(p.c) + "/run=" + std::to_string(i),
                       seed};
    emit("acquisitions", 0, static_cast<double>(o.acquisitions));
    emit("compromised_healthy", 0, o.compromised_healthy);
    emit("boolean_all_ones", 0, o.boolean_all_ones);
    emit("violation", 0, o.violation() ? 1 : 0);
  }
  for (const auto& [name, t] : tally) {
    const Emitter emit{res, cfg.name + "/" + name, seed};
    emit("runs", 0, t.runs);
    emit("violations", 0, t.violations);
    emit("adversary_won", 0, t.won);
    emit("dishonest_majority_healthy", 0, t.dishonest_majority_healthy);
    emit("round1_all_ones", 0, t.completeness);
  }
  if (sp.negative_control) {
    // delta > t_attack/2: a device captured within one period keeps up.
    for (const Strategy s : strategies) {
      SecattParams p;
      p.strategy = s;
      p.n = sp.n_min;
      p.c = 1;
      p.s = sp.s;
      p.seed = rng.next_u64();
      p.unsafe_timing = true;
      p.null_crypto = cfg.null_crypto || opts.force_null_crypto;
      const SecattOutcome o = run_secatt(p);
      const Emitter emit{res, cfg.name + "/negative/" + to_string(s), seed};
      emit("acquisitions", 0, static_cast<double>(o.acquisitions));
      emit("adversary_won", 0, o.adversary_won() ? 1 : 0);
    }
  }
  // c = 0: every post-compromise verdict must be all-ones.
  SecattParams p;
  p.n = sp.n_min;
  p.c = 0;
  p.s = sp.s;
  p.seed = rng.next_u64();
  p.null_crypto = cfg.null_crypto || opts.force_null_crypto;
  const SecattOutcome o = run_secatt(p);
  const Emitter emit{res, cfg.name + "/honest", seed};
  emit("verdicts", 0, o.verdicts_after);
  emit("all_ones", 0, o.all_ones_after);
}

void run_forgery_kind(const ScenarioConfig& cfg, std::uint64_t seed, const RunOptions& opts, ScenarioResult& res) {
  const ForgerySpec& f = cfg.forgery;
  const std::uint32_t c = f.c ? f.c : f.n / 2 - f.s;
  const ForgeryResult r = run_forgery(f.n, f.s, c, f.trials, seed, cfg.null_crypto || opts.force_null_crypto);
  const Emitter emit{res, cfg.name + "/n=" + std::to_string(f.n) + "/s=" + std::to_string(f.s) + "/c=" + std::to_string(c),
                     seed};
  emit("trials", 0, static_cast<double>(r.trials));
  emit("accepted", 0, static_cast<double>(r.accepted));
  emit("rate", 0, r.rate);
  emit("ci_upper", 0, r.ci_upper);
  emit("bound", 0, r.bound);
}

}  // namespace

ScenarioResult run_scenario(const ScenarioConfig& cfg, std::uint64_t seed, const RunOptions& opts) {
  ScenarioResult res;
  switch (cfg.kind) {
    case ScenarioKind::kHeartbeat: run_heartbeat(cfg, seed, opts, res); break;
    case ScenarioKind::kAttestation: run_attestation(cfg, seed, opts, res); break;
    case ScenarioKind::kDynamicHeartbeat: run_dynamic_heartbeat(cfg, seed, opts, res); break;
    case ScenarioKind::kLeaderOutage: run_leader_outage(cfg, seed, opts, res); break;
    case ScenarioKind::kDynamicAttestation: run_dynamic_attestation(cfg, seed, opts, res); break;
    case ScenarioKind::kSecatt: run_secatt_suite(cfg, seed, opts, res); break;
    case ScenarioKind::kForgery: run_forgery_kind(cfg, seed, opts, res); break;
    case ScenarioKind::kCustom: run_custom(cfg, seed, opts, res); break;
  }
  return res;
}

ScenarioResult run_seeds(const ScenarioConfig& cfg, std::uint64_t first_seed, std::uint32_t count,
                         const RunOptions& opts) {
  ScenarioResult all;
  for (std::uint32_t i = 0; i < count; ++i) all.append(run_scenario(cfg, first_seed + i, opts));
  if (count < 2) return all;

  // (label, metric) -> values, one per seed; skipped unless every seed has exactly one.
  std::map<std::pair<std::string, std::string>, std::vector<double>> groups;
  std::map<std::pair<std::string, std::string>, std::map<std::uint64_t, int>> per_seed;
  std::vector<std::pair<std::string, std::string>> order;
  for (const Row& r : all.rows) {
    const auto key = std::make_pair(r.scenario, r.metric);
    if (!groups.count(key)) order.push_back(key);
    groups[key].push_back(r.value);
    ++per_seed[key][r.seed];
  }
  for (const auto& key : order) {
    const auto& seeds = per_seed[key];
    if (seeds.size() != count ||
        std::any_of(seeds.begin(), seeds.end(), [](const auto& kv) { return kv.second != 1; }))
      continue;
    const Summary s = summarize(groups[key]);
    for (const auto& [suffix, v] : {std::pair<const char*, double>{"mean", s.mean}, {"median", s.median},
                                    {"min", s.min}, {"max", s.max}, {"count", static_cast<double>(s.count)}})
      all.rows.push_back(Row{key.first, 0, key.second + "." + suffix, 0, v});
  }
  return all;
}

}  // namespace scap::scenarios
