#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <queue>
#include <span>
#include <vector>

#include "scap/crypto.hpp"
#include "scap/messages.hpp"
#include "scap/netsim/metrics.hpp"
#include "scap/netsim/mobility.hpp"
#include "scap/netsim/topology.hpp"
#include "scap/operator.hpp"
#include "scap/tee.hpp"

namespace scap::netsim {

/// Per-hop link model. A transmission occupies the radios of both endpoints
/// for base_latency + size*8/throughput seconds.
struct DelayModel {
  double base_latency = 13.5e-3;
  double throughput_bps = 35000.0;
  CostModel compute;

  double transmit_time(std::size_t bytes) const { return base_latency + static_cast<double>(bytes) * 8.0 / throughput_bps; }
};

struct SimConfig {
  /// Static topology; ignored when dynamic is set.
  Topology topology;
  bool dynamic = false;
  std::uint32_t dynamic_n = 0;
  MobilityConfig mobility;
  ProtocolConfig protocol;
  DelayModel delay;
  bool null_crypto = false;
  /// Install confirmed channel keys between all (current) neighbors at start.
  bool preestablish_channels = false;
  /// Skips the delta <= t_attack/2 check (negative tests only).
  bool allow_unsafe_timing = false;
  /// Enables software measurement: the operator ships reference digests.
  bool software_attestation = false;
  std::size_t firmware_bytes = 30720;
  /// types[k-1] is the firmware type of device k; empty means all type 0.
  std::vector<std::uint32_t> firmware_types;
  std::uint64_t seed = 1;

  std::uint32_t n() const { return dynamic ? dynamic_n : topology.size(); }
};

class Simulator;

/// Adversary-controlled replacement for a compromised device's software.
class Agent {
 public:
  virtual ~Agent() = default;
  virtual void on_frame(Simulator& sim, DeviceId self, DeviceId from, const Frame& f) = 0;
};

struct VerdictRecord {
  std::uint32_t ts;
  double time;
  Verdict verdict;
};

/// Deterministic single-threaded discrete-event network of emulated devices.
class Simulator {
 public:
  using Callback = std::function<void(Simulator&)>;
  using NoteHook = std::function<void(Simulator&, DeviceId, const Note&, double)>;
  /// Sees every frame at delivery time; may modify it in transit.
  using FrameHook = std::function<void(Simulator&, DeviceId from, DeviceId to, Frame&)>;

  explicit Simulator(SimConfig cfg);
  ~Simulator();
  Simulator(const Simulator&) = delete;
  Simulator& operator=(const Simulator&) = delete;

  /// Processes all events with time <= t, then sets the clock to t.
  void run_until(double t);
  /// Like run_until, but returns early (true) once stop() holds after an event.
  bool run_until(double t, const std::function<bool()>& stop);
  double now() const { return now_; }
  void at(double t, Callback fn);

  const SimConfig& config() const { return cfg_; }
  std::uint32_t n() const { return static_cast<std::uint32_t>(nodes_.size() - 1); }
  const CryptoBackend& crypto() const { return *crypto_; }
  Rng& rng() { return rng_; }
  std::uint64_t events_processed() const { return events_; }

  // Operator
  Operator& op() { return *op_; }
  std::uint32_t issue_attestation(DeviceId entry, AttMode mode, bool informative);
  void request_collection(std::uint32_t ts);
  const std::vector<VerdictRecord>& verdicts() const { return verdicts_; }
  /// First verdict recorded for ts, or null.
  const VerdictRecord* verdict(std::uint32_t ts) const;
  /// Adds device n+1 adjacent to nbrs (static topologies), cloning
  /// reference's heartbeat state.
  DeviceId enroll_late(DeviceId reference, const std::vector<DeviceId>& nbrs, std::uint32_t type = 0);

  // Devices
  const Tee& tee(DeviceId d) const { return nodes_[d]->tee; }
  Tee& tee(DeviceId d) { return nodes_[d]->tee; }
  bool online(DeviceId d) const { return nodes_[d]->online; }
  bool compromised(DeviceId d) const { return nodes_[d]->compromised; }
  std::span<const DeviceId> neighbors(DeviceId d) const;
  bool linked(DeviceId a, DeviceId b) const;
  const Mobility* mobility() const { return mobility_.get(); }
  /// End time of the handler in which d last obtained a heartbeat.
  double last_heartbeat_time(DeviceId d) const { return nodes_[d]->hb_time; }

  // Adversary actions
  void take_offline(DeviceId d);
  void bring_online(DeviceId d);
  /// Requires d to have been offline for at least t_attack (ConfigError
  /// otherwise). Marks d compromised and returns its TEE secrets.
  TeeState physical_compromise(DeviceId d);
  /// Replaces d's software with an adversary agent (d must be compromised).
  void install_agent(DeviceId d, std::unique_ptr<Agent> agent);
  void compromise_software(DeviceId d, std::size_t offset, std::uint8_t mask);
  /// Transmits a frame from d's radio (adversary use). The receiver sees it
  /// as sent by claimed_from when that is set (a spoofed header).
  void inject(DeviceId from, DeviceId to, Frame f, DeviceId claimed_from = kNoDevice);
  /// Suppresses the link a-b until the given time.
  void drop_link(DeviceId a, DeviceId b, double until);

  Metrics& metrics() { return metrics_; }
  const Metrics& metrics() const { return metrics_; }
  void set_trace(std::ostream* out) { trace_ = out; }
  void set_note_hook(NoteHook h) { note_hook_ = std::move(h); }
  void set_frame_hook(FrameHook h) { frame_hook_ = std::move(h); }
  std::uint64_t bytes_in_flight() const { return inflight_bytes_; }

 private:
  enum class EvKind : std::uint8_t { kTransmit, kDeliver, kWork, kPeriodStart, kLeStart, kPoll, kMobility, kCallback };
  enum class Work : std::uint8_t { kFrame, kTimer, kEmit, kLeInit, kPoll, kNeighborUp };

  struct Event {
    double time;
    std::uint64_t seq;
    std::uint32_t dev;
    std::uint32_t arg;
    std::uint32_t tag;
    EvKind kind;
    Work work;
  };
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      return a.time != b.time ? a.time > b.time : a.seq > b.seq;
    }
  };
  struct InFlight {
    DeviceId from;
    DeviceId to;
    Frame frame;
    std::uint32_t size;
    PhaseClass cls;
    DeviceId claimed = kNoDevice;
  };
  struct Node {
    Tee tee;
    double cpu_free = 0;
    double hb_time = -1;
    double offline_since = 0;
    bool online = true;
    bool compromised = false;
    std::unique_ptr<Agent> agent;
    Node(Tee t) : tee(std::move(t)) {}
  };

  void push(Event e);
  void dispatch(const Event& e);
  std::uint32_t stash(DeviceId from, DeviceId to, Frame f);
  void release(std::uint32_t slot);
  void transmit(std::uint32_t slot);
  void deliver(std::uint32_t slot);
  void drop(std::uint32_t slot, const char* why);
  void run_work(const Event& e);
  void finish(DeviceId d, Env& env);
  void operator_receive(DeviceId from, const Frame& f);
  void period_start(std::uint32_t p);
  void le_start(std::uint32_t p);
  void poll_all();
  void mobility_tick();
  void work(DeviceId d, Work w, std::uint32_t arg = 0, std::uint32_t tag = 0);
  void preestablish();
  PhaseClass classify(MsgType t) const;
  void trace(const char* what, DeviceId from, DeviceId to, const Frame& f);
  void check_invariants(DeviceId d) const;
  bool honest_running(DeviceId d) const { return nodes_[d]->online && !nodes_[d]->agent; }

  SimConfig cfg_;
  std::unique_ptr<CryptoBackend> crypto_;
  Rng rng_;
  std::unique_ptr<Operator> op_;
  Topology topo_;
  std::unique_ptr<Mobility> mobility_;
  std::shared_ptr<const ProtocolConfig> protocol_;
  std::vector<std::shared_ptr<const Bytes>> images_;
  std::vector<std::unique_ptr<Node>> nodes_;  // index 0 unused (operator)
  std::vector<double> radio_free_;            // index 0 = operator
  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  std::vector<InFlight> slab_;
  std::vector<std::uint32_t> free_slots_;
  std::vector<Callback> callbacks_;
  std::vector<std::uint32_t> free_callbacks_;
  struct LinkDrop {
    DeviceId a, b;
    double until;
  };
  std::vector<LinkDrop> drops_;
  std::vector<std::pair<DeviceId, std::uint32_t>> entry_ts_;  // latest ts per entry device
  std::vector<VerdictRecord> verdicts_;
  Metrics metrics_;
  std::ostream* trace_ = nullptr;
  NoteHook note_hook_;
  FrameHook frame_hook_;
  double now_ = 0;
  std::uint64_t seq_ = 0;
  std::uint64_t events_ = 0;
  std::uint64_t inflight_bytes_ = 0;
};

}  // namespace scap::netsim
