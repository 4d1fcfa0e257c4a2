#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "scap/aggregation.hpp"
#include "scap/crypto.hpp"
#include "scap/messages.hpp"

namespace scap {

struct TimeConfig {
  double delta = 150.0;
  double delta_hb = 120.0;
  double t_attack = 600.0;

  double delta_le() const { return delta - delta_hb; }
  /// Start of period t; period 1 starts at clock 0.
  double period_start(std::uint32_t t) const { return (t - 1) * delta; }
  /// Real period containing clock.
  std::uint32_t period_at(double clock) const;
  /// Throws ConfigError naming the violated constraint. allow_unsafe skips the
  /// delta <= t_attack/2 bound (negative tests only).
  void validate(bool allow_unsafe = false) const;
};

enum class Phase { kHb, kLe, kNone };

Phase checktime(std::uint32_t t, double clock, const TimeConfig& cfg);

struct ChannelEntry {
  DeviceId peer = 0;
  SymmetricKey key;
  bool confirmed = false;
};

/// Secrets held inside a device's emulated TEE.
struct TeeState {
  std::uint32_t t = 1;
  SymmetricKey hb_cur;
  SymmetricKey hb_next;
  SymmetricKey dk;
  KeyPair keypair;
  std::vector<ChannelEntry> channel_keys;
  DeviceId self_id = 0;
  DeviceId d_min = 1;
  std::uint32_t device_type = 0;
  bool sw_trustworthy = true;
  bool compromised = false;

  const ChannelEntry* channel(DeviceId peer) const;
  ChannelEntry* channel(DeviceId peer);
  void set_channel(DeviceId peer, const SymmetricKey& key, bool confirmed);

  /// The heartbeat of real period p as held by this device, if any: hb_cur
  /// once the device has advanced past p, hb_next while it still waits for
  /// p's successor.
  std::optional<SymmetricKey> current_heartbeat(std::uint32_t p) const;
};

/// Simulated firmware: a shared per-type image with an optional one-byte patch.
class FirmwareImage {
 public:
  FirmwareImage() = default;
  FirmwareImage(std::uint32_t type, std::shared_ptr<const Bytes> image) : type_(type), base_(std::make_shared<Base>()) {
    base_->bytes = std::move(image);
  }

  std::uint32_t type() const { return type_; }
  std::size_t size() const { return base_ ? base_->bytes->size() : 0; }
  bool patched() const { return patch_ != nullptr; }
  /// XORs mask into the byte at offset (software compromise).
  void patch(std::size_t offset, std::uint8_t mask);
  Digest measure(const CryptoBackend& crypto) const;

 private:
  struct Base {
    std::shared_ptr<const Bytes> bytes;
    mutable std::optional<Digest> digest;
  };
  struct Patch {
    std::size_t offset;
    std::uint8_t mask;
    mutable std::optional<Digest> digest;
  };
  std::uint32_t type_ = 0;
  std::shared_ptr<Base> base_;
  std::shared_ptr<Patch> patch_;
};

struct ProtocolConfig {
  TimeConfig time;
  /// Poll neighbors every poll_interval_s while lacking the heartbeat
  /// (dynamic networks).
  bool polling = false;
  double poll_interval_s = 10.0;
  /// Attestation request freshness window (seconds).
  double request_window_s = 150.0;
  /// Tree mode: a device that joined `a` seconds after ts reports upward at
  /// ts + child_timeout_s - 2a even if children are missing.
  double child_timeout_s = 30.0;
  /// Suppress duplicate requests to the same peer for this long.
  double retry_s = 1.0;
  /// Dynamic-mode statistical security parameter.
  std::uint32_t s = 128;
};

enum class NoteKind {
  kHeartbeatAcquired,  // peer = heartbeat source
  kLeaderEmitted,
  kLeInit,
  kLeUpdated,  // peer = exchange partner
  kKeyDerived,
  kAttJoined,  // peer = parent
  kReportSent,
  kRecoveryRequested,
  kAuthFailure,  // peer = sender
};

struct Note {
  NoteKind kind;
  DeviceId peer = 0;
};

struct Send {
  DeviceId to;
  Frame frame;
  /// Compute time elapsed in the handler when the send was issued.
  double offset;
};

enum class TimerKind : std::uint32_t { kChildTimeout = 1 };

struct TimerRequest {
  TimerKind kind;
  double at;
  std::uint32_t tag;
};

/// Per-invocation context handed to every handler.
struct Env {
  double now;
  const CryptoBackend& crypto;
  const CostModel& cost;
  Rng& rng;
  std::span<const DeviceId> neighbors;
  CostMeter meter;
  std::vector<Send> sends;
  std::vector<Note> notes;
  std::vector<TimerRequest> timers;

  Env(double now_, const CryptoBackend& c, const CostModel& cm, Rng& r, std::span<const DeviceId> nb)
      : now(now_), crypto(c), cost(cm), rng(r), neighbors(nb) {}

  void send(DeviceId to, Frame f) { sends.push_back(Send{to, std::move(f), meter.seconds}); }
  void note(NoteKind k, DeviceId peer = 0) { notes.push_back(Note{k, peer}); }
  /// Sends to every neighbor except `except`.
  void broadcast(const Frame& f, DeviceId except = kNoDevice);
};

/// State of one attestation session at a device.
struct AttSession {
  RequestPayload req;
  DeviceId parent = kOperatorId;
  bool entry = false;
  bool measured = false;
  bool aborted = false;
  bool reported = false;
  bool timed_out = false;
  std::vector<DeviceId> pending;  // tree mode: children yet to answer
  TreeReport tree;
  DynamicReport dyn;
};

/// Device protocol state machine around a TeeState. Handlers never block;
/// they emit sends, notes and timer requests into the Env.
class Tee {
 public:
  Tee(TeeState state, const ProtocolConfig* cfg, FirmwareImage firmware);

  const TeeState& state() const { return st_; }
  TeeState& mutable_state() { return st_; }
  const FirmwareImage& firmware() const { return fw_; }
  FirmwareImage& mutable_firmware() { return fw_; }
  const AttSession* session() const { return session_.get(); }
  const ProtocolConfig& config() const { return *cfg_; }

  /// Dispatches an incoming frame. from == kOperatorId for operator traffic.
  void on_frame(Env& env, DeviceId from, const Frame& frame);
  void on_timer(Env& env, TimerKind kind, std::uint32_t tag);
  /// Dynamic networks: a new radio neighbor appeared.
  void on_neighbor_up(Env& env, DeviceId peer);

  /// Period start: the leader samples and announces the next heartbeat.
  bool leader_emit(Env& env);
  /// LE sub-phase start: a device still lacking the heartbeat self-nominates.
  bool le_init(Env& env);
  /// Periodic poll (heartbeat phase) or candidate re-announcement (LE phase).
  void poll_tick(Env& env);

  /// Hashes the firmware and compares it against tss; updates sw_trustworthy.
  bool measure_software(Env& env, const std::vector<Digest>& tss);

 private:
  struct Deferred {
    enum Kind { kReprocess, kSendAtt } kind;
    Frame frame;
  };
  struct PendingKx {
    DeviceId peer;
    bool initiated;
    double started;
    std::vector<Deferred> queue;
  };
  struct Outstanding {
    DeviceId peer;
    MsgType type;
    double at;
  };

  Phase phase(std::uint32_t t, double now) const { return checktime(t, now, cfg_->time); }
  bool lacking(double now) const { return phase(st_.t, now) == Phase::kHb; }
  bool holder(double now) const { return st_.t > 1 && phase(st_.t - 1, now) == Phase::kHb; }
  bool le_participant(double now) const { return st_.t > 1 && phase(st_.t - 1, now) == Phase::kLe; }

  std::optional<SymmetricKey> session_key(DeviceId peer, double now) const;
  std::optional<Bytes> open(Env& env, DeviceId peer, const SymmetricKey& key, const Frame& f);
  Frame seal(Env& env, MsgType type, const SymmetricKey& key, ByteView plaintext);

  bool ensure_channel(Env& env, DeviceId peer, Deferred d);
  bool recently(MsgType type, DeviceId peer, double now);

  void on_new(Env& env, DeviceId from, const Frame& f);
  void on_poll(Env& env, DeviceId from);
  void on_pubkey(Env& env, DeviceId from, const Frame& f);
  void on_req(Env& env, DeviceId from, const Frame& f);
  void on_hb(Env& env, DeviceId from, const Frame& f);
  void on_le_req(Env& env, DeviceId from, const Frame& f);
  void on_le_hb(Env& env, DeviceId from, const Frame& f);
  void on_leader(Env& env, DeviceId from, const Frame& f);
  void on_v(Env& env, const Frame& f);
  void on_att(Env& env, DeviceId from, const Frame& f);
  void on_agg(Env& env, DeviceId from, const Frame& f);
  void on_collect(Env& env, const Frame& f);

  bool valid_request(std::uint32_t ts, double now) const;
  void begin_session(Env& env, const RequestPayload& req, DeviceId parent, bool entry);
  void send_att(Env& env, DeviceId peer);
  void send_dynamic_report(Env& env, DeviceId peer);
  void try_report(Env& env);
  Bytes dynamic_report_body() const;

  TeeState st_;
  const ProtocolConfig* cfg_;
  FirmwareImage fw_;
  std::vector<PendingKx> kx_;
  std::vector<Outstanding> outstanding_;
  std::unique_ptr<AttSession> session_;
  std::uint32_t last_ts_ = 0;
};

}  // namespace scap
