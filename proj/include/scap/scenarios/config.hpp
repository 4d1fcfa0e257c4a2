#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "scap/netsim/simulator.hpp"

namespace scap::scenarios {

enum class ScenarioKind {
  kHeartbeat,           // static heartbeat runtime and traffic per period
  kAttestation,         // static tree attestation runtime and traffic
  kDynamicHeartbeat,    // mobile network: false positives and traffic over a horizon
  kLeaderOutage,        // mobile network: leader goes offline, time to LE agreement
  kDynamicAttestation,  // mobile network: dynamic-mode attestation completion
  kSecatt,              // adversarial soundness runs
  kForgery,             // Monte-Carlo forgery of dynamic reports
  kCustom,              // any topology with scripted attestations and adversary actions
};

std::string to_string(ScenarioKind k);

struct TopologySpec {
  enum class Type { kKaryTree, kGrid, kGraph, kRandomConnected, kDynamic } type = Type::kKaryTree;
  std::uint32_t arity = 2;
  std::uint32_t rows = 0, cols = 0;
  std::uint32_t extra_edges = 0;
  std::vector<std::pair<DeviceId, DeviceId>> edges;
  netsim::MobilityConfig mobility;
};

/// One scripted adversary step. Fields unused by an action are left at defaults.
struct AdversaryAction {
  enum class Type { kTakeOffline, kBringOnline, kPhysicalCompromise, kCompromiseSoftware, kDropLink, kInject, kReplay };
  Type type = Type::kTakeOffline;
  double time = 0;
  DeviceId device = 0;
  /// kTakeOffline: bring the device back after this many seconds (0 = never).
  double duration = 0;
  /// kDropLink: the other endpoint; kInject: the receiver.
  DeviceId peer = 0;
  double until = 0;
  std::size_t offset = 0;
  std::uint8_t mask = 1;
  MsgType msg = MsgType::kNew;
  Bytes body;
  /// kReplay: frames captured in [from, until) are re-sent from `device`'s radio.
  double from = 0;
};

struct AttestationSpec {
  double at = 10.0;
  DeviceId entry = 1;
  AttMode mode = AttMode::kTree;
  bool informative = true;
  /// Dynamic mode: collection is requested this long after issuance.
  double collect_after = 0;
};

struct SecattSpec {
  std::vector<std::string> strategies;
  std::uint32_t runs = 100;
  std::uint32_t n_min = 4, n_max = 16;
  /// c is drawn from [1, n-1] unless fixed (> 0).
  std::uint32_t c = 0;
  std::uint32_t s = 128;
  bool negative_control = true;
};

struct ForgerySpec {
  std::uint32_t n = 64;
  std::uint32_t s = 8;
  /// 0 means n/2 - s.
  std::uint32_t c = 0;
  std::uint64_t trials = 1000000;
};

/// A scenario file, parsed and validated.
struct ScenarioConfig {
  std::string name;
  ScenarioKind kind = ScenarioKind::kCustom;
  TopologySpec topology;
  std::vector<std::uint32_t> n_list;
  ProtocolConfig protocol;
  bool allow_unsafe_timing = false;
  netsim::DelayModel delay;
  bool null_crypto = false;
  bool software_attestation = false;
  /// Start with confirmed channel keys between neighbors. Defaults to true
  /// for kAttestation (steady state) and false otherwise; kHeartbeat derives
  /// it from key_exchange.
  bool preestablish = false;
  /// kHeartbeat: run once per value; true means channels start unestablished.
  std::vector<bool> key_exchange{false};
  /// kAttestation: run once per value.
  std::vector<bool> informative{true};
  /// kAttestation / kDynamicAttestation issuance time.
  double attest_at = 10.0;
  std::vector<AttestationSpec> attestations;
  std::vector<AdversaryAction> adversary;
  /// kLeaderOutage: the leader goes offline 1 s before this period starts.
  std::uint32_t outage_period = 2;
  /// Seeds per CLI run unless overridden.
  std::uint32_t seeds = 1;
  /// Simulated end time; 0 picks a per-kind default.
  double horizon = 0;
  SecattSpec secatt;
  ForgerySpec forgery;
};

/// Parses and validates; throws ConfigError naming the offending field or invariant.
ScenarioConfig parse_config(const nlohmann::json& j);
ScenarioConfig parse_config_text(const std::string& text);
ScenarioConfig load_config(const std::string& path);

/// Checks cross-field invariants (timing, device ids against n).
void validate(const ScenarioConfig& cfg);

/// Builds the simulator configuration for one (n, seed) point.
netsim::SimConfig make_sim_config(const ScenarioConfig& cfg, std::uint32_t n, std::uint64_t seed);

}  // namespace scap::scenarios
