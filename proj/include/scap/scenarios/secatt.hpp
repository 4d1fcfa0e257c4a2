#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scap/netsim/simulator.hpp"

namespace scap::scenarios {

/// Adversary strategies for the attestation soundness experiment. Each one
/// physically compromises c devices (after the required offline time) and
/// then tries to get them counted as healthy or to obtain a fresh heartbeat.
enum class Strategy {
  kRejoin,              // unmodified software on the extracted, stale state
  kReplayHeartbeat,     // impersonation with leaked keys plus replay of captured heartbeat traffic
  kReportReplay,        // re-send captured reports into later sessions
  kBitflip,             // tamper with attestation frames on links next to compromised devices
  kCollisionGuess,      // compromised entry device forges a full report
  kTwoKey,              // stale heartbeat with leaked or freshly exchanged channel keys, or guessed heartbeats
};

Strategy parse_strategy(const std::string& name);
std::string to_string(Strategy s);
const std::vector<Strategy>& all_strategies();

struct SecattParams {
  Strategy strategy = Strategy::kRejoin;
  std::uint32_t n = 7;
  std::uint32_t c = 1;
  std::uint32_t s = 128;
  std::uint64_t seed = 1;
  /// delta > t_attack/2: the negative control where rejoining is expected to work.
  bool unsafe_timing = false;
  bool null_crypto = false;
};

struct SecattOutcome {
  /// Heartbeat-bearing replies sent to compromised devices, heartbeat
  /// acquisitions inside compromised TEEs, and heartbeats decrypted by the
  /// adversary that were not part of the leaked state.
  std::uint64_t acquisitions = 0;
  /// Compromised device bits set in verdicts produced after the first compromise.
  std::uint32_t compromised_healthy = 0;
  /// All-ones boolean verdicts produced after the first compromise (c >= 1).
  std::uint32_t boolean_all_ones = 0;
  /// Verdicts produced after the first compromise.
  std::uint32_t verdicts_after = 0;
  /// Post-compromise verdicts that are all-ones (expected for every one when c = 0).
  std::uint32_t all_ones_after = 0;
  bool round1_all_ones = false;
  std::vector<DeviceId> compromised;

  /// 2c < n. Informative verdicts only promise exclusion under an honest
  /// majority; with c >= n/2 the compromised devices can supply n/2 valid
  /// attests themselves.
  bool honest_majority = true;

  bool adversary_won() const { return acquisitions > 0 || compromised_healthy > 0 || boolean_all_ones > 0; }
  /// Violations that the protocol claims to prevent at this (n, c).
  bool violation() const {
    return acquisitions > 0 || boolean_all_ones > 0 || (honest_majority && compromised_healthy > 0);
  }
};

SecattOutcome run_secatt(const SecattParams& p);

struct ForgeryResult {
  std::uint64_t trials = 0;
  std::uint64_t accepted = 0;
  double rate = 0;
  /// One-sided 95% upper confidence bound on the acceptance rate.
  double ci_upper = 0;
  double bound = 0;  // 2^-s
};

/// Monte-Carlo forgery of dynamic-mode reports. The adversary holds the keys
/// of c devices and claims n/2 - c honest devices without knowing their
/// attest bits; each trial is a fresh request verified by the operator.
ForgeryResult run_forgery(std::uint32_t n, std::uint32_t s, std::uint32_t c, std::uint64_t trials, std::uint64_t seed,
                          bool null_crypto);

/// Upper end of the two-sided 95% Wilson interval for k successes in n trials.
double wilson_upper(std::uint64_t k, std::uint64_t n);

}  // namespace scap::scenarios
