#pragma once

#include <array>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "scap/common.hpp"
#include "scap/messages.hpp"

namespace scap::netsim {

enum class PhaseClass : std::uint8_t { kHeartbeat = 0, kLe = 1, kAttestation = 2 };
inline constexpr std::size_t kPhaseClasses = 3;
inline constexpr std::size_t kMsgTypes = 14;  // indexed by MsgType value

struct DeviceBytes {
  std::array<std::uint64_t, kPhaseClasses> sent{};
  std::array<std::uint64_t, kPhaseClasses> recv{};
  std::uint64_t total(PhaseClass p) const {
    return sent[static_cast<std::size_t>(p)] + recv[static_cast<std::size_t>(p)];
  }
};

struct Sample {
  std::string metric;
  double time;
  double value;
};

/// Counters accumulated by one simulation run.
struct Metrics {
  std::vector<DeviceBytes> bytes;  // index = device id, 0 = operator
  std::array<std::uint64_t, kMsgTypes> sent_count{};
  std::array<std::uint64_t, kMsgTypes> delivered_count{};
  std::array<std::uint64_t, kPhaseClasses> sent_by_phase{};
  /// Bytes sent plus bytes delivered, by phase and message type.
  std::array<std::array<std::uint64_t, kMsgTypes>, kPhaseClasses> type_bytes{};
  std::uint64_t bytes_sent = 0;
  std::uint64_t bytes_delivered = 0;
  std::uint64_t bytes_dropped = 0;
  std::uint64_t frames_dropped = 0;
  /// Replies that only a holder of the current session key could elicit,
  /// addressed to physically compromised devices, plus heartbeat
  /// acquisitions reported by compromised devices' own TEEs.
  std::uint64_t compromised_acquisitions = 0;
  std::uint64_t auth_failures = 0;
  std::uint64_t key_exchanges = 0;
  std::uint64_t recovery_requests = 0;
  std::vector<Sample> samples;

  void resize(std::uint32_t n) { bytes.assign(n + 1, DeviceBytes{}); }
  void reset_traffic();
  void sample(std::string metric, double time, double value) { samples.push_back({std::move(metric), time, value}); }

  std::uint64_t messages_sent(MsgType t) const { return sent_count[static_cast<std::size_t>(t)]; }
  std::uint64_t messages_in_phase(PhaseClass p) const { return sent_by_phase[static_cast<std::size_t>(p)]; }
  std::uint64_t bytes_of(PhaseClass p, MsgType t) const {
    return type_bytes[static_cast<std::size_t>(p)][static_cast<std::size_t>(t)];
  }
};

/// Writes samples as CSV rows: scenario,seed,metric,time,value.
void write_csv(std::ostream& out, const std::string& scenario, std::uint64_t seed, const std::vector<Sample>& samples);
void write_csv_header(std::ostream& out);

/// Formats a double with fixed 6-decimal precision (locale independent).
std::string fmt(double v);

}  // namespace scap::netsim
