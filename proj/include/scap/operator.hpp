#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "scap/aggregation.hpp"
#include "scap/messages.hpp"
#include "scap/tee.hpp"

namespace scap {

enum class AttMode { kTree, kDynamic };

struct IssuedRequest {
  DeviceId entry = 0;
  double issued_at = 0;
  AttMode mode = AttMode::kTree;
  bool boolean_mode = false;
  std::uint32_t n = 0;
};

/// Trusted network operator: enrollment, request issuance, report verification.
class Operator {
 public:
  struct Enrollment;

  /// Enrolls devices 1..n sharing the initial heartbeats; device 1 leads.
  /// types[k-1] is the firmware type of device k (all 0 if empty).
  static Enrollment enroll(std::uint32_t n, Rng& rng, const CryptoBackend& crypto, std::vector<std::uint32_t> types = {});

  /// Adds device n+1, handing it the heartbeat state of `reference`.
  TeeState enroll_late(Rng& rng, const CryptoBackend& crypto, const TeeState& reference, std::uint32_t type = 0);

  /// Reference measurements for software attestation, indexed by device type.
  /// Empty disables software attestation.
  void set_tss(std::vector<Digest> tss) { tss_ = std::move(tss); }
  const std::vector<Digest>& tss() const { return tss_; }

  /// Builds msg_V for the entry device and records the fresh ts.
  Frame issue_request(DeviceId entry, double clock, AttMode mode, bool informative);
  /// Dynamic mode: asks the entry device for its current report.
  Frame collect_request(std::uint32_t ts) const;

  /// Verifies msg_res for a known ts. Decryption failure, unknown ts, or
  /// completion later than t_attack after issuance yields the all-zero verdict.
  Verdict collect_and_verify(const Frame& msg_res, std::uint32_t ts, double clock) const;

  std::uint32_t n() const { return static_cast<std::uint32_t>(device_keys_.size()); }
  std::uint32_t last_ts() const { return last_ts_; }
  const std::vector<SymmetricKey>& device_keys() const { return device_keys_; }
  const IssuedRequest* issued(std::uint32_t ts) const;

  void set_t_attack(double t) { t_attack_ = t; }
  void set_s(std::uint32_t s) { s_ = s; }
  std::uint32_t s() const { return s_; }
  const CryptoBackend& crypto() const { return *crypto_; }

 private:
  explicit Operator(const CryptoBackend& crypto) : crypto_(&crypto) {}

  const CryptoBackend* crypto_;
  std::vector<SymmetricKey> device_keys_;
  std::vector<std::uint32_t> device_types_;
  std::vector<Digest> tss_;
  std::map<std::uint32_t, IssuedRequest> issued_;
  std::uint32_t last_ts_ = 0;
  double t_attack_ = 600.0;
  std::uint32_t s_ = 128;
};

struct Operator::Enrollment {
  Operator op;
  std::vector<TeeState> devices;
};

}  // namespace scap
