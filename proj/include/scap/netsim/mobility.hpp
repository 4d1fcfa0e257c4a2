#pragma once

#include <span>
#include <utility>
#include <vector>

#include "scap/common.hpp"
#include "scap/rng.hpp"

namespace scap::netsim {

struct MobilityConfig {
  double width = 1000.0;
  double height = 1000.0;
  double range = 50.0;
  double v_min = 5.0;
  double v_max = 15.0;
  /// Neighbor recomputation interval (seconds).
  double tick = 0.1;
};

struct MobilityState {
  double x = 0, y = 0;
  double speed = 0;
  double wx = 0, wy = 0;
};

/// Random waypoint motion with range-based neighbor sets.
class Mobility {
 public:
  Mobility(std::uint32_t n, const MobilityConfig& cfg, Rng rng);

  /// Moves every device dt seconds toward its waypoint, drawing a new
  /// waypoint and speed on arrival.
  void step(double dt);
  /// Recomputes neighbor sets; returns the (a, b) pairs with a < b that came into range.
  std::vector<std::pair<DeviceId, DeviceId>> recompute();

  std::span<const DeviceId> neighbors(DeviceId d) const { return lists_[d]; }
  bool in_range(DeviceId a, DeviceId b) const;
  const MobilityState& state(DeviceId d) const { return states_[d]; }
  MobilityState& mutable_state(DeviceId d) { return states_[d]; }
  const MobilityConfig& config() const { return cfg_; }

 private:
  void new_waypoint(MobilityState& s);

  MobilityConfig cfg_;
  Rng rng_;
  std::vector<MobilityState> states_;  // index 0 unused
  std::vector<std::vector<DeviceId>> lists_;
};

}  // namespace scap::netsim
