#include "scap/netsim/mobility.hpp"

#include <algorithm>
#include <cmath>

namespace scap::netsim {

Mobility::Mobility(std::uint32_t n, const MobilityConfig& cfg, Rng rng)
    : cfg_(cfg), rng_(rng), states_(n + 1), lists_(n + 1) {
  if (!(cfg.v_min > 0) || cfg.v_max < cfg.v_min) throw ConfigError("mobility speeds must satisfy 0 < v_min <= v_max");
  if (!(cfg.range > 0) || !(cfg.width > 0) || !(cfg.height > 0)) throw ConfigError("mobility area and range must be positive");
  for (std::uint32_t d = 1; d <= n; ++d) {
    states_[d].x = rng_.uniform(0, cfg_.width);
    states_[d].y = rng_.uniform(0, cfg_.height);
    new_waypoint(states_[d]);
  }
  recompute();
}

void Mobility::new_waypoint(MobilityState& s) {
  s.wx = rng_.uniform(0, cfg_.width);
  s.wy = rng_.uniform(0, cfg_.height);
  s.speed = rng_.uniform(cfg_.v_min, cfg_.v_max);
}

void Mobility::step(double dt) {
  for (std::size_t d = 1; d < states_.size(); ++d) {
    MobilityState& s = states_[d];
    double left = dt;
    while (left > 0) {
      const double dx = s.wx - s.x, dy = s.wy - s.y;
      const double dist = std::hypot(dx, dy);
      const double reach = s.speed * left;
      if (reach < dist) {
        s.x += dx / dist * reach;
        s.y += dy / dist * reach;
        break;
      }
      s.x = s.wx;
      s.y = s.wy;
      left -= dist / s.speed;
      new_waypoint(s);
    }
  }
}

bool Mobility::in_range(DeviceId a, DeviceId b) const {
  const auto& p = states_[a];
  const auto& q = states_[b];
  const double dx = p.x - q.x, dy = p.y - q.y;
  return dx * dx + dy * dy <= cfg_.range * cfg_.range;
}

std::vector<std::pair<DeviceId, DeviceId>> Mobility::recompute() {
  const std::size_t n = states_.size() - 1;
  std::vector<std::pair<DeviceId, DeviceId>> up;
  std::vector<std::vector<DeviceId>> next(n + 1);
  for (DeviceId a = 1; a <= n; ++a)
    for (DeviceId b = a + 1; b <= n; ++b)
      if (in_range(a, b)) {
        next[a].push_back(b);
        next[b].push_back(a);
        if (!std::binary_search(lists_[a].begin(), lists_[a].end(), b)) up.emplace_back(a, b);
      }
  for (auto& l : next) std::sort(l.begin(), l.end());
  lists_ = std::move(next);
  return up;
}

}  // namespace scap::netsim
