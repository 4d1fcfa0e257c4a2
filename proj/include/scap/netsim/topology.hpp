#pragma once

#include <span>
#include <utility>
#include <vector>

#include "scap/common.hpp"
#include "scap/rng.hpp"

namespace scap::netsim {

/// Static symmetric adjacency over devices 1..n, stored as CSR.
class Topology {
 public:
  Topology() = default;

  /// Complete k-ary tree in BFS order: children of i are k(i-1)+2 .. k(i-1)+k+1.
  static Topology kary_tree(std::uint32_t n, std::uint32_t arity);
  /// rows x cols lattice, row-major ids, 4-neighborhood.
  static Topology grid(std::uint32_t rows, std::uint32_t cols);
  /// Arbitrary undirected graph; duplicate edges and self loops are rejected.
  static Topology graph(std::uint32_t n, const std::vector<std::pair<DeviceId, DeviceId>>& edges);
  /// Uniform random spanning tree plus `extra` random edges (connected).
  static Topology random_connected(std::uint32_t n, std::uint32_t extra, Rng& rng);

  /// Copy with device n+1 appended, adjacent to `nbrs`.
  Topology with_device(const std::vector<DeviceId>& nbrs) const;

  std::uint32_t size() const { return n_; }
  std::span<const DeviceId> neighbors(DeviceId d) const {
    return {adj_.data() + offsets_[d], adj_.data() + offsets_[d + 1]};
  }
  bool adjacent(DeviceId a, DeviceId b) const;
  bool connected() const;
  std::size_t edge_count() const { return adj_.size() / 2; }
  /// Tree depth of device d (root depth 0); only meaningful for kary_tree.
  static std::uint32_t kary_depth(DeviceId d, std::uint32_t arity);

 private:
  static Topology from_lists(std::uint32_t n, std::vector<std::vector<DeviceId>> lists);

  std::uint32_t n_ = 0;
  std::vector<std::uint32_t> offsets_;
  std::vector<DeviceId> adj_;
};

}  // namespace scap::netsim
