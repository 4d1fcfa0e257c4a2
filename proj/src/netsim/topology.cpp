#include "scap/netsim/topology.hpp"

#include <algorithm>

namespace scap::netsim {

Topology Topology::from_lists(std::uint32_t n, std::vector<std::vector<DeviceId>> lists) {
  Topology t;
  t.n_ = n;
  t.offsets_.assign(n + 2, 0);
  std::size_t total = 0;
  for (std::uint32_t d = 1; d <= n; ++d) {
    std::sort(lists[d].begin(), lists[d].end());
    t.offsets_[d] = static_cast<std::uint32_t>(total);
    total += lists[d].size();
  }
  t.offsets_[n + 1] = static_cast<std::uint32_t>(total);
  t.adj_.reserve(total);
  for (std::uint32_t d = 1; d <= n; ++d) t.adj_.insert(t.adj_.end(), lists[d].begin(), lists[d].end());
  return t;
}

Topology Topology::kary_tree(std::uint32_t n, std::uint32_t arity) {
  if (n < 1 || arity < 1) throw ConfigError("tree needs n >= 1 and arity >= 1");
  Topology t;
  t.n_ = n;
  t.offsets_.assign(n + 2, 0);
  // Degree: one parent edge (except the root) plus up to `arity` children.
  std::vector<std::uint32_t> deg(n + 1, 0);
  for (DeviceId c = 2; c <= n; ++c) {
    const DeviceId p = (c - 2) / arity + 1;
    ++deg[p];
    ++deg[c];
  }
  std::uint32_t acc = 0;
  for (DeviceId d = 1; d <= n; ++d) {
    t.offsets_[d] = acc;
    acc += deg[d];
  }
  t.offsets_[n + 1] = acc;
  t.adj_.assign(acc, 0);
  std::vector<std::uint32_t> fill(t.offsets_.begin(), t.offsets_.end() - 1);
  for (DeviceId d = 1; d <= n; ++d) {
    if (d > 1) t.adj_[fill[d]++] = (d - 2) / arity + 1;
    const std::uint64_t first = static_cast<std::uint64_t>(arity) * (d - 1) + 2;
    for (std::uint64_t c = first; c < first + arity && c <= n; ++c) t.adj_[fill[d]++] = static_cast<DeviceId>(c);
  }
  return t;
}

std::uint32_t Topology::kary_depth(DeviceId d, std::uint32_t arity) {
  std::uint32_t depth = 0;
  while (d > 1) {
    d = (d - 2) / arity + 1;
    ++depth;
  }
  return depth;
}

Topology Topology::grid(std::uint32_t rows, std::uint32_t cols) {
  if (rows < 1 || cols < 1) throw ConfigError("grid needs rows, cols >= 1");
  const std::uint32_t n = rows * cols;
  std::vector<std::vector<DeviceId>> lists(n + 1);
  for (std::uint32_t r = 0; r < rows; ++r)
    for (std::uint32_t c = 0; c < cols; ++c) {
      const DeviceId id = r * cols + c + 1;
      if (c + 1 < cols) {
        lists[id].push_back(id + 1);
        lists[id + 1].push_back(id);
      }
      if (r + 1 < rows) {
        lists[id].push_back(id + cols);
        lists[id + cols].push_back(id);
      }
    }
  return from_lists(n, std::move(lists));
}

Topology Topology::graph(std::uint32_t n, const std::vector<std::pair<DeviceId, DeviceId>>& edges) {
  std::vector<std::vector<DeviceId>> lists(n + 1);
  for (auto [a, b] : edges) {
    if (a < 1 || b < 1 || a > n || b > n) throw ConfigError("edge endpoint out of range");
    if (a == b) throw ConfigError("self loop in topology");
    if (std::find(lists[a].begin(), lists[a].end(), b) != lists[a].end()) throw ConfigError("duplicate edge in topology");
    lists[a].push_back(b);
    lists[b].push_back(a);
  }
  return from_lists(n, std::move(lists));
}

Topology Topology::random_connected(std::uint32_t n, std::uint32_t extra, Rng& rng) {
  std::vector<std::pair<DeviceId, DeviceId>> edges;
  std::vector<std::vector<bool>> has(n + 1, std::vector<bool>(n + 1, false));
  // Random recursive tree over a shuffled order.
  std::vector<DeviceId> order(n);
  for (std::uint32_t i = 0; i < n; ++i) order[i] = i + 1;
  for (std::uint32_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  for (std::uint32_t i = 1; i < n; ++i) {
    const DeviceId a = order[i], b = order[rng.below(i)];
    edges.emplace_back(a, b);
    has[a][b] = has[b][a] = true;
  }
  const std::uint64_t max_extra = static_cast<std::uint64_t>(n) * (n - 1) / 2 - (n - 1);
  extra = static_cast<std::uint32_t>(std::min<std::uint64_t>(extra, max_extra));
  while (extra > 0) {
    const DeviceId a = static_cast<DeviceId>(rng.below(n) + 1), b = static_cast<DeviceId>(rng.below(n) + 1);
    if (a == b || has[a][b]) continue;
    has[a][b] = has[b][a] = true;
    edges.emplace_back(a, b);
    --extra;
  }
  return graph(n, edges);
}

Topology Topology::with_device(const std::vector<DeviceId>& nbrs) const {
  std::vector<std::vector<DeviceId>> lists(n_ + 2);
  for (DeviceId d = 1; d <= n_; ++d) {
    const auto nb = neighbors(d);
    lists[d].assign(nb.begin(), nb.end());
  }
  for (DeviceId b : nbrs) {
    if (b < 1 || b > n_) throw ConfigError("late device neighbor out of range");
    lists[n_ + 1].push_back(b);
    lists[b].push_back(n_ + 1);
  }
  return from_lists(n_ + 1, std::move(lists));
}

bool Topology::adjacent(DeviceId a, DeviceId b) const {
  if (a < 1 || a > n_) return false;
  const auto nb = neighbors(a);
  return std::binary_search(nb.begin(), nb.end(), b);
}

bool Topology::connected() const {
  if (n_ == 0) return true;
  std::vector<bool> seen(n_ + 1, false);
  std::vector<DeviceId> stack{1};
  seen[1] = true;
  std::uint32_t count = 1;
  while (!stack.empty()) {
    const DeviceId d = stack.back();
    stack.pop_back();
    for (DeviceId nb : neighbors(d))
      if (!seen[nb]) {
        seen[nb] = true;
        ++count;
        stack.push_back(nb);
      }
  }
  return count == n_;
}

}  // namespace scap::netsim
