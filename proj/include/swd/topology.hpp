#pragma once

#include <algorithm>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "swd/core.hpp"

namespace swd {

// Static unit-disk placement. Node ids are dense indices 0..n-1.
class Topology {
 public:
  Topology() = default;

  Topology(std::vector<Position> positions, double range) : positions_(std::move(positions)), range_(range) {
    if (!(range_ > 0.0)) throw Error("transmission range must be positive");
    build_adjacency();
  }

  std::size_t size() const { return positions_.size(); }
  double range() const { return range_; }

  bool contains(NodeId id) const { return id.value < positions_.size(); }

  const Position& position(NodeId id) const {
    check(id);
    return positions_[id.value];
  }

  // Every node within range, excluding `id`, in ascending id order.
  std::span<const NodeId> neighbors(NodeId id) const {
    check(id);
    return adjacency_[id.value];
  }

  bool adjacent(NodeId a, NodeId b) const {
    check(a);
    check(b);
    const auto& row = adjacency_[a.value];
    return std::binary_search(row.begin(), row.end(), b);
  }

  // Hop distances from `from`; nodes unreachable (or listed in `blocked`) stay empty.
  std::vector<std::optional<std::size_t>> hop_distances(NodeId from, std::span<const NodeId> blocked = {}) const {
    check(from);
    std::vector<std::optional<std::size_t>> dist(size());
    auto is_blocked = [&](NodeId v) { return std::find(blocked.begin(), blocked.end(), v) != blocked.end(); };
    std::deque<NodeId> frontier{from};
    dist[from.value] = 0;
    while (!frontier.empty()) {
      const NodeId u = frontier.front();
      frontier.pop_front();
      for (NodeId v : adjacency_[u.value]) {
        if (dist[v.value] || is_blocked(v)) continue;
        dist[v.value] = *dist[u.value] + 1;
        frontier.push_back(v);
      }
    }
    return dist;
  }

  bool connected() const {
    if (size() <= 1) return true;
    const auto dist = hop_distances(NodeId{0});
    return std::all_of(dist.begin(), dist.end(), [](const auto& d) { return d.has_value(); });
  }

 private:
  void check(NodeId id) const {
    if (!contains(id)) throw Error("unknown node id " + std::to_string(id.value));
  }

  void build_adjacency() {
    adjacency_.assign(size(), {});
    for (std::uint32_t a = 0; a < size(); ++a) {
      for (std::uint32_t b = a + 1; b < size(); ++b) {
        if (distance(positions_[a], positions_[b]) <= range_) {
          adjacency_[a].push_back(NodeId{b});
          adjacency_[b].push_back(NodeId{a});
        }
      }
    }
    for (auto& row : adjacency_) std::sort(row.begin(), row.end());
  }

  std::vector<Position> positions_;
  double range_{1.0};
  std::vector<std::vector<NodeId>> adjacency_;
};

}  // namespace swd
