#pragma once

// Scenario builders and independent oracles shared by the test binaries.

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "swd/swd.hpp"

namespace swd::test {

// Nodes on a line, `spacing` apart, range just above one spacing.
inline ScenarioConfig chain_config(std::size_t k, double spacing = 100.0) {
  ScenarioConfig c;
  c.grid_side = spacing * static_cast<double>(k);
  for (std::size_t i = 0; i < k; ++i) c.nodes.push_back({spacing * static_cast<double>(i), 0.0});
  c.medium.range = spacing * 1.2;
  c.medium.baseline_loss = 0.0;
  c.flow_source = NodeId{0};
  c.flow_destination = NodeId{static_cast<std::uint32_t>(k - 1)};
  c.packet_count = 100;
  c.min_observations = 20;
  return c;
}

// Ground truth from the trace alone: a relay that received DATA packets but
// transmitted none of them is a dropper.
inline std::set<NodeId> droppers_from_trace(const Trace& trace, NodeId source, NodeId destination) {
  std::map<NodeId, std::set<std::uint64_t>> got, sent;
  for (const auto& r : trace.records()) {
    if (r.type != PacketType::data) continue;
    if (r.kind == TraceKind::deliver && r.dst) got[*r.dst].insert(r.packet_id);
    if (r.kind == TraceKind::transmit) sent[r.src].insert(r.packet_id);
  }
  std::set<NodeId> out;
  for (const auto& [node, ids] : got) {
    if (node == source || node == destination) continue;
    const auto& fwd = sent[node];
    const auto kept = std::count_if(ids.begin(), ids.end(), [&](std::uint64_t id) { return !fwd.count(id); });
    if (kept > 0 && kept * 2 > static_cast<long>(ids.size())) out.insert(node);
  }
  return out;
}

struct SmallScenario {
  std::vector<Position> nodes;
  NodeId source, destination, black_hole;
};

// Every connected subset of a 3x3 lattice (spacing 100, range 120: lattice
// neighbours only) with 3..max_nodes nodes, and every ordered
// (source, destination, black hole) triple of distinct members.
inline void for_each_small_scenario(std::size_t max_nodes, const std::function<void(const SmallScenario&)>& f) {
  constexpr int side = 3;
  constexpr double spacing = 100.0;
  for (unsigned mask = 1; mask < (1u << (side * side)); ++mask) {
    const auto count = static_cast<std::size_t>(__builtin_popcount(mask));
    if (count < 3 || count > max_nodes) continue;
    std::vector<Position> pos;
    for (int cell = 0; cell < side * side; ++cell) {
      if (mask & (1u << cell)) pos.push_back({spacing * (cell % side), spacing * (cell / side)});
    }
    if (!Topology(pos, 120.0).connected()) continue;
    const auto n = static_cast<std::uint32_t>(pos.size());
    for (std::uint32_t s = 0; s < n; ++s)
      for (std::uint32_t d = 0; d < n; ++d)
        for (std::uint32_t m = 0; m < n; ++m) {
          if (s == d || m == s || m == d) continue;
          f(SmallScenario{pos, NodeId{s}, NodeId{d}, NodeId{m}});
        }
  }
}

inline ScenarioConfig small_config(const SmallScenario& s, IdsMode ids) {
  ScenarioConfig c;
  c.grid_side = 200.0;
  c.nodes = s.nodes;
  c.medium.range = 120.0;
  c.medium.baseline_loss = 0.0;
  c.flow_source = s.source;
  c.flow_destination = s.destination;
  c.adversaries = {s.black_hole};
  c.packet_count = 60;
  c.min_observations = 20;
  c.drain = SimTime::from_seconds(12.0);
  c.ids = ids;
  return c;
}

}  // namespace swd::test
