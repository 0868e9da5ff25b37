#pragma once

// (n, l, seed) parameter sweeps over generated random scenarios.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "swd/analytics.hpp"
#include "swd/scenario.hpp"
#include "swd/simulation.hpp"

namespace swd {

struct SweepSpec {
  std::vector<std::size_t> n_values{12, 24, 36};
  std::vector<std::size_t> l_values{3, 4, 6};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::vector<IdsMode> schemes{IdsMode::watchdog, IdsMode::selective};
  double range{200.0};
  unsigned jobs{1};
};

// Random connected placement with the preset density (10 nodes per
// 500 m square), the flow between the two hop-farthest nodes and one black
// hole elsewhere. The placement depends on (n, seed) only, so every cluster
// size and scheme sees the same network.
inline ScenarioConfig sweep_scenario(std::size_t n, std::size_t l, std::uint64_t seed, IdsMode scheme,
                                     double range = 200.0) {
  if (n < 4) throw Error("sweep scenarios need at least four nodes");
  ScenarioConfig c = reference_scenario();
  c.grid_side = std::round(500.0 * std::sqrt(static_cast<double>(n) / 10.0));
  c.medium.range = range;
  c.nodes = random_connected_placement(n, c.grid_side, range, seed * 1000003ULL + n);
  const Topology topo(c.nodes, range);

  NodeId best_s{0}, best_d{1};
  std::size_t best = 0;
  for (std::uint32_t a = 0; a < n; ++a) {
    const auto dist = topo.hop_distances(NodeId{a});
    for (std::uint32_t b = a + 1; b < n; ++b) {
      if (dist[b] && *dist[b] > best) {
        best = *dist[b];
        best_s = NodeId{a};
        best_d = NodeId{b};
      }
    }
  }
  c.flow_source = best_s;
  c.flow_destination = best_d;

  Random pick(seed * 7919ULL + n);
  std::vector<NodeId> candidates;
  for (std::uint32_t i = 0; i < n; ++i) {
    if (NodeId{i} != best_s && NodeId{i} != best_d) candidates.push_back(NodeId{i});
  }
  c.adversaries = {candidates[pick.below(candidates.size())]};
  c.cluster_size = l;
  c.ids = scheme;
  c.seed = seed;
  return c;
}

struct SweepRow {
  RunMetrics metrics;
  std::string error;  // non-empty when the cell failed
};

struct SweepResult {
  std::vector<SweepRow> rows;

  std::string csv() const;
};

inline SweepResult run_sweep(const SweepSpec& spec) {
  struct Cell {
    std::size_t n, l;
    std::uint64_t seed;
    IdsMode scheme;
  };
  std::vector<Cell> cells;
  for (auto n : spec.n_values)
    for (auto l : spec.l_values)
      for (auto seed : spec.seeds)
        for (auto scheme : spec.schemes) cells.push_back({n, l, seed, scheme});

  SweepResult out;
  out.rows.resize(cells.size());
  auto run_cell = [&](std::size_t i) {
    const auto& cell = cells[i];
    auto& row = out.rows[i];
    row.metrics.scheme = std::string(to_string(cell.scheme));
    row.metrics.n = cell.n;
    row.metrics.l = cell.l;
    row.metrics.seed = cell.seed;
    try {
      const auto cfg = sweep_scenario(cell.n, cell.l, cell.seed, cell.scheme, spec.range);
      if (auto d = validate_config(cfg); !d.empty()) throw Error(d.front().text());
      row.metrics = run_scenario(cfg, RunOptions{false}).metrics;
    } catch (const std::exception& e) {
      row.error = e.what();
    }
  };

  const unsigned jobs = std::max(1u, spec.jobs);
  if (jobs == 1) {
    for (std::size_t i = 0; i < cells.size(); ++i) run_cell(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned j = 0; j < jobs; ++j) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < cells.size(); i = next++) run_cell(i);
      });
    }
    for (auto& t : pool) t.join();
  }
  return out;
}

inline std::string SweepResult::csv() const {
  std::ostringstream os;
  os << metrics_csv_header << '\n';
  struct Acc {
    double sent = 0, delivered = 0, pdr = 0, listens = 0, detection = 0;
    std::size_t runs = 0, pdr_runs = 0, detections = 0;
  };
  std::map<std::tuple<std::string, std::size_t, std::size_t>, Acc> means;
  std::vector<std::tuple<std::string, std::size_t, std::size_t>> order;
  for (const auto& r : rows) {
    const auto& m = r.metrics;
    if (!r.error.empty()) {
      os << "# error " << m.scheme << ',' << m.n << ',' << m.l << ',' << m.seed << ": " << r.error << '\n';
      continue;
    }
    os << metrics_csv_row(m) << '\n';
    const auto key = std::make_tuple(m.scheme, m.n, m.l);
    if (!means.count(key)) order.push_back(key);
    auto& a = means[key];
    ++a.runs;
    a.sent += double(m.counts.sent);
    a.delivered += double(m.counts.delivered);
    a.listens += double(m.listen_events);
    if (m.pdr()) {
      a.pdr += *m.pdr();
      ++a.pdr_runs;
    }
    if (m.detection_time) {
      a.detection += *m.detection_time;
      ++a.detections;
    }
  }
  for (const auto& key : order) {
    const auto& a = means.at(key);
    char buf[256];
    std::snprintf(buf, sizeof buf, "%s,%zu,%zu,mean,%.2f,%.2f,%s,%.2f,%s\n", std::get<0>(key).c_str(), std::get<1>(key),
                  std::get<2>(key), a.sent / double(a.runs), a.delivered / double(a.runs),
                  a.pdr_runs ? format_hundredths(static_cast<std::uint64_t>(std::llround(a.pdr / double(a.pdr_runs) * 100))).c_str() : "",
                  a.listens / double(a.runs), a.detections ? format_seconds(a.detection / double(a.detections)).c_str() : "");
    os << buf;
  }
  return os.str();
}

}  // namespace swd
