#pragma once

// Scenario configuration: schema, text format, validation and presets.
//
// File format (schema version 1): one `key = value` per line, `#` starts a
// comment. Unknown keys are errors. `node = <id> <x> <y>` repeats once per
// node; every other key appears at most once. Example:
//
//   version = 1
//   grid_side = 500
//   range = 150
//   node = 0 40 250
//   node = 1 160 250
//   flow_source = 0
//   flow_destination = 1
//   ids = watchdog
//
// Instead of `node` lines, `placement = random` with `node_count` and
// `placement_seed` draws a connected uniform placement inside the grid.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "swd/core.hpp"
#include "swd/engine.hpp"
#include "swd/ids.hpp"
#include "swd/routing.hpp"
#include "swd/topology.hpp"

namespace swd {

enum class IdsMode { none, watchdog, selective };

inline std::string_view to_string(IdsMode m) {
  switch (m) {
    case IdsMode::none: return "none";
    case IdsMode::watchdog: return "watchdog";
    case IdsMode::selective: return "selective";
  }
  return "?";
}

inline std::optional<IdsMode> parse_ids_mode(std::string_view s) {
  if (s == "none") return IdsMode::none;
  if (s == "watchdog") return IdsMode::watchdog;
  if (s == "selective") return IdsMode::selective;
  return std::nullopt;
}

struct ScenarioConfig {
  double grid_side{500.0};
  std::vector<Position> nodes;

  MediumConfig medium;

  NodeId flow_source{0};
  NodeId flow_destination{1};
  std::uint32_t packet_size{512};
  SimTime packet_interval{SimTime::from_micros(250000)};
  std::uint64_t packet_count{1000};
  SimTime flow_start{SimTime::from_seconds(1.0)};
  SimTime drain{SimTime::from_seconds(5.0)};

  std::vector<NodeId> adversaries;
  std::uint64_t forge_offset{default_forge_offset};
  std::uint64_t initial_seq{1};
  SimTime discovery_timeout{SimTime::from_seconds(1.0)};
  std::uint32_t discovery_retries{3};

  IdsMode ids{IdsMode::none};
  std::size_t cluster_size{3};
  std::uint64_t slack{10};
  double tolerance{0.05};
  double alarm_threshold{0.20};
  std::uint64_t min_observations{20};
  SimTime forward_timeout{SimTime::from_micros(100000)};
  std::uint64_t ack_every{default_ack_every};
  std::optional<SimTime> ack_timeout;  // empty = derived from interval and route length

  std::uint64_t seed{1};

  SimTime end_time() const {
    return flow_start + packet_interval * static_cast<std::int64_t>(packet_count) + drain;
  }

  bool is_adversary(NodeId n) const { return std::find(adversaries.begin(), adversaries.end(), n) != adversaries.end(); }

  // Everything but the IDS settings and the seed; two runs with equal keys
  // ran the same scenario.
  std::string scenario_key() const {
    std::ostringstream os;
    os << "side=" << grid_side << ";range=" << medium.range << ";lat=" << medium.per_hop_latency.micros()
       << ";loss=" << medium.baseline_loss << ";flow=" << flow_source << '>' << flow_destination << ";count=" << packet_count
       << ";interval=" << packet_interval.micros() << ";adv=";
    for (auto a : adversaries) os << a << ',';
    os << ";nodes=";
    for (const auto& p : nodes) os << p.x << ':' << p.y << ',';
    return os.str();
  }
};

struct Diagnostic {
  std::size_t line{0};  // 0 when not tied to a file line
  std::string field;
  std::string message;

  std::string text() const {
    std::string out;
    if (line > 0) out += "line " + std::to_string(line) + ": ";
    out += field + ": " + message;
    return out;
  }
};

// Uniform placement inside [0, side]^2, redrawn until the unit-disk graph is
// connected. Deterministic in `seed`.
inline std::vector<Position> random_connected_placement(std::size_t n, double side, double range, std::uint64_t seed,
                                                        std::size_t max_attempts = 10000) {
  Random rng(seed);
  for (std::size_t attempt = 0; attempt < max_attempts; ++attempt) {
    std::vector<Position> pos(n);
    for (auto& p : pos) {
      p.x = std::round(rng.uniform() * side * 10.0) / 10.0;
      p.y = std::round(rng.uniform() * side * 10.0) / 10.0;
    }
    if (Topology(pos, range).connected()) return pos;
  }
  throw Error("no connected placement found for " + std::to_string(n) + " nodes");
}

inline std::vector<Diagnostic> validate_config(const ScenarioConfig& c) {
  std::vector<Diagnostic> d;
  auto add = [&](std::string field, std::string msg) { d.push_back({0, std::move(field), std::move(msg)}); };
  const auto n = c.nodes.size();
  if (!(c.grid_side > 0.0)) add("grid_side", "must be positive");
  if (n == 0) add("node", "at least one node is required");
  for (std::size_t i = 0; i < n; ++i) {
    const auto& p = c.nodes[i];
    if (p.x < 0 || p.y < 0 || p.x > c.grid_side || p.y > c.grid_side) {
      add("node", "node " + std::to_string(i) + " lies outside the " + std::to_string(int(c.grid_side)) + " m grid");
    }
  }
  if (!(c.medium.range > 0.0)) add("range", "must be positive");
  if (c.medium.per_hop_latency <= SimTime{}) add("per_hop_latency", "must be positive");
  if (c.medium.baseline_loss < 0.0 || c.medium.baseline_loss >= 1.0) add("baseline_loss", "must lie in [0, 1)");
  if (c.flow_source.value >= n) add("flow_source", "unknown node " + std::to_string(c.flow_source.value));
  if (c.flow_destination.value >= n) add("flow_destination", "unknown node " + std::to_string(c.flow_destination.value));
  if (c.flow_source == c.flow_destination) add("flow_destination", "must differ from flow_source");
  if (c.packet_interval <= SimTime{}) add("packet_interval", "must be positive");
  if (c.packet_size == 0) add("packet_size", "must be positive");
  std::set<NodeId> seen;
  for (auto a : c.adversaries) {
    if (a.value >= n) add("adversaries", "unknown node " + std::to_string(a.value));
    if (a == c.flow_source || a == c.flow_destination) {
      add("adversaries", "node " + std::to_string(a.value) + " is a flow endpoint; endpoints are trusted and cannot be adversaries");
    }
    if (!seen.insert(a).second) add("adversaries", "duplicate node " + std::to_string(a.value));
  }
  if (c.cluster_size < 3) add("cluster_size", "must be at least 3 (a monitored segment spans three nodes)");
  if (c.tolerance < 0.0 || c.tolerance >= 1.0) add("tolerance", "must lie in [0, 1)");
  if (c.alarm_threshold <= 0.0 || c.alarm_threshold >= 1.0) add("alarm_threshold", "must lie in (0, 1)");
  if (c.min_observations == 0) add("min_observations", "must be positive");
  if (c.forward_timeout <= SimTime{}) add("forward_timeout", "must be positive");
  if (c.ack_every == 0) add("ack_every", "must be positive");
  if (c.ack_timeout && *c.ack_timeout <= SimTime{}) add("ack_timeout", "must be positive");
  if (c.discovery_timeout <= SimTime{}) add("discovery_timeout", "must be positive");
  if (c.forge_offset == 0) add("forge_offset", "must be positive");
  if (c.flow_start < SimTime{}) add("flow_start", "must not be negative");
  return d;
}

struct ParseResult {
  std::optional<ScenarioConfig> config;
  std::vector<Diagnostic> diagnostics;

  bool ok() const { return config.has_value() && diagnostics.empty(); }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

inline std::optional<double> to_double(std::string_view s) {
  std::string tmp(s);
  if (tmp.empty()) return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(tmp.c_str(), &end);
  if (end != tmp.c_str() + tmp.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

inline std::optional<std::uint64_t> to_u64(std::string_view s) {
  std::uint64_t v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) return std::nullopt;
  return v;
}

}  // namespace detail

inline constexpr int config_schema_version = 1;

inline ParseResult parse_config(std::string_view text) {
  using namespace detail;
  ParseResult res;
  ScenarioConfig c;
  std::map<std::uint64_t, Position> node_lines;
  std::set<std::string> seen_keys;
  std::optional<std::string> placement;
  std::optional<std::uint64_t> node_count, placement_seed;
  bool have_version = false;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    auto diag = [&](std::string field, std::string msg) { res.diagnostics.push_back({line_no, std::move(field), std::move(msg)}); };
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      diag("syntax", "expected `key = value`");
      continue;
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    if (key != "node" && !seen_keys.insert(key).second) {
      diag(key, "duplicate key");
      continue;
    }

    auto num = [&](auto assign) {
      if (auto v = to_double(value)) assign(*v);
      else diag(key, "expected a number, got `" + std::string(value) + "`");
    };
    auto uint = [&](auto assign) {
      if (auto v = to_u64(value)) assign(*v);
      else diag(key, "expected a non-negative integer, got `" + std::string(value) + "`");
    };
    auto secs = [&](SimTime& dst) {
      num([&](double v) {
        if (v < 0) diag(key, "must not be negative");
        else dst = SimTime::from_seconds(v);
      });
    };

    if (key == "version") {
      uint([&](std::uint64_t v) {
        have_version = true;
        if (v != config_schema_version) diag(key, "unsupported schema version " + std::to_string(v));
      });
    } else if (key == "node") {
      const auto parts = split_ws(value);
      const auto id = parts.size() == 3 ? to_u64(parts[0]) : std::nullopt;
      const auto x = parts.size() == 3 ? to_double(parts[1]) : std::nullopt;
      const auto y = parts.size() == 3 ? to_double(parts[2]) : std::nullopt;
      if (!id || !x || !y) diag(key, "expected `node = <id> <x> <y>`");
      else if (!node_lines.emplace(*id, Position{*x, *y}).second) diag(key, "duplicate node id " + std::to_string(*id));
    } else if (key == "placement") {
      placement = std::string(value);
      if (value != "random" && value != "explicit") diag(key, "expected `random` or `explicit`");
    } else if (key == "node_count") {
      uint([&](std::uint64_t v) { node_count = v; });
    } else if (key == "placement_seed") {
      uint([&](std::uint64_t v) { placement_seed = v; });
    } else if (key == "grid_side") {
      num([&](double v) { c.grid_side = v; });
    } else if (key == "range") {
      num([&](double v) { c.medium.range = v; });
    } else if (key == "per_hop_latency") {
      secs(c.medium.per_hop_latency);
    } else if (key == "baseline_loss") {
      num([&](double v) { c.medium.baseline_loss = v; });
    } else if (key == "flow_source") {
      uint([&](std::uint64_t v) { c.flow_source = NodeId{static_cast<std::uint32_t>(v)}; });
    } else if (key == "flow_destination") {
      uint([&](std::uint64_t v) { c.flow_destination = NodeId{static_cast<std::uint32_t>(v)}; });
    } else if (key == "packet_size") {
      uint([&](std::uint64_t v) { c.packet_size = static_cast<std::uint32_t>(v); });
    } else if (key == "packet_interval") {
      secs(c.packet_interval);
    } else if (key == "packet_count") {
      uint([&](std::uint64_t v) { c.packet_count = v; });
    } else if (key == "flow_start") {
      secs(c.flow_start);
    } else if (key == "drain") {
      secs(c.drain);
    } else if (key == "adversaries") {
      c.adversaries.clear();
      std::string list(value);
      std::replace(list.begin(), list.end(), ',', ' ');
      for (auto tok : split_ws(list)) {
        if (auto v = to_u64(tok)) c.adversaries.push_back(NodeId{static_cast<std::uint32_t>(*v)});
        else diag(key, "expected a comma-separated list of node ids");
      }
    } else if (key == "forge_offset") {
      uint([&](std::uint64_t v) { c.forge_offset = v; });
    } else if (key == "initial_seq") {
      uint([&](std::uint64_t v) { c.initial_seq = v; });
    } else if (key == "discovery_timeout") {
      secs(c.discovery_timeout);
    } else if (key == "discovery_retries") {
      uint([&](std::uint64_t v) { c.discovery_retries = static_cast<std::uint32_t>(v); });
    } else if (key == "ids") {
      if (auto m = parse_ids_mode(value)) c.ids = *m;
      else diag(key, "expected none, watchdog or selective");
    } else if (key == "cluster_size") {
      uint([&](std::uint64_t v) { c.cluster_size = v; });
    } else if (key == "slack") {
      uint([&](std::uint64_t v) { c.slack = v; });
    } else if (key == "tolerance") {
      num([&](double v) { c.tolerance = v; });
    } else if (key == "alarm_threshold") {
      num([&](double v) { c.alarm_threshold = v; });
    } else if (key == "min_observations") {
      uint([&](std::uint64_t v) { c.min_observations = v; });
    } else if (key == "forward_timeout") {
      secs(c.forward_timeout);
    } else if (key == "ack_every") {
      uint([&](std::uint64_t v) { c.ack_every = v; });
    } else if (key == "ack_timeout") {
      if (value == "auto") c.ack_timeout.reset();
      else {
        SimTime t;
        secs(t);
        c.ack_timeout = t;
      }
    } else if (key == "seed") {
      uint([&](std::uint64_t v) { c.seed = v; });
    } else {
      diag(key, "unknown key");
    }
  }

  if (!have_version) res.diagnostics.push_back({0, "version", "missing; expected `version = 1`"});

  if (placement.value_or("explicit") == "random") {
    if (!node_lines.empty()) res.diagnostics.push_back({0, "node", "explicit nodes are not allowed with random placement"});
    if (!node_count) {
      res.diagnostics.push_back({0, "node_count", "required with random placement"});
    } else {
      try {
        c.nodes = random_connected_placement(*node_count, c.grid_side, c.medium.range, placement_seed.value_or(c.seed));
      } catch (const Error& e) {
        res.diagnostics.push_back({0, "placement", e.what()});
      }
    }
  } else {
    if (node_count) res.diagnostics.push_back({0, "node_count", "only valid with `placement = random`"});
    for (std::uint64_t i = 0; i < node_lines.size(); ++i) {
      auto it = node_lines.find(i);
      if (it == node_lines.end()) {
        res.diagnostics.push_back({0, "node", "node ids must be dense 0.." + std::to_string(node_lines.size() - 1) +
                                                  "; missing " + std::to_string(i)});
        break;
      }
      c.nodes.push_back(it->second);
    }
  }

  if (res.diagnostics.empty()) {
    for (auto& d : validate_config(c)) res.diagnostics.push_back(std::move(d));
  }
  res.config = std::move(c);
  return res;
}

inline ParseResult load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    ParseResult r;
    r.diagnostics.push_back({0, "config", "cannot open " + path});
    return r;
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

inline std::string format_seconds_compact(SimTime t) {
  std::string s = t.str();
  while (s.back() == '0') s.pop_back();
  if (s.back() == '.') s.pop_back();
  return s;
}

// Inverse of parse_config for explicit placements.
inline std::string config_text(const ScenarioConfig& c) {
  std::ostringstream os;
  os << "version = " << config_schema_version << '\n';
  os << "grid_side = " << c.grid_side << '\n';
  os << "range = " << c.medium.range << '\n';
  os << "per_hop_latency = " << format_seconds_compact(c.medium.per_hop_latency) << '\n';
  os << "baseline_loss = " << c.medium.baseline_loss << '\n';
  for (std::size_t i = 0; i < c.nodes.size(); ++i) os << "node = " << i << ' ' << c.nodes[i].x << ' ' << c.nodes[i].y << '\n';
  os << "flow_source = " << c.flow_source << '\n';
  os << "flow_destination = " << c.flow_destination << '\n';
  os << "packet_size = " << c.packet_size << '\n';
  os << "packet_interval = " << format_seconds_compact(c.packet_interval) << '\n';
  os << "packet_count = " << c.packet_count << '\n';
  os << "flow_start = " << format_seconds_compact(c.flow_start) << '\n';
  os << "drain = " << format_seconds_compact(c.drain) << '\n';
  if (!c.adversaries.empty()) {
    os << "adversaries = ";
    for (std::size_t i = 0; i < c.adversaries.size(); ++i) os << (i ? "," : "") << c.adversaries[i];
    os << '\n';
  }
  os << "forge_offset = " << c.forge_offset << '\n';
  os << "initial_seq = " << c.initial_seq << '\n';
  os << "discovery_timeout = " << format_seconds_compact(c.discovery_timeout) << '\n';
  os << "discovery_retries = " << c.discovery_retries << '\n';
  os << "ids = " << to_string(c.ids) << '\n';
  os << "cluster_size = " << c.cluster_size << '\n';
  os << "slack = " << c.slack << '\n';
  os << "tolerance = " << c.tolerance << '\n';
  os << "alarm_threshold = " << c.alarm_threshold << '\n';
  os << "min_observations = " << c.min_observations << '\n';
  os << "forward_timeout = " << format_seconds_compact(c.forward_timeout) << '\n';
  os << "ack_every = " << c.ack_every << '\n';
  os << "ack_timeout = " << (c.ack_timeout ? format_seconds_compact(*c.ack_timeout) : std::string("auto")) << '\n';
  os << "seed = " << c.seed << '\n';
  return os.str();
}

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------

// Ten nodes on a 500 m grid. Honest shortest route 0-1-2-4-6 (four hops);
// node 3 hangs off node 1 and is not on that route.
inline ScenarioConfig reference_scenario() {
  ScenarioConfig c;
  c.grid_side = 500;
  c.nodes = {{40, 250}, {160, 250}, {280, 250}, {160, 380}, {400, 250},
             {90, 110}, {460, 370}, {260, 390}, {330, 100}, {470, 120}};
  c.medium.range = 150;
  c.medium.per_hop_latency = SimTime::from_micros(2000);
  c.medium.baseline_loss = 0.003;
  c.flow_source = NodeId{0};
  c.flow_destination = NodeId{6};
  c.packet_size = 512;
  c.packet_interval = SimTime::from_micros(250000);
  c.packet_count = 1000;
  c.min_observations = 100;
  return c;
}

inline const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"paper-baseline", "paper-blackhole-noids", "paper-blackhole-watchdog",
                                              "paper-blackhole-selective"};
  return names;
}

inline std::optional<ScenarioConfig> preset(std::string_view name) {
  ScenarioConfig c = reference_scenario();
  if (name == "paper-baseline") return c;
  c.adversaries = {NodeId{3}};
  if (name == "paper-blackhole-noids") return c;
  if (name == "paper-blackhole-watchdog") {
    c.ids = IdsMode::watchdog;
    return c;
  }
  if (name == "paper-blackhole-selective") {
    c.ids = IdsMode::selective;
    return c;
  }
  return std::nullopt;
}

}  // namespace swd
