#pragma once

// Intrusion detection: the classic per-hop watchdog and the selective,
// segment-scoped watchdog, plus the pieces both schemes share.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "swd/core.hpp"
#include "swd/routing.hpp"
#include "swd/topology.hpp"

namespace swd {

enum class IdsScheme { watchdog, selective };

inline std::string_view to_string(IdsScheme s) { return s == IdsScheme::watchdog ? "watchdog" : "selective"; }

struct AlarmReport {
  NodeId accused;
  NodeId reporter;
  double loss_percent{0.0};
  double detection_time{0.0};  // seconds since the reporter first saw traffic entrusted to `accused`
  SimTime raised_at;
  IdsScheme scheme{IdsScheme::watchdog};
};

// Console-style alarm line.
inline std::string alarm_line(const AlarmReport& a) {
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "Alarm! node %u not forward more than 20%% packets: %.2f%% loss, %.2f secs from neighbour detection",
                a.accused.value, a.loss_percent, a.detection_time);
  return buf;
}

struct WatchdogConfig {
  double alarm_threshold{0.20};
  std::uint64_t min_observations{20};
  SimTime forward_timeout{SimTime::from_micros(100000)};
};

// What one watcher knows about one watched neighbour.
class MonitorRecord {
 public:
  MonitorRecord() = default;
  MonitorRecord(NodeId watcher, NodeId watched) : watcher_(watcher), watched_(watched) {}

  NodeId watcher() const { return watcher_; }
  NodeId watched() const { return watched_; }
  std::uint64_t entrusted() const { return entrusted_; }
  std::uint64_t forwarded() const { return forwarded_; }
  std::uint64_t failed() const { return failed_; }
  std::size_t pending() const { return pending_.size(); }
  std::optional<SimTime> first_entrusted() const { return first_; }

  void entrust(std::uint64_t packet_id, SimTime now, SimTime timeout) {
    if (!first_) first_ = now;
    if (pending_.emplace(packet_id, now + timeout).second) ++entrusted_;
  }

  // True when the overheard packet cleared a pending entry.
  bool overhear(std::uint64_t packet_id) {
    if (pending_.erase(packet_id) == 0) return false;
    ++forwarded_;
    return true;
  }

  // Entries whose deadline has passed become failures.
  void expire(SimTime now) {
    for (auto it = pending_.begin(); it != pending_.end();) {
      if (it->second <= now) {
        ++failed_;
        it = pending_.erase(it);
      } else {
        ++it;
      }
    }
  }

  // (entrusted - forwarded - pending) / entrusted.
  double loss_fraction() const {
    if (entrusted_ == 0) return 0.0;
    return static_cast<double>(entrusted_ - forwarded_ - pending_.size()) / static_cast<double>(entrusted_);
  }

 private:
  NodeId watcher_;
  NodeId watched_;
  std::uint64_t entrusted_{0};
  std::uint64_t forwarded_{0};
  std::uint64_t failed_{0};
  std::map<std::uint64_t, SimTime> pending_;
  std::optional<SimTime> first_;
};

inline std::optional<AlarmReport> watchdog_check_alarm(MonitorRecord& record, SimTime now, const WatchdogConfig& cfg,
                                                       IdsScheme scheme = IdsScheme::watchdog) {
  record.expire(now);
  if (record.entrusted() < cfg.min_observations) return std::nullopt;
  const double loss = record.loss_fraction();
  if (!(loss > cfg.alarm_threshold)) return std::nullopt;
  AlarmReport a;
  a.accused = record.watched();
  a.reporter = record.watcher();
  a.loss_percent = loss * 100.0;
  a.detection_time = (now - record.first_entrusted().value_or(now)).seconds();
  a.raised_at = now;
  a.scheme = scheme;
  return a;
}

// Every forwarding node watches its next hop; the destination watches nobody
// and nobody watches the destination.
class Watchdog {
 public:
  explicit Watchdog(WatchdogConfig cfg = {}) : cfg_(cfg) {}

  const WatchdogConfig& config() const { return cfg_; }

  // Returns true when a listen was armed (one promiscuous-listen event).
  bool on_entrust(NodeId watcher, const Packet& pkt, NodeId next_hop, SimTime now) {
    if (watcher == pkt.destination || next_hop == pkt.destination) return false;
    record(watcher, next_hop).entrust(pkt.id, now, cfg_.forward_timeout);
    ++listen_events_;
    return true;
  }

  void on_overhear(NodeId watcher, NodeId transmitter, const Packet& pkt) {
    if (auto it = records_.find({watcher, transmitter}); it != records_.end()) it->second.overhear(pkt.id);
  }

  std::optional<AlarmReport> check(NodeId watcher, NodeId watched, SimTime now) {
    auto it = records_.find({watcher, watched});
    if (it == records_.end()) return std::nullopt;
    return watchdog_check_alarm(it->second, now, cfg_);
  }

  const MonitorRecord* find(NodeId watcher, NodeId watched) const {
    auto it = records_.find({watcher, watched});
    return it == records_.end() ? nullptr : &it->second;
  }

  std::uint64_t listen_events() const { return listen_events_; }

  template <typename F>
  void for_each_record(F&& f) const {
    for (const auto& [key, rec] : records_) f(rec);
  }

 private:
  MonitorRecord& record(NodeId watcher, NodeId watched) {
    auto [it, inserted] = records_.try_emplace({watcher, watched}, watcher, watched);
    return it->second;
  }

  WatchdogConfig cfg_;
  std::map<std::pair<NodeId, NodeId>, MonitorRecord> records_;
  std::uint64_t listen_events_{0};
};

// ---------------------------------------------------------------------------
// End-to-end acknowledgements
// ---------------------------------------------------------------------------

inline constexpr std::uint64_t default_ack_every = 10;

// Destination acknowledges every `every`-th data packet it receives.
inline bool dest_ack_due(std::uint64_t data_count, std::uint64_t every = default_ack_every) {
  return data_count > 0 && data_count % every == 0;
}

// Source side: a timer is armed on every window-closing send; a timer that
// fires with no acknowledgement received since its send opens a missing-ACK
// episode. One trigger per episode; any acknowledgement closes the episode.
class AckWatch {
 public:
  explicit AckWatch(std::uint64_t every = default_ack_every) : every_(every) {}

  // Returns true when this send closes a window and a timeout must be armed.
  bool on_send(std::uint64_t sent_count) const { return sent_count > 0 && sent_count % every_ == 0; }

  void on_ack(SimTime now) {
    last_ack_ = now;
    in_episode_ = false;
  }

  // Timer for a window whose closing send happened at `window_sent`.
  bool on_timeout(SimTime window_sent) {
    if (last_ack_ && *last_ack_ >= window_sent) return false;
    if (in_episode_) return false;
    in_episode_ = true;
    ++triggers_;
    return true;
  }

  bool in_episode() const { return in_episode_; }
  std::uint64_t triggers() const { return triggers_; }

 private:
  std::uint64_t every_;
  std::optional<SimTime> last_ack_;
  bool in_episode_{false};
  std::uint64_t triggers_{0};
};

// Twice the time to send a full window plus a route round trip.
inline SimTime default_ack_timeout(std::uint64_t every, SimTime interval, std::size_t hops, SimTime per_hop_latency) {
  return (interval * static_cast<std::int64_t>(every) + per_hop_latency * static_cast<std::int64_t>(2 * hops)) * 2;
}

// ---------------------------------------------------------------------------
// Suspect selection
// ---------------------------------------------------------------------------

struct ThresholdState {
  SeqNo current{0};
  std::uint64_t slack{10};
};

// Threshold follows the last authenticated destination sequence plus slack.
inline ThresholdState update_threshold(ThresholdState state, SeqNo observed_dest_seq) {
  state.current = SeqNo{observed_dest_seq.value + state.slack};
  return state;
}

struct Segment {
  NodeId prev;
  NodeId node;
  NodeId next;

  friend bool operator==(const Segment&, const Segment&) = default;
};

// Route neighbours of `node`; endpoints stand in for themselves at the ends.
inline Segment segment_around(std::span<const NodeId> route, NodeId node) {
  const auto it = std::find(route.begin(), route.end(), node);
  if (it == route.end()) throw Error("node " + std::to_string(node.value) + " is not on the route");
  const NodeId prev = it == route.begin() ? *it : *(it - 1);
  const NodeId next = it + 1 == route.end() ? *it : *(it + 1);
  return Segment{prev, node, next};
}

// One segment per replier whose sequence exceeds the threshold, in route
// order. Repliers that are the (trusted) destination or off-route are skipped.
inline std::vector<Segment> build_suspect_list(std::span<const RouteReplyRecord> cache, SeqNo threshold,
                                               std::span<const NodeId> route) {
  if (route.size() < 2) throw Error("route must contain source and destination");
  std::vector<std::size_t> positions;
  for (const auto& rec : cache) {
    if (!(rec.dest_seq > threshold)) continue;
    if (rec.replier == route.front() || rec.replier == route.back()) continue;
    const auto it = std::find(route.begin(), route.end(), rec.replier);
    if (it == route.end()) continue;
    positions.push_back(static_cast<std::size_t>(it - route.begin()));
  }
  std::sort(positions.begin(), positions.end());
  positions.erase(std::unique(positions.begin(), positions.end()), positions.end());
  std::vector<Segment> out;
  for (auto p : positions) out.push_back(segment_around(route, route[p]));
  return out;
}

// Used when acknowledgements stop but no reply looks forged.
inline std::vector<Segment> full_route_segments(std::span<const NodeId> route) {
  std::vector<Segment> out;
  for (std::size_t i = 1; i + 1 < route.size(); ++i) out.push_back(Segment{route[i - 1], route[i], route[i + 1]});
  return out;
}

struct NodeCounts {
  std::uint64_t received{0};
  std::uint64_t forwarded{0};
};

struct SegmentConfig {
  double tolerance{0.05};
  std::uint64_t min_observations{20};
};

struct SegmentVerdict {
  enum class Status { clear, accused, deferred };
  Status status{Status::clear};
  std::optional<NodeId> accused;
  NodeCounts counts;  // counts of the accused node
};

// A node is a dropper when it forwards fewer than (1 - tolerance) of the data
// packets handed to it. Checked suspect first, then successor, then
// predecessor; trusted nodes are skipped.
template <typename CountsOf>
SegmentVerdict segmented_watchdog(const Segment& segment, CountsOf&& counts_of, std::span<const NodeId> trusted,
                                  const SegmentConfig& cfg) {
  const NodeId order[3] = {segment.node, segment.next, segment.prev};
  std::set<NodeId> checked;
  for (NodeId n : order) {
    if (std::find(trusted.begin(), trusted.end(), n) != trusted.end()) continue;
    if (!checked.insert(n).second) continue;
    const NodeCounts c = counts_of(n);
    if (c.received < cfg.min_observations) return {SegmentVerdict::Status::deferred, std::nullopt, c};
    if (static_cast<double>(c.forwarded) < static_cast<double>(c.received) * (1.0 - cfg.tolerance)) {
      return {SegmentVerdict::Status::accused, n, c};
    }
  }
  return {};
}

// ---------------------------------------------------------------------------
// Clusters
// ---------------------------------------------------------------------------

struct Cluster {
  std::vector<NodeId> members;  // ascending
  bool qualifies{false};

  bool contains(NodeId n) const { return std::binary_search(members.begin(), members.end(), n); }
};

// ceil(n / l) geographic clusters: nodes are ordered along vertical strips
// (serpentine in y) and cut into consecutive runs of l; the last run holds
// the remainder.
inline std::vector<Cluster> cluster_partition(const Topology& topo, std::size_t l) {
  if (l < 3) throw Error("cluster size must be at least 3");
  const std::size_t n = topo.size();
  if (n == 0) return {};
  if (n <= l) {
    Cluster c;
    for (std::uint32_t i = 0; i < n; ++i) c.members.push_back(NodeId{i});
    return {c};
  }
  const std::size_t k = (n + l - 1) / l;
  const std::size_t strips = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(std::sqrt(double(k)))));

  std::vector<NodeId> by_x(n);
  for (std::uint32_t i = 0; i < n; ++i) by_x[i] = NodeId{i};
  std::stable_sort(by_x.begin(), by_x.end(),
                   [&](NodeId a, NodeId b) { return topo.position(a).x < topo.position(b).x; });

  std::vector<NodeId> order;
  order.reserve(n);
  for (std::size_t s = 0; s < strips; ++s) {
    const std::size_t lo = s * n / strips;
    const std::size_t hi = (s + 1) * n / strips;
    std::vector<NodeId> strip(by_x.begin() + static_cast<std::ptrdiff_t>(lo), by_x.begin() + static_cast<std::ptrdiff_t>(hi));
    const bool up = s % 2 == 0;
    std::stable_sort(strip.begin(), strip.end(), [&](NodeId a, NodeId b) {
      const double ya = topo.position(a).y, yb = topo.position(b).y;
      return up ? ya < yb : ya > yb;
    });
    order.insert(order.end(), strip.begin(), strip.end());
  }

  std::vector<Cluster> out(k);
  for (std::size_t i = 0; i < n; ++i) out[i / l].members.push_back(order[i]);
  for (auto& c : out) std::sort(c.members.begin(), c.members.end());
  return out;
}

inline bool cluster_qualify(const Cluster& cluster, std::span<const Segment> suspects) {
  return std::any_of(suspects.begin(), suspects.end(), [&](const Segment& s) {
    return cluster.contains(s.prev) || cluster.contains(s.node) || cluster.contains(s.next);
  });
}

}  // namespace swd
