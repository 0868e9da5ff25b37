#pragma once

// AODV-lite route discovery and the black-hole adversary.
//
// Only the discovery target answers a request (no intermediate replies);
// replies follow the reverse of the recorded request path. A black hole
// answers every request it hears with a forged, very fresh destination
// sequence number and never rebroadcasts.

#include <algorithm>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "swd/core.hpp"

namespace swd {

enum class NodeBehavior { honest, black_hole };

struct RouteReplyRecord {
  NodeId replier;
  SeqNo dest_seq;
  std::uint32_t hop_count{0};
  std::vector<NodeId> route;  // flow source ... flow destination

  friend bool operator==(const RouteReplyRecord&, const RouteReplyRecord&) = default;
};

struct RouteEntry {
  NodeId destination;
  NodeId next_hop;
  SeqNo dest_seq;
  std::uint32_t hop_count{0};
  std::uint32_t broadcast_id{0};  // discovery that installed the entry
};

inline constexpr std::uint64_t default_forge_offset = 4096;

// Forged destination sequence: highest value seen for the target plus an offset.
inline SeqNo forged_seq(std::optional<SeqNo> highest_observed, std::uint64_t offset = default_forge_offset) {
  return SeqNo{(highest_observed ? highest_observed->value : 0) + offset};
}

// Highest dest_seq wins; ties go to fewer hops, then the lower replier id.
inline const RouteReplyRecord& best_reply(std::span<const RouteReplyRecord> cache) {
  if (cache.empty()) throw Error("no route: reply cache is empty");
  const auto better = [](const RouteReplyRecord& a, const RouteReplyRecord& b) {
    if (a.dest_seq != b.dest_seq) return a.dest_seq > b.dest_seq;
    if (a.hop_count != b.hop_count) return a.hop_count < b.hop_count;
    return a.replier < b.replier;
  };
  return *std::min_element(cache.begin(), cache.end(),
                           [&](const auto& a, const auto& b) { return better(a, b); });
}

// Forwarding entry the source installs for the winning reply.
inline RouteEntry select_route(std::span<const RouteReplyRecord> cache) {
  const auto& best = best_reply(cache);
  if (best.route.size() < 2) throw Error("reply route must contain at least source and destination");
  return RouteEntry{best.route.back(), best.route[1], best.dest_seq, best.hop_count, 0};
}

struct DropRequest {};
struct Rebroadcast {
  RouteRequest request;
};
struct Reply {
  RouteReply reply;
  NodeId next_hop;
};
using RreqAction = std::variant<DropRequest, Rebroadcast, Reply>;

// Per-node routing state. Owned by the simulation; no sharing across runs.
class RoutingNode {
 public:
  RoutingNode() = default;
  RoutingNode(NodeId id, NodeBehavior behavior, SeqNo initial_seq, std::uint64_t forge_offset = default_forge_offset)
      : id_(id), behavior_(behavior), seq_(initial_seq), forge_offset_(forge_offset) {}

  NodeId id() const { return id_; }
  NodeBehavior behavior() const { return behavior_; }
  bool honest() const { return behavior_ == NodeBehavior::honest; }
  SeqNo seq() const { return seq_; }

  // Originator side: bump own sequence and produce the request to flood.
  RouteRequest originate(NodeId target, std::vector<NodeId> avoid = {}) {
    if (target == id_) throw Error("discovery target equals source");
    ++seq_.value;
    RouteRequest rreq;
    rreq.origin = id_;
    rreq.target = target;
    rreq.broadcast_id = ++broadcast_id_;
    rreq.hop_count = 0;
    rreq.origin_seq = seq_;
    rreq.path = {id_};
    rreq.avoid = std::move(avoid);
    mark_seen(rreq);
    return rreq;
  }

  std::uint32_t last_broadcast_id() const { return broadcast_id_; }

  // Reaction to a received request. `rreq.path.back()` is the previous hop.
  RreqAction handle_rreq(const RouteRequest& rreq) {
    observe_request(rreq);
    if (seen(rreq.origin, rreq.broadcast_id)) return DropRequest{};
    if (honest() && std::any_of(rreq.path.begin(), rreq.path.end(), [&](NodeId n) { return avoids(rreq.avoid, n); })) {
      return DropRequest{};
    }
    mark_seen(rreq);
    const NodeId prev = rreq.path.back();

    if (!honest()) {
      RouteReply rrep;
      rrep.origin = rreq.origin;
      rrep.target = rreq.target;
      rrep.broadcast_id = rreq.broadcast_id;
      rrep.replier = id_;
      rrep.dest_seq = forged_seq(highest_seen(rreq.target), forge_offset_);
      rrep.hop_count = 1;
      rrep.route = rreq.path;
      rrep.route.push_back(id_);
      rrep.route.push_back(rreq.target);
      return Reply{std::move(rrep), prev};
    }

    install({rreq.origin, prev, rreq.origin_seq, rreq.hop_count + 1, rreq.broadcast_id});
    if (rreq.target == id_) {
      RouteReply rrep;
      rrep.origin = rreq.origin;
      rrep.target = id_;
      rrep.broadcast_id = rreq.broadcast_id;
      rrep.replier = id_;
      rrep.dest_seq = seq_;
      rrep.hop_count = 0;
      rrep.route = rreq.path;
      rrep.route.push_back(id_);
      return Reply{std::move(rrep), prev};
    }
    RouteRequest next = rreq;
    next.hop_count += 1;
    next.path.push_back(id_);
    return Rebroadcast{std::move(next)};
  }

  // Relay side of a reply travelling back to its originator. Returns the
  // next hop toward the originator, or nothing when the reply must be dropped.
  std::optional<NodeId> relay_reply(RouteReply& rrep) {
    observe_reply(rrep);
    const auto& route = rrep.route;
    const auto at = std::find(route.begin(), route.end(), id_);
    if (at == route.end() || at == route.begin()) return std::nullopt;
    if (honest()) {
      if (auto it = seen_.find({rrep.origin, rrep.broadcast_id}); it != seen_.end()) {
        const auto& avoid = it->second;
        if (std::any_of(route.begin(), route.end(), [&](NodeId n) { return avoids(avoid, n); })) return std::nullopt;
      }
      rrep.hop_count += 1;
      install({rrep.target, *(at + 1), rrep.dest_seq, rrep.hop_count, rrep.broadcast_id});
    }
    return *(at - 1);
  }

  // Source installs the chosen forwarding entry directly.
  void set_route(RouteEntry entry) { routes_[entry.destination] = entry; }

  std::optional<RouteEntry> route_to(NodeId dest) const {
    if (auto it = routes_.find(dest); it != routes_.end()) return it->second;
    return std::nullopt;
  }

  // Adversary bookkeeping: highest sequence observed for `target`.
  std::optional<SeqNo> highest_seen(NodeId target) const {
    if (auto it = observed_.find(target); it != observed_.end()) return it->second;
    return std::nullopt;
  }

  void observe_request(const RouteRequest& rreq) { note(rreq.origin, rreq.origin_seq); }
  void observe_reply(const RouteReply& rrep) {
    if (rrep.replier == rrep.target) note(rrep.target, rrep.dest_seq);
  }

 private:
  static bool avoids(const std::vector<NodeId>& avoid, NodeId n) {
    return std::find(avoid.begin(), avoid.end(), n) != avoid.end();
  }

  bool seen(NodeId origin, std::uint32_t bid) const { return seen_.count({origin, bid}) > 0; }
  void mark_seen(const RouteRequest& rreq) { seen_[{rreq.origin, rreq.broadcast_id}] = rreq.avoid; }

  void note(NodeId node, SeqNo s) {
    auto& slot = observed_[node];
    slot = std::max(slot, s);
  }

  // Newer discovery replaces; within a discovery a fresher or shorter route wins.
  void install(const RouteEntry& e) {
    auto it = routes_.find(e.destination);
    if (it == routes_.end()) {
      routes_.emplace(e.destination, e);
      return;
    }
    auto& cur = it->second;
    const bool newer = e.broadcast_id > cur.broadcast_id;
    const bool same = e.broadcast_id == cur.broadcast_id;
    if (newer || (same && (e.dest_seq > cur.dest_seq || (e.dest_seq == cur.dest_seq && e.hop_count < cur.hop_count)))) {
      cur = e;
    }
  }

  NodeId id_;
  NodeBehavior behavior_{NodeBehavior::honest};
  SeqNo seq_{1};
  std::uint64_t forge_offset_{default_forge_offset};
  std::uint32_t broadcast_id_{0};
  std::map<std::pair<NodeId, std::uint32_t>, std::vector<NodeId>> seen_;
  std::map<NodeId, RouteEntry> routes_;
  std::map<NodeId, SeqNo> observed_;
};

}  // namespace swd
