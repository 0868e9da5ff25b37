#pragma once

// One complete run: CBR flow over AODV-lite with optional black holes and
// one of the IDS schemes attached.

#include <algorithm>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "swd/analytics.hpp"
#include "swd/core.hpp"
#include "swd/engine.hpp"
#include "swd/ids.hpp"
#include "swd/routing.hpp"
#include "swd/scenario.hpp"
#include "swd/topology.hpp"

namespace swd {

struct RunOptions {
  bool record_trace{true};
};

struct RunResult {
  Trace trace;
  RunMetrics metrics;
  std::vector<NodeId> final_route;  // empty when the flow ended without a route
  std::uint64_t events_processed{0};

  std::string summary() const;
};

// Per-node DATA link counters. Every node keeps these for its own links;
// they need no promiscuous listening.
struct LinkTally {
  std::uint64_t sent{0};
  std::uint64_t received{0};
  std::optional<SimTime> first_sent;
};

class Simulation {
 public:
  explicit Simulation(ScenarioConfig cfg, RunOptions opts = {})
      : cfg_(std::move(cfg)),
        topology_(cfg_.nodes, cfg_.medium.range),
        trace_(opts.record_trace),
        random_(cfg_.seed),
        medium_(topology_, cfg_.medium, engine_, trace_, random_),
        watchdog_(WatchdogConfig{cfg_.alarm_threshold, cfg_.min_observations, cfg_.forward_timeout}),
        ack_watch_(cfg_.ack_every),
        threshold_{SeqNo{cfg_.slack}, cfg_.slack} {
    if (auto diags = validate_config(cfg_); !diags.empty()) throw Error("invalid scenario: " + diags.front().text());
    nodes_.reserve(topology_.size());
    for (std::uint32_t i = 0; i < topology_.size(); ++i) {
      const NodeId id{i};
      nodes_.emplace_back(id, cfg_.is_adversary(id) ? NodeBehavior::black_hole : NodeBehavior::honest,
                          SeqNo{cfg_.initial_seq}, cfg_.forge_offset);
    }
    tallies_.resize(topology_.size());
    clusters_ = cluster_partition(topology_, cfg_.cluster_size);
  }

  const Topology& topology() const { return topology_; }
  const ScenarioConfig& config() const { return cfg_; }

  RunResult run() {
    if (ran_) throw Error("a Simulation runs once");
    ran_ = true;
    if (cfg_.packet_count > 0) engine_.schedule_timer(cfg_.flow_start, {timer_cbr, source(), 1, 0});
    engine_.run(cfg_.end_time(), [this](const Event& ev) { dispatch(ev); });
    return finish();
  }

 private:
  enum TimerKind : int { timer_cbr = 1, timer_discovery, timer_watchdog, timer_ack };

  NodeId source() const { return cfg_.flow_source; }
  NodeId destination() const { return cfg_.flow_destination; }
  SimTime now() const { return engine_.now(); }

  PacketPtr make_packet(PacketType type, NodeId origin, NodeId dest, auto body) {
    auto p = std::make_shared<Packet>();
    p->type = type;
    p->id = ++next_packet_id_;
    p->origin = origin;
    p->destination = dest;
    p->size_bytes = type == PacketType::data ? cfg_.packet_size : 64;
    p->body = std::move(body);
    return p;
  }

  void dispatch(const Event& ev) {
    switch (ev.kind) {
      case EventKind::timer: on_timer(ev.timer); break;
      case EventKind::deliver: on_deliver(ev); break;
      case EventKind::overhear: on_overhear(ev); break;
    }
  }

  // -- timers ---------------------------------------------------------------

  void on_timer(const TimerTag& t) {
    switch (t.tag) {
      case timer_cbr: originate_data(t.a); break;
      case timer_discovery: on_discovery_timeout(static_cast<std::uint32_t>(t.a)); break;
      case timer_watchdog: on_watchdog_deadline(t.node, NodeId{static_cast<std::uint32_t>(t.a)}); break;
      case timer_ack:
        if (ack_watch_.on_timeout(SimTime::from_micros(static_cast<std::int64_t>(t.a)))) selective_trigger();
        break;
      default: throw Error("unknown timer tag");
    }
  }

  void originate_data(std::uint64_t k) {
    auto pkt = make_packet(PacketType::data, source(), destination(), DataInfo{k});
    ++counts_.sent;
    trace_.add({now(), TraceKind::originate, source(), source(), PacketType::data, pkt->id, k});
    if (route_ready()) {
      forward_data(source(), pkt);
    } else {
      queue_.push_back(pkt);
      if (!discovering_ && !stalled_) start_discovery();
    }
    if (k < cfg_.packet_count) engine_.schedule_timer(now() + cfg_.packet_interval, {timer_cbr, source(), k + 1, 0});
  }

  // -- discovery (source side) ----------------------------------------------

  bool route_ready() const { return current_.has_value() && !stalled_; }

  void start_discovery() {
    discovering_ = true;
    cache_.clear();
    auto rreq = nodes_[source().value].originate(destination(), excluded_);
    epoch_ = rreq.broadcast_id;
    auto pkt = make_packet(PacketType::rreq, source(), destination(), std::move(rreq));
    medium_.transmit(source(), pkt, std::nullopt);
    engine_.schedule_timer(now() + cfg_.discovery_timeout, {timer_discovery, source(), epoch_, 0});
  }

  void on_discovery_timeout(std::uint32_t epoch) {
    if (epoch != epoch_ || !cache_.empty()) return;
    if (attempts_ < cfg_.discovery_retries) {
      ++attempts_;
      start_discovery();
      return;
    }
    discovering_ = false;
    stalled_ = true;
    stall_time_ = now();
  }

  void on_source_reply(const RouteReply& rrep) {
    if (rrep.broadcast_id != epoch_) return;
    for (NodeId n : rrep.route) {
      if (std::find(excluded_.begin(), excluded_.end(), n) != excluded_.end()) return;
    }
    cache_.push_back({rrep.replier, rrep.dest_seq, rrep.hop_count + 1, rrep.route});
    const auto& best = best_reply(cache_);
    if (!current_ || current_->route != best.route) {
      current_ = best;
      auto entry = select_route(cache_);
      entry.broadcast_id = epoch_;
      nodes_[source().value].set_route(entry);
    }
    discovering_ = false;
    attempts_ = 0;
    while (!queue_.empty() && route_ready()) {
      auto pkt = queue_.front();
      queue_.pop_front();
      forward_data(source(), pkt);
    }
  }

  void exclude_and_rediscover(NodeId accused) {
    if (std::find(excluded_.begin(), excluded_.end(), accused) != excluded_.end()) return;
    excluded_.push_back(accused);
    if (current_ && std::find(current_->route.begin(), current_->route.end(), accused) == current_->route.end()) {
      return;  // accused is not on the active route; nothing to repair
    }
    current_.reset();
    attempts_ = 0;
    selective_active_ = false;
    start_discovery();
  }

  // -- packet reception ------------------------------------------------------

  void on_deliver(const Event& ev) {
    const Packet& p = *ev.packet;
    const NodeId at = ev.node;
    trace_.add({now(), TraceKind::deliver, ev.from, at, p.type, p.id, p.trace_seq()});
    switch (p.type) {
      case PacketType::rreq: on_rreq(at, std::get<RouteRequest>(p.body)); break;
      case PacketType::rrep: on_rrep(at, std::get<RouteReply>(p.body)); break;
      case PacketType::data: on_data(at, ev.from, ev.packet); break;
      case PacketType::ack: on_ack(at, ev.packet); break;
    }
  }

  void on_rreq(NodeId at, const RouteRequest& rreq) {
    auto action = nodes_[at.value].handle_rreq(rreq);
    if (auto* rb = std::get_if<Rebroadcast>(&action)) {
      medium_.transmit(at, make_packet(PacketType::rreq, rreq.origin, rreq.target, std::move(rb->request)), std::nullopt);
    } else if (auto* rep = std::get_if<Reply>(&action)) {
      const NodeId next = rep->next_hop;
      medium_.transmit(at, make_packet(PacketType::rrep, at, rreq.origin, std::move(rep->reply)), next);
    }
  }

  void on_rrep(NodeId at, const RouteReply& rrep) {
    if (at == rrep.origin) {
      nodes_[at.value].observe_reply(rrep);
      if (at == source()) on_source_reply(rrep);
      return;
    }
    RouteReply copy = rrep;
    if (auto next = nodes_[at.value].relay_reply(copy)) {
      medium_.transmit(at, make_packet(PacketType::rrep, copy.replier, copy.origin, std::move(copy)), *next);
    }
  }

  void on_data(NodeId at, NodeId from, const PacketPtr& pkt) {
    auto& tally = tallies_[at.value][from];
    ++tally.received;
    if (at == destination()) {
      ++counts_.delivered;
      ++data_received_;
      if (cfg_.ids == IdsMode::selective && dest_ack_due(data_received_, cfg_.ack_every)) send_ack();
    } else if (!nodes_[at.value].honest()) {
      ++counts_.dropped_adversary;
      trace_.add({now(), TraceKind::drop, at, at, PacketType::data, pkt->id, pkt->trace_seq()});
    } else {
      forward_data(at, pkt);
    }
    if (selective_active_) evaluate_segments();
  }

  void forward_data(NodeId at, const PacketPtr& pkt) {
    const auto entry = nodes_[at.value].route_to(pkt->destination);
    if (!entry || !medium_.transmit(at, pkt, entry->next_hop)) {
      ++counts_.dropped_no_route;
      trace_.add({now(), TraceKind::noroute, at, at, PacketType::data, pkt->id, pkt->trace_seq()});
      return;
    }
    const NodeId next = entry->next_hop;
    auto& tally = sent_tally(at, next);
    ++tally.sent;
    if (!tally.first_sent) tally.first_sent = now();

    if (cfg_.ids == IdsMode::watchdog && watchdog_.on_entrust(at, *pkt, next, now())) {
      engine_.schedule_timer(now() + cfg_.forward_timeout, {timer_watchdog, at, next.value, 0});
    }
    if (cfg_.ids == IdsMode::selective && selective_active_ && active_watchers_.count(at) && next != pkt->destination) {
      auto [it, _] = selective_records_.try_emplace({at, next}, at, next);
      it->second.entrust(pkt->id, now(), cfg_.forward_timeout);
      ++selective_listens_;
    }
    if (at == source()) {
      ++source_transmissions_;
      if (cfg_.ids == IdsMode::selective && ack_watch_.on_send(source_transmissions_)) {
        engine_.schedule_timer(now() + ack_timeout(), {timer_ack, source(), static_cast<std::uint64_t>(now().micros()), 0});
      }
    }
    if (selective_active_) evaluate_segments();
  }

  void send_ack() {
    const SeqNo dest_seq = nodes_[destination().value].seq();
    auto pkt = make_packet(PacketType::ack, destination(), source(), AckInfo{data_received_, dest_seq});
    forward_control(destination(), pkt);
  }

  void forward_control(NodeId at, const PacketPtr& pkt) {
    if (auto entry = nodes_[at.value].route_to(pkt->destination)) medium_.transmit(at, pkt, entry->next_hop);
  }

  void on_ack(NodeId at, const PacketPtr& pkt) {
    if (at != pkt->destination) {
      forward_control(at, pkt);
      return;
    }
    const auto& ack = std::get<AckInfo>(pkt->body);
    ack_watch_.on_ack(now());
    threshold_ = update_threshold(threshold_, ack.dest_seq);
  }

  void on_overhear(const Event& ev) {
    const Packet& p = *ev.packet;
    const NodeId at = ev.node;
    trace_.add({now(), TraceKind::overhear, ev.from, at, p.type, p.id, p.trace_seq()});
    auto& node = nodes_[at.value];
    if (p.type == PacketType::rreq) node.observe_request(std::get<RouteRequest>(p.body));
    if (p.type == PacketType::rrep) node.observe_reply(std::get<RouteReply>(p.body));
    if (p.type != PacketType::data) return;
    if (cfg_.ids == IdsMode::watchdog) watchdog_.on_overhear(at, ev.from, p);
    if (auto it = selective_records_.find({at, ev.from}); it != selective_records_.end()) it->second.overhear(p.id);
  }

  // -- watchdog ---------------------------------------------------------------

  void on_watchdog_deadline(NodeId watcher, NodeId watched) {
    if (accused_.count(watched)) return;
    if (auto alarm = watchdog_.check(watcher, watched, now())) accuse(*alarm);
  }

  void accuse(const AlarmReport& alarm) {
    if (!accused_.insert(alarm.accused).second) return;
    alarms_.push_back(alarm);
    exclude_and_rediscover(alarm.accused);
  }

  // -- selective watchdog -------------------------------------------------------

  SimTime ack_timeout() const {
    if (cfg_.ack_timeout) return *cfg_.ack_timeout;
    const std::size_t hops = current_ ? current_->route.size() - 1 : 1;
    return default_ack_timeout(cfg_.ack_every, cfg_.packet_interval, hops, cfg_.medium.per_hop_latency);
  }

  void selective_trigger() {
    if (!current_) return;
    segment_route_ = current_->route;
    segments_ = build_suspect_list(cache_, threshold_.current, segment_route_);
    if (segments_.empty()) segments_ = full_route_segments(segment_route_);
    if (segments_.empty()) return;
    segment_index_ = 0;
    selective_active_ = true;
    activate_segment();
    evaluate_segments();
  }

  // Members of clusters touched by the active segment monitor their successors.
  void activate_segment() {
    active_watchers_.clear();
    const Segment seg[1] = {segments_[segment_index_]};
    for (auto& c : clusters_) {
      c.qualifies = cluster_qualify(c, seg);
      if (c.qualifies) active_watchers_.insert(c.members.begin(), c.members.end());
    }
  }

  // Packets handed to `n` by any neighbour versus packets any neighbour
  // received from `n`, both read from the neighbours' own link counters.
  NodeCounts segment_counts(NodeId n) const {
    NodeCounts c;
    for (NodeId nb : topology_.neighbors(n)) {
      c.received += tally_sent(nb, n);
      c.forwarded += tally_received(nb, n);
    }
    return c;
  }

  void evaluate_segments() {
    const NodeId trusted[2] = {source(), destination()};
    const SegmentConfig scfg{cfg_.tolerance, cfg_.min_observations};
    while (selective_active_) {
      const Segment& seg = segments_[segment_index_];
      const auto verdict = segmented_watchdog(seg, [&](NodeId n) { return segment_counts(n); }, trusted, scfg);
      if (verdict.status == SegmentVerdict::Status::deferred) return;
      if (verdict.status == SegmentVerdict::Status::accused) {
        const NodeId bad = *verdict.accused;
        const auto it = std::find(segment_route_.begin(), segment_route_.end(), bad);
        const NodeId pred = *(it - 1);
        AlarmReport a;
        a.accused = bad;
        a.reporter = pred;
        a.loss_percent = 100.0 * (1.0 - static_cast<double>(verdict.counts.forwarded) /
                                            static_cast<double>(verdict.counts.received));
        const auto tally = sent_tallies_.find({pred, bad});
        const auto first = tally == sent_tallies_.end() ? std::nullopt : tally->second.first_sent;
        a.detection_time = (now() - first.value_or(now())).seconds();
        a.raised_at = now();
        a.scheme = IdsScheme::selective;
        selective_active_ = false;
        active_watchers_.clear();
        accuse(a);
        return;
      }
      if (++segment_index_ >= segments_.size()) {
        selective_active_ = false;
        active_watchers_.clear();
        return;
      }
      activate_segment();
    }
  }

  // -- tallies ------------------------------------------------------------------

  LinkTally& sent_tally(NodeId at, NodeId to) { return sent_tallies_[{at, to}]; }

  std::uint64_t tally_sent(NodeId from, NodeId to) const {
    auto it = sent_tallies_.find({from, to});
    return it == sent_tallies_.end() ? 0 : it->second.sent;
  }
  std::uint64_t tally_received(NodeId at, NodeId from) const {
    const auto& m = tallies_[at.value];
    auto it = m.find(from);
    return it == m.end() ? 0 : it->second.received;
  }

  // -- wrap-up -------------------------------------------------------------------

  RunResult finish() {
    std::uint64_t airborne = 0;
    for (const auto& ev : engine_.pending_events()) {
      if (ev.kind == EventKind::deliver && ev.packet && ev.packet->type == PacketType::data) ++airborne;
    }
    counts_.dropped_baseline = medium_.losses();
    counts_.in_flight = queue_.size() + airborne;

    RunMetrics m;
    m.scheme = std::string(to_string(cfg_.ids));
    m.scenario_key = cfg_.scenario_key();
    m.n = topology_.size();
    m.l = cfg_.cluster_size;
    m.seed = cfg_.seed;
    m.counts = counts_;
    m.listen_events = cfg_.ids == IdsMode::watchdog ? watchdog_.listen_events() : selective_listens_;
    if (!alarms_.empty()) m.detection_time = alarms_.front().detection_time;
    m.alarms = alarms_;
    m.stalled = stalled_;

    RunResult r;
    r.metrics = aggregate(std::move(m));
    r.trace = std::move(trace_);
    if (current_ && !stalled_) r.final_route = current_->route;
    r.events_processed = engine_.processed();
    return r;
  }

  ScenarioConfig cfg_;
  Topology topology_;
  Engine engine_;
  Trace trace_;
  Random random_;
  Medium medium_;
  std::vector<RoutingNode> nodes_;
  std::vector<std::map<NodeId, LinkTally>> tallies_;  // receive side, indexed by receiver
  std::map<std::pair<NodeId, NodeId>, LinkTally> sent_tallies_;
  std::vector<Cluster> clusters_;
  bool ran_{false};
  std::uint64_t next_packet_id_{0};

  // source
  std::deque<PacketPtr> queue_;
  std::vector<RouteReplyRecord> cache_;
  std::optional<RouteReplyRecord> current_;
  std::vector<NodeId> excluded_;
  std::uint32_t epoch_{0};
  std::uint32_t attempts_{0};
  bool discovering_{false};
  bool stalled_{false};
  std::optional<SimTime> stall_time_;
  std::uint64_t source_transmissions_{0};

  // destination
  std::uint64_t data_received_{0};

  // detection
  Watchdog watchdog_;
  AckWatch ack_watch_;
  ThresholdState threshold_;
  bool selective_active_{false};
  std::vector<NodeId> segment_route_;
  std::vector<Segment> segments_;
  std::size_t segment_index_{0};
  std::set<NodeId> active_watchers_;
  std::map<std::pair<NodeId, NodeId>, MonitorRecord> selective_records_;
  std::uint64_t selective_listens_{0};
  std::set<NodeId> accused_;
  std::vector<AlarmReport> alarms_;

  DeliveryCounts counts_;
};

inline RunResult run_scenario(const ScenarioConfig& cfg, RunOptions opts = {}) { return Simulation(cfg, opts).run(); }

inline std::string RunResult::summary() const {
  std::ostringstream os;
  const auto& m = metrics;
  const auto& c = m.counts;
  os << "scheme: " << m.scheme << '\n';
  os << "nodes: " << m.n << "  cluster_size: " << m.l << "  seed: " << m.seed << '\n';
  os << "sent: " << c.sent << "  delivered: " << c.delivered << "  dropped_adversary: " << c.dropped_adversary
     << "  dropped_baseline: " << c.dropped_baseline << "  dropped_no_route: " << c.dropped_no_route
     << "  in_flight: " << c.in_flight << '\n';
  if (m.pdr_centi) {
    const auto drop = 10000 - *m.pdr_centi;
    os << "pdr: " << m.pdr_text() << "%  drop: " << format_hundredths(drop) << "%\n";
  } else {
    os << "pdr: none\n";
  }
  os << "listen_events: " << m.listen_events << '\n';
  if (m.detection_time) os << "detection_time: " << format_seconds(*m.detection_time) << " s\n";
  if (m.stalled) os << "stalled: no route to destination\n";
  if (!final_route.empty()) {
    os << "route:";
    for (auto n : final_route) os << ' ' << n;
    os << '\n';
  }
  for (const auto& a : m.alarms) os << alarm_line(a) << '\n';
  return os.str();
}

}  // namespace swd
