#pragma once

// Discrete-event engine, event trace and the unit-disk broadcast medium.

#include <cstdint>
#include <optional>
#include <queue>
#include <random>
#include <string>
#include <vector>

#include "swd/core.hpp"
#include "swd/topology.hpp"

namespace swd {

enum class EventKind { deliver, overhear, timer };

// Opaque timer payload; the owner of the engine gives `tag` its meaning.
struct TimerTag {
  int tag{0};
  NodeId node;
  std::uint64_t a{0};
  std::uint64_t b{0};
};

struct Event {
  SimTime time;
  EventKind kind{EventKind::timer};
  NodeId node;  // receiver (deliver/overhear) or timer owner
  NodeId from;  // transmitter for deliver/overhear
  PacketPtr packet;
  TimerTag timer;
  std::uint64_t sequence{0};  // assigned by the engine
};

enum class TraceKind { originate, transmit, deliver, overhear, loss, drop, noroute };

inline std::string_view to_string(TraceKind k) {
  switch (k) {
    case TraceKind::originate: return "originate";
    case TraceKind::transmit: return "transmit";
    case TraceKind::deliver: return "deliver";
    case TraceKind::overhear: return "overhear";
    case TraceKind::loss: return "loss";
    case TraceKind::drop: return "drop";
    case TraceKind::noroute: return "noroute";
  }
  return "?";
}

struct TraceRecord {
  SimTime time;
  TraceKind kind{TraceKind::transmit};
  NodeId src;
  std::optional<NodeId> dst;  // empty = broadcast
  PacketType type{PacketType::data};
  std::uint64_t packet_id{0};
  std::uint64_t seq{0};

  // `<time> <kind> <src> <dst> <pkt-type> <pkt-id> <seq-no>`, broadcast dst printed as `*`.
  std::string line() const {
    std::string out = time.str();
    out += ' ';
    out += to_string(kind);
    out += ' ';
    out += std::to_string(src.value);
    out += ' ';
    out += dst ? std::to_string(dst->value) : std::string("*");
    out += ' ';
    out += to_string(type);
    out += ' ';
    out += std::to_string(packet_id);
    out += ' ';
    out += std::to_string(seq);
    return out;
  }
};

class Trace {
 public:
  explicit Trace(bool enabled = true) : enabled_(enabled) {}

  bool enabled() const { return enabled_; }
  void add(TraceRecord r) {
    if (enabled_) records_.push_back(std::move(r));
  }
  const std::vector<TraceRecord>& records() const { return records_; }
  bool empty() const { return records_.empty(); }

  std::string text() const {
    std::string out;
    for (const auto& r : records_) {
      out += r.line();
      out += '\n';
    }
    return out;
  }

 private:
  bool enabled_;
  std::vector<TraceRecord> records_;
};

// Min-heap on (time, insertion sequence). Single-threaded; one engine per run.
class Engine {
 public:
  SimTime now() const { return now_; }

  void schedule(Event ev) {
    if (ev.time < now_) {
      throw Error("cannot schedule event at " + ev.time.str() + " before current time " + now_.str());
    }
    ev.sequence = next_sequence_++;
    queue_.push(std::move(ev));
  }

  void schedule_timer(SimTime at, TimerTag tag) {
    Event ev;
    ev.time = at;
    ev.kind = EventKind::timer;
    ev.node = tag.node;
    ev.timer = tag;
    schedule(std::move(ev));
  }

  // Processes every event with time <= until, in (time, sequence) order.
  template <typename Handler>
  void run(SimTime until, Handler&& handler) {
    while (!queue_.empty() && queue_.top().time <= until) {
      Event ev = queue_.top();
      queue_.pop();
      now_ = ev.time;
      ++processed_;
      handler(ev);
    }
    if (now_ < until) now_ = until;
  }

  std::size_t pending() const { return queue_.size(); }
  std::uint64_t processed() const { return processed_; }

  // Snapshot of unprocessed events, in firing order.
  std::vector<Event> pending_events() const {
    auto copy = queue_;
    std::vector<Event> out;
    out.reserve(copy.size());
    while (!copy.empty()) {
      out.push_back(copy.top());
      copy.pop();
    }
    return out;
  }

 private:
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      if (a.time != b.time) return a.time > b.time;
      return a.sequence > b.sequence;
    }
  };

  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  SimTime now_{};
  std::uint64_t next_sequence_{0};
  std::uint64_t processed_{0};
};

// Seeded uniform source. Built on mt19937_64 with an explicit 53-bit
// mantissa conversion so draws are identical on every standard library.
class Random {
 public:
  explicit Random(std::uint64_t seed) : gen_(seed) {}

  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
  bool bernoulli(double p) { return p > 0.0 && uniform() < p; }
  std::uint64_t below(std::uint64_t bound) {
    if (bound == 0) throw Error("empty range");
    return static_cast<std::uint64_t>(uniform() * static_cast<double>(bound));
  }

 private:
  std::mt19937_64 gen_;
};

struct MediumConfig {
  double range{150.0};
  SimTime per_hop_latency{SimTime::from_micros(2000)};
  // Probability that a DATA packet is lost on its final hop into the sink.
  // Control traffic and relay hops are lossless.
  double baseline_loss{0.003};
};

// Shared radio channel: addressed delivery plus overhearing by every other
// neighbor of the transmitter.
class Medium {
 public:
  Medium(const Topology& topology, MediumConfig config, Engine& engine, Trace& trace, Random& random)
      : topology_(topology), config_(config), engine_(engine), trace_(trace), random_(random) {
    if (!(config_.range > 0.0)) throw Error("medium range must be positive");
    if (config_.baseline_loss < 0.0 || config_.baseline_loss >= 1.0) throw Error("baseline_loss must lie in [0, 1)");
  }

  const MediumConfig& config() const { return config_; }

  // Unicast when `next_hop` is set, broadcast otherwise. A unicast to a
  // node outside radio range is refused (returns false) and nothing is sent.
  bool transmit(NodeId sender, PacketPtr packet, std::optional<NodeId> next_hop) {
    if (next_hop && !topology_.adjacent(sender, *next_hop)) return false;
    const SimTime now = engine_.now();
    const SimTime at = now + config_.per_hop_latency;
    trace_.add({now, TraceKind::transmit, sender, next_hop, packet->type, packet->id, packet->trace_seq()});
    for (NodeId nb : topology_.neighbors(sender)) {
      const bool addressed = !next_hop || *next_hop == nb;
      if (addressed && lost(*packet, nb)) {
        ++losses_;
        trace_.add({now, TraceKind::loss, sender, nb, packet->type, packet->id, packet->trace_seq()});
        continue;
      }
      Event ev;
      ev.time = at;
      ev.kind = addressed ? EventKind::deliver : EventKind::overhear;
      ev.node = nb;
      ev.from = sender;
      ev.packet = packet;
      engine_.schedule(std::move(ev));
    }
    return true;
  }

  std::uint64_t losses() const { return losses_; }

 private:
  bool lost(const Packet& p, NodeId receiver) {
    if (p.type != PacketType::data || receiver != p.destination) return false;
    return random_.bernoulli(config_.baseline_loss);
  }

  const Topology& topology_;
  MediumConfig config_;
  Engine& engine_;
  Trace& trace_;
  Random& random_;
  std::uint64_t losses_{0};
};

}  // namespace swd
