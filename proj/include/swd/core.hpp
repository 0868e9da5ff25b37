#pragma once

// Basic value types shared by every layer of the simulator.

#include <compare>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <memory>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace swd {

// Raised for violated preconditions and malformed inputs.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct NodeId {
  std::uint32_t value{0};

  constexpr NodeId() = default;
  constexpr explicit NodeId(std::uint32_t v) : value(v) {}

  friend constexpr auto operator<=>(NodeId, NodeId) = default;
  friend std::ostream& operator<<(std::ostream& os, NodeId id) { return os << id.value; }
};

// Simulation clock with microsecond resolution. Integer ticks keep event
// ordering exact and traces identical across hosts.
class SimTime {
 public:
  constexpr SimTime() = default;

  static constexpr SimTime from_micros(std::int64_t us) { return SimTime(us); }
  static SimTime from_seconds(double s) {
    if (!std::isfinite(s)) throw Error("time must be finite");
    return SimTime(static_cast<std::int64_t>(std::llround(s * 1e6)));
  }

  constexpr std::int64_t micros() const { return us_; }
  constexpr double seconds() const { return static_cast<double>(us_) / 1e6; }

  friend constexpr auto operator<=>(SimTime, SimTime) = default;
  friend constexpr SimTime operator+(SimTime a, SimTime b) { return SimTime(a.us_ + b.us_); }
  friend constexpr SimTime operator-(SimTime a, SimTime b) { return SimTime(a.us_ - b.us_); }
  friend constexpr SimTime operator*(SimTime a, std::int64_t k) { return SimTime(a.us_ * k); }

  // Fixed six-decimal rendering used by the trace and summaries.
  std::string str() const {
    const auto sign = us_ < 0 ? "-" : "";
    const auto mag = us_ < 0 ? -us_ : us_;
    std::ostringstream os;
    os << sign << mag / 1000000 << '.' << std::setw(6) << std::setfill('0') << mag % 1000000;
    return os.str();
  }

 private:
  constexpr explicit SimTime(std::int64_t us) : us_(us) {}
  std::int64_t us_{0};
};

struct Position {
  double x{0.0};
  double y{0.0};

  friend bool operator==(const Position&, const Position&) = default;
};

inline double distance(const Position& a, const Position& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

// AODV destination/originator sequence number.
struct SeqNo {
  std::uint64_t value{0};

  friend constexpr auto operator<=>(SeqNo, SeqNo) = default;
};

enum class PacketType { rreq, rrep, data, ack };

inline std::string_view to_string(PacketType t) {
  switch (t) {
    case PacketType::rreq: return "RREQ";
    case PacketType::rrep: return "RREP";
    case PacketType::data: return "DATA";
    case PacketType::ack: return "ACK";
  }
  return "?";
}

struct RouteRequest {
  NodeId origin;
  NodeId target;
  std::uint32_t broadcast_id{0};
  std::uint32_t hop_count{0};
  SeqNo origin_seq;
  // Nodes traversed so far, origin first. Used to build the reply route.
  std::vector<NodeId> path;
  // Nodes the originator refuses to route through (path-rater exclusions).
  std::vector<NodeId> avoid;
};

struct RouteReply {
  NodeId origin;  // discovery originator, receiver of the reply
  NodeId target;
  std::uint32_t broadcast_id{0};
  NodeId replier;
  SeqNo dest_seq;
  std::uint32_t hop_count{0};
  std::vector<NodeId> route;  // origin ... target
};

struct DataInfo {
  std::uint64_t flow_seq{0};  // 1-based CBR sequence number
};

struct AckInfo {
  std::uint64_t data_count{0};
  SeqNo dest_seq;
};

struct Packet {
  PacketType type{PacketType::data};
  std::uint64_t id{0};
  NodeId origin;
  NodeId destination;
  std::uint32_t size_bytes{0};
  std::variant<RouteRequest, RouteReply, DataInfo, AckInfo> body;

  // Value printed in the trace's seq-no column.
  std::uint64_t trace_seq() const {
    switch (type) {
      case PacketType::rreq: return std::get<RouteRequest>(body).origin_seq.value;
      case PacketType::rrep: return std::get<RouteReply>(body).dest_seq.value;
      case PacketType::data: return std::get<DataInfo>(body).flow_seq;
      case PacketType::ack: return std::get<AckInfo>(body).data_count;
    }
    return 0;
  }
};

using PacketPtr = std::shared_ptr<const Packet>;

}  // namespace swd

template <>
struct std::hash<swd::NodeId> {
  std::size_t operator()(swd::NodeId id) const noexcept { return std::hash<std::uint32_t>{}(id.value); }
};
