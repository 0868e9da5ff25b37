#include <gtest/gtest.h>

#include "support.hpp"
#include "swd/swd.hpp"

namespace swd {
namespace {

constexpr SimTime timeout = SimTime::from_micros(100000);

Packet data_to(NodeId dest, std::uint64_t id) {
  Packet p;
  p.type = PacketType::data;
  p.id = id;
  p.destination = dest;
  return p;
}

// Feed `entrusted` packets, of which `forwarded` are overheard.
MonitorRecord observed(std::uint64_t entrusted, std::uint64_t forwarded) {
  MonitorRecord r(NodeId{1}, NodeId{2});
  for (std::uint64_t i = 0; i < entrusted; ++i) {
    r.entrust(i, SimTime::from_seconds(double(i)), timeout);
    if (i < forwarded) r.overhear(i);
  }
  return r;
}

TEST(Watchdog, EntrustSkipsDestination) {
  Watchdog w;
  const NodeId dest{6};
  EXPECT_TRUE(w.on_entrust(NodeId{1}, data_to(dest, 1), NodeId{2}, SimTime{}));
  EXPECT_FALSE(w.on_entrust(NodeId{4}, data_to(dest, 1), dest, SimTime{}));
  EXPECT_FALSE(w.on_entrust(dest, data_to(dest, 1), NodeId{4}, SimTime{}));
  EXPECT_EQ(w.listen_events(), 1u);
  EXPECT_NE(w.find(NodeId{1}, NodeId{2}), nullptr);
  EXPECT_EQ(w.find(NodeId{4}, dest), nullptr);
}

TEST(Watchdog, OverheardForwardCountsOnce) {
  MonitorRecord r(NodeId{1}, NodeId{2});
  r.entrust(7, SimTime{}, timeout);
  EXPECT_TRUE(r.overhear(7));
  EXPECT_FALSE(r.overhear(7));
  EXPECT_FALSE(r.overhear(8));
  EXPECT_EQ(r.forwarded(), 1u);
  EXPECT_EQ(r.pending(), 0u);
}

TEST(Watchdog, PendingEntriesExpireAtDeadline) {
  MonitorRecord r(NodeId{1}, NodeId{2});
  r.entrust(1, SimTime{}, timeout);
  r.expire(SimTime::from_micros(99999));
  EXPECT_EQ(r.pending(), 1u);
  EXPECT_DOUBLE_EQ(r.loss_fraction(), 0.0);
  r.expire(timeout);
  EXPECT_EQ(r.failed(), 1u);
  EXPECT_DOUBLE_EQ(r.loss_fraction(), 1.0);
}

TEST(Watchdog, AlarmAboveTwentyPercent) {
  const WatchdogConfig cfg{0.20, 20, timeout};
  auto r = observed(185, 147);  // 38 lost
  const auto now = SimTime::from_seconds(500);
  const auto a = watchdog_check_alarm(r, now, cfg);
  ASSERT_TRUE(a);
  EXPECT_NEAR(a->loss_percent, 20.54, 0.005);
  EXPECT_EQ(a->accused, NodeId{2});
  EXPECT_EQ(a->reporter, NodeId{1});
  EXPECT_DOUBLE_EQ(a->detection_time, 500.0);

  auto r2 = observed(111, 88);  // 23 lost
  const auto a2 = watchdog_check_alarm(r2, now, cfg);
  ASSERT_TRUE(a2);
  EXPECT_NEAR(a2->loss_percent, 20.72, 0.005);
}

TEST(Watchdog, ExactlyTwentyPercentIsNotAnAlarm) {
  const WatchdogConfig cfg{0.20, 20, timeout};
  auto r = observed(100, 80);
  EXPECT_FALSE(watchdog_check_alarm(r, SimTime::from_seconds(500), cfg));
  auto r2 = observed(100, 79);
  EXPECT_TRUE(watchdog_check_alarm(r2, SimTime::from_seconds(500), cfg));
}

TEST(Watchdog, TooFewObservationsNoAlarm) {
  const WatchdogConfig cfg{0.20, 20, timeout};
  auto r = observed(5, 0);
  EXPECT_FALSE(watchdog_check_alarm(r, SimTime::from_seconds(500), cfg));
}

TEST(Watchdog, AlarmLineFormat) {
  AlarmReport a;
  a.accused = NodeId{3};
  a.loss_percent = 20.5405;
  a.detection_time = 27.39;
  EXPECT_EQ(alarm_line(a),
            "Alarm! node 3 not forward more than 20% packets: 20.54% loss, 27.39 secs from neighbour detection");
}

// Property: alarm iff loss fraction strictly above threshold and enough observations.
TEST(Watchdog, AlarmDecisionMatchesDirectComputation) {
  const WatchdogConfig cfg{0.20, 20, timeout};
  for (std::uint64_t e = 1; e <= 60; ++e) {
    for (std::uint64_t f = 0; f <= e; ++f) {
      auto r = observed(e, f);
      const bool expect = e >= 20 && (e - f) * 5 > e;  // (e-f)/e > 1/5 in integers
      ASSERT_EQ(watchdog_check_alarm(r, SimTime::from_seconds(1000), cfg).has_value(), expect) << e << '/' << f;
    }
  }
}

TEST(Ack, EveryTenthPacket) {
  std::uint64_t acks = 0;
  for (std::uint64_t i = 1; i <= 30; ++i) acks += dest_ack_due(i) ? 1 : 0;
  EXPECT_EQ(acks, 3u);
  EXPECT_FALSE(dest_ack_due(0));
  EXPECT_TRUE(dest_ack_due(10));
  EXPECT_FALSE(dest_ack_due(9));
}

TEST(Ack, WatchTriggersOncePerEpisode) {
  AckWatch w;
  EXPECT_FALSE(w.on_send(9));
  EXPECT_TRUE(w.on_send(10));
  const auto t10 = SimTime::from_seconds(3.5);
  w.on_ack(SimTime::from_seconds(3.6));
  EXPECT_FALSE(w.on_timeout(t10));
  const auto t20 = SimTime::from_seconds(6.0);
  EXPECT_TRUE(w.on_timeout(t20));
  EXPECT_TRUE(w.in_episode());
  EXPECT_FALSE(w.on_timeout(SimTime::from_seconds(8.5)));
  EXPECT_EQ(w.triggers(), 1u);
  w.on_ack(SimTime::from_seconds(9.0));
  EXPECT_FALSE(w.in_episode());
  EXPECT_TRUE(w.on_timeout(SimTime::from_seconds(11.0)));
  EXPECT_EQ(w.triggers(), 2u);
}

TEST(Ack, DefaultTimeoutCoversWindowAndRoundTrip) {
  // 2 * (10 * 0.25 s + 2 * 4 * 2 ms)
  EXPECT_EQ(default_ack_timeout(10, SimTime::from_micros(250000), 4, SimTime::from_micros(2000)),
            SimTime::from_micros(5032000));
}

TEST(Threshold, FollowsAcknowledgedSequence) {
  ThresholdState s{SeqNo{10}, 10};
  s = update_threshold(s, SeqNo{17});
  EXPECT_EQ(s.current, SeqNo{27});
}

TEST(Suspects, ForgedReplierSegment) {
  const std::vector<NodeId> route{NodeId{0}, NodeId{1}, NodeId{3}, NodeId{6}};
  const std::vector<RouteReplyRecord> cache{
      {NodeId{6}, SeqNo{2}, 4, {NodeId{0}, NodeId{1}, NodeId{2}, NodeId{4}, NodeId{6}}},
      {NodeId{3}, SeqNo{4098}, 3, route},
  };
  const auto list = build_suspect_list(cache, SeqNo{12}, route);
  ASSERT_EQ(list.size(), 1u);
  EXPECT_EQ(list[0], (Segment{NodeId{1}, NodeId{3}, NodeId{6}}));
}

TEST(Suspects, NothingAboveThresholdMeansEmptyAndFallback) {
  const std::vector<NodeId> route{NodeId{0}, NodeId{1}, NodeId{2}, NodeId{3}};
  const std::vector<RouteReplyRecord> cache{{NodeId{3}, SeqNo{5}, 3, route}};
  EXPECT_TRUE(build_suspect_list(cache, SeqNo{15}, route).empty());
  const auto full = full_route_segments(route);
  ASSERT_EQ(full.size(), 2u);
  EXPECT_EQ(full[0], (Segment{NodeId{0}, NodeId{1}, NodeId{2}}));
  EXPECT_EQ(full[1], (Segment{NodeId{1}, NodeId{2}, NodeId{3}}));
}

TEST(Suspects, TrustedDestinationNeverSuspect) {
  const std::vector<NodeId> route{NodeId{0}, NodeId{1}, NodeId{3}};
  const std::vector<RouteReplyRecord> cache{{NodeId{3}, SeqNo{9000}, 2, route}};
  EXPECT_TRUE(build_suspect_list(cache, SeqNo{12}, route).empty());
}

TEST(Suspects, OffRouteRepliersSkippedAndDuplicatesMerged) {
  const std::vector<NodeId> route{NodeId{0}, NodeId{1}, NodeId{3}, NodeId{5}, NodeId{6}};
  const std::vector<RouteReplyRecord> cache{
      {NodeId{5}, SeqNo{5000}, 1, route},
      {NodeId{8}, SeqNo{5000}, 1, {NodeId{0}, NodeId{8}, NodeId{6}}},
      {NodeId{3}, SeqNo{4500}, 1, route},
      {NodeId{5}, SeqNo{4800}, 1, route},
  };
  const auto list = build_suspect_list(cache, SeqNo{12}, route);
  ASSERT_EQ(list.size(), 2u);
  EXPECT_EQ(list[0].node, NodeId{3});
  EXPECT_EQ(list[1].node, NodeId{5});
}

TEST(Segment, EndpointsStandInForMissingNeighbours) {
  const std::vector<NodeId> route{NodeId{0}, NodeId{1}, NodeId{2}};
  EXPECT_EQ(segment_around(route, NodeId{0}), (Segment{NodeId{0}, NodeId{0}, NodeId{1}}));
  EXPECT_EQ(segment_around(route, NodeId{2}), (Segment{NodeId{1}, NodeId{2}, NodeId{2}}));
  EXPECT_THROW(segment_around(route, NodeId{7}), Error);
}

SegmentVerdict judge(const Segment& seg, std::map<NodeId, NodeCounts> counts, std::vector<NodeId> trusted = {}) {
  return segmented_watchdog(seg, [&](NodeId n) { return counts[n]; }, trusted, SegmentConfig{0.05, 20});
}

TEST(SegmentedWatchdog, AccusesDroppingSuspect) {
  const Segment seg{NodeId{1}, NodeId{3}, NodeId{6}};
  const auto v = judge(seg, {{NodeId{1}, {100, 100}}, {NodeId{3}, {100, 0}}}, {NodeId{6}});
  EXPECT_EQ(v.status, SegmentVerdict::Status::accused);
  EXPECT_EQ(v.accused, NodeId{3});
}

TEST(SegmentedWatchdog, ChecksSuccessorWhenSuspectClean) {
  const Segment seg{NodeId{1}, NodeId{2}, NodeId{4}};
  const auto v = judge(seg, {{NodeId{1}, {100, 100}}, {NodeId{2}, {100, 99}}, {NodeId{4}, {99, 50}}});
  EXPECT_EQ(v.status, SegmentVerdict::Status::accused);
  EXPECT_EQ(v.accused, NodeId{4});
}

TEST(SegmentedWatchdog, PredecessorCheckedLast) {
  const Segment seg{NodeId{1}, NodeId{2}, NodeId{4}};
  const auto v = judge(seg, {{NodeId{1}, {100, 10}}, {NodeId{2}, {10, 10}}, {NodeId{4}, {10, 10}}});
  // suspect has too few observations: defer before reaching the predecessor
  EXPECT_EQ(v.status, SegmentVerdict::Status::deferred);
  const auto v2 = judge(seg, {{NodeId{1}, {100, 10}}, {NodeId{2}, {30, 30}}, {NodeId{4}, {30, 30}}});
  EXPECT_EQ(v2.status, SegmentVerdict::Status::accused);
  EXPECT_EQ(v2.accused, NodeId{1});
}

TEST(SegmentedWatchdog, ToleranceBoundary) {
  const Segment seg{NodeId{0}, NodeId{2}, NodeId{9}};
  // 95 of 100 forwarded sits exactly on (1 - 0.05): not a dropper
  EXPECT_EQ(judge(seg, {{NodeId{2}, {100, 95}}}, {NodeId{0}, NodeId{9}}).status, SegmentVerdict::Status::clear);
  EXPECT_EQ(judge(seg, {{NodeId{2}, {100, 94}}}, {NodeId{0}, NodeId{9}}).status, SegmentVerdict::Status::accused);
}

TEST(SegmentedWatchdog, TrustedEndpointsNeverAccused) {
  const Segment seg{NodeId{0}, NodeId{3}, NodeId{6}};
  const auto v = judge(seg, {{NodeId{0}, {100, 0}}, {NodeId{3}, {100, 100}}, {NodeId{6}, {100, 0}}},
                       {NodeId{0}, NodeId{6}});
  EXPECT_EQ(v.status, SegmentVerdict::Status::clear);
}

Topology grid(std::size_t n, double spacing = 50.0) {
  std::vector<Position> pos;
  const auto side = static_cast<std::size_t>(std::ceil(std::sqrt(double(n))));
  for (std::size_t i = 0; i < n; ++i) pos.push_back({spacing * double(i % side), spacing * double(i / side)});
  return Topology(pos, 60.0);
}

TEST(Clusters, CountIsCeilOfNOverL) {
  EXPECT_EQ(cluster_partition(grid(12), 3).size(), 4u);
  EXPECT_EQ(cluster_partition(grid(10), 3).size(), 4u);
  EXPECT_EQ(cluster_partition(grid(12), 12).size(), 1u);
  EXPECT_EQ(cluster_partition(grid(5), 6).size(), 1u);
  EXPECT_THROW(cluster_partition(grid(12), 2), Error);
}

// Property: clusters partition the node set, sizes are l except a smaller last one.
TEST(Clusters, PartitionProperty) {
  for (std::size_t n = 1; n <= 40; ++n) {
    for (std::size_t l = 3; l <= 8; ++l) {
      const auto clusters = cluster_partition(grid(n), l);
      std::vector<int> hits(n, 0);
      for (std::size_t i = 0; i < clusters.size(); ++i) {
        const auto& c = clusters[i];
        if (n > l && i + 1 < clusters.size()) {
          ASSERT_EQ(c.members.size(), l);
        }
        ASSERT_TRUE(std::is_sorted(c.members.begin(), c.members.end()));
        for (auto m : c.members) ++hits[m.value];
      }
      ASSERT_TRUE(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; })) << n << ',' << l;
      ASSERT_EQ(clusters.size(), std::max<std::size_t>(1, (n + l - 1) / l));
    }
  }
}

TEST(Clusters, QualifyWhenTouchingSegment) {
  Cluster a{{NodeId{0}, NodeId{1}, NodeId{2}}, false};
  Cluster b{{NodeId{5}, NodeId{7}, NodeId{8}}, false};
  const std::vector<Segment> segs{{NodeId{1}, NodeId{3}, NodeId{6}}};
  EXPECT_TRUE(cluster_qualify(a, segs));
  EXPECT_FALSE(cluster_qualify(b, segs));
  EXPECT_FALSE(cluster_qualify(a, std::span<const Segment>{}));
}

TEST(Gating, HonestRunHasNoSelectiveListening) {
  auto cfg = *preset("paper-baseline");
  cfg.medium.baseline_loss = 0.0;
  cfg.ids = IdsMode::selective;
  const auto sel = run_scenario(cfg);
  EXPECT_EQ(sel.metrics.listen_events, 0u);
  EXPECT_TRUE(sel.metrics.alarms.empty());
  cfg.ids = IdsMode::watchdog;
  const auto wd = run_scenario(cfg);
  EXPECT_GT(wd.metrics.listen_events, 0u);
  EXPECT_TRUE(wd.metrics.alarms.empty());
}

TEST(Gating, PresetSingleAlarmOnBlackHole) {
  for (auto name : {"paper-blackhole-watchdog", "paper-blackhole-selective"}) {
    const auto r = run_scenario(*preset(name));
    ASSERT_EQ(r.metrics.alarms.size(), 1u) << name;
    EXPECT_EQ(r.metrics.alarms[0].accused, NodeId{3}) << name;
    EXPECT_EQ(r.metrics.alarms[0].reporter, NodeId{1}) << name;
    EXPECT_GT(r.metrics.alarms[0].loss_percent, 20.0) << name;
  }
}

TEST(Gating, SelectiveListensFarFewerThanWatchdog) {
  const auto wd = run_scenario(*preset("paper-blackhole-watchdog"));
  const auto sel = run_scenario(*preset("paper-blackhole-selective"));
  EXPECT_GT(sel.metrics.listen_events, 0u);
  EXPECT_LT(sel.metrics.listen_events * 2, wd.metrics.listen_events);
}

}  // namespace
}  // namespace swd
