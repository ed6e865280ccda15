#include <gtest/gtest.h>

#include <limits>

#include "afmlens/metrics.hpp"

using namespace afmlens;

namespace {

PortRecord link(double speed, std::uint64_t octets, std::string src = "a", std::string dst = "b") {
  PortRecord r;
  r.fabric = "f";
  r.port_id = "p";
  r.port_speed_bps = speed;
  r.src_block = std::move(src);
  r.dst_block = std::move(dst);
  r.window_start = 600;
  r.window_len = 30;
  r.outgoing_octets = octets;
  return r;
}

}  // namespace

TEST(LinkUtilization, BitsOverCapacity) {
  // 187.5 GB in 30 s on 100 Gb/s is half the 3 Tb of capacity.
  EXPECT_DOUBLE_EQ(link_utilization(link(100e9, 187'500'000'000ULL)), 0.5);
  EXPECT_DOUBLE_EQ(link_utilization(link(100e9, 0)), 0.0);
  EXPECT_EQ(link_utilization(link(100e9, 378'000'000'000ULL)), 1.0);  // 1.008 clamps
  EXPECT_THROW(link_utilization(link(100e9, 390'000'000'000ULL)), ValidationError);
  EXPECT_THROW(link_utilization(link(0.0, 1)), ValidationError);
  auto r = link(100e9, 1);
  r.window_len = 0;
  EXPECT_THROW(link_utilization(r), ValidationError);
}

TEST(AdjacencyUtilization, CapacityWeighted) {
  // 0.5 on 100G plus 0.25 on 400G: 4.5 Tb over 15 Tb, not the mean 0.375.
  const std::vector<PortRecord> rs = {link(100e9, 187'500'000'000ULL), link(400e9, 375'000'000'000ULL)};
  EXPECT_DOUBLE_EQ(adjacency_utilization(rs), 0.3);
}

TEST(AdjacencyUtilization, RejectsMixedSets) {
  EXPECT_THROW(adjacency_utilization(std::vector<PortRecord>{}), ValidationError);
  auto a = link(100e9, 1);
  auto b = link(100e9, 1);
  b.window_start = 630;
  EXPECT_THROW(adjacency_utilization(std::vector<PortRecord>{a, b}), ValidationError);
  auto c = link(100e9, 1, "a", "c");
  EXPECT_THROW(adjacency_utilization(std::vector<PortRecord>{a, c}), ValidationError);
}

TEST(FabricAggregate, ReferenceValues) {
  const std::vector<double> v = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  EXPECT_DOUBLE_EQ(fabric_aggregate(v, AggregateStat::max()), 1.0);
  EXPECT_DOUBLE_EQ(fabric_aggregate(v, AggregateStat::mean()), 0.55);
  EXPECT_DOUBLE_EQ(fabric_aggregate(v, AggregateStat::percentile(50)), 0.55);
  EXPECT_NEAR(fabric_aggregate(v, AggregateStat::p5p95_distance()), 0.81, 1e-12);  // numpy: 0.905 - 0.095
  EXPECT_THROW(fabric_aggregate(std::vector<double>{}, AggregateStat::max()), ValidationError);
  EXPECT_THROW(fabric_aggregate(std::vector<double>{std::numeric_limits<double>::quiet_NaN()}, AggregateStat::max()),
               ValidationError);
  EXPECT_THROW(AggregateStat::percentile(101), ValidationError);
}

TEST(JainIndex, Properties) {
  EXPECT_NEAR(jain_index(std::vector<double>{0.2, 0.5, 0.7, 0.9}), 0.831761006289308, 1e-12);
  EXPECT_DOUBLE_EQ(jain_index(std::vector<double>{0.4, 0.4, 0.4}), 1.0);
  EXPECT_DOUBLE_EQ(jain_index(std::vector<double>{1.0, 0.0, 0.0, 0.0}), 0.25);  // 1/n when one link carries all
  EXPECT_DOUBLE_EQ(jain_index(std::vector<double>{0.0, 0.0}), 1.0);
}
