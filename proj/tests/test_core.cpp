#include <gtest/gtest.h>

#include <limits>

#include "afmlens/core.hpp"
#include "afmlens/stats.hpp"
#include "fixtures.hpp"

using namespace afmlens;

// Expected values from numpy.quantile (linear method).
TEST(Quantile, MatchesType7Reference) {
  const std::vector<double> v = {3, 1, 4, 1, 5, 9, 2, 6};
  EXPECT_DOUBLE_EQ(quantile(v, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(quantile(v, 0.1), 1.0);
  EXPECT_DOUBLE_EQ(quantile(v, 0.25), 1.75);
  EXPECT_DOUBLE_EQ(quantile(v, 0.5), 3.5);
  EXPECT_NEAR(quantile(v, 0.9), 6.9, 1e-12);
  EXPECT_NEAR(quantile(v, 0.95), 7.95, 1e-12);
  EXPECT_DOUBLE_EQ(quantile(v, 1.0), 9.0);
}

TEST(Quantile, RejectsBadInput) {
  EXPECT_THROW(quantile({}, 0.5), ValidationError);
  EXPECT_THROW(quantile({1.0}, 1.5), ValidationError);
  EXPECT_THROW(quantile({1.0}, -0.1), ValidationError);
  EXPECT_DOUBLE_EQ(quantile({7.0}, 0.3), 7.0);
}

TEST(NumberText, ShortestRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 123456789.125, -2.5, 0.0}) {
    double back = 0;
    ASSERT_TRUE(parse_double(format_double(v), back));
    EXPECT_EQ(back, v);
  }
  EXPECT_EQ(format_double(0.1), "0.1");
  double d = 0;
  EXPECT_FALSE(parse_double("1.5x", d));
  EXPECT_FALSE(parse_double("", d));
  EXPECT_TRUE(parse_double("+2", d));
  EXPECT_EQ(d, 2.0);
  std::int64_t i = 0;
  EXPECT_TRUE(parse_int64("-1700000000", i));
  EXPECT_EQ(i, -1700000000);
  EXPECT_FALSE(parse_int64("3.0", i));
}

TEST(MetricKind, StringsRoundTrip) {
  const std::vector<std::string> names = {"link_util", "adjacency_util", "mlu", "alu", "mau", "aau",
                                          "p99_link_util", "p50_adjacency_util", "p99.9_link_util",
                                          "p5p95_link", "p5p95_adjacency", "jain"};
  for (const auto& n : names) EXPECT_EQ(MetricKind::parse(n).to_string(), n);
  EXPECT_THROW(MetricKind::parse("p101_link_util"), ValidationError);
  EXPECT_THROW(MetricKind::parse("bogus"), ValidationError);
  EXPECT_THROW(MetricKind::of(MetricName::PercentileLinkUtilization), ValidationError);
}

TEST(MetricKind, Classes) {
  EXPECT_TRUE(MetricKind::parse("aau").is_mean_type());
  EXPECT_TRUE(MetricKind::parse("alu").is_mean_type());
  EXPECT_FALSE(MetricKind::parse("mlu").is_mean_type());
  EXPECT_FALSE(MetricKind::parse("jain").is_utilization());
  EXPECT_FALSE(MetricKind::parse("p5p95_link").is_utilization());
  EXPECT_TRUE(MetricKind::parse("p90_link_util").is_utilization());
}

TEST(AfmKind, StringsRoundTrip) {
  for (std::string n : {"transmit_latency_1KiB_p99", "transmit_latency_256KiB_p50", "delivery_rate_p1"})
    EXPECT_EQ(AfmKind::parse(n).to_string(), n);
  EXPECT_THROW(AfmKind::parse("delivery_rate_p100"), ValidationError);
  EXPECT_THROW(AfmKind::parse("transmit_latency_3KiB_p99"), ValidationError);
  EXPECT_THROW(AfmKind::checked({AfmFamily::DeliveryRate, SizeClass::KiB8, 1.0}), ValidationError);
  EXPECT_THROW(AfmKind::checked({AfmFamily::TransmitLatency, std::nullopt, 99.0}), ValidationError);
}

TEST(Qos, ParseRejectsUnknown) {
  EXPECT_EQ(parse_qos("high"), Qos::High);
  EXPECT_EQ(parse_qos("medium"), Qos::Medium);
  EXPECT_EQ(parse_qos("low"), Qos::Low);
  try {
    parse_qos("urgent");
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("unknown QoS"), std::string::npos);
  }
}

TEST(Scope, ParseAndOrder) {
  EXPECT_TRUE(Scope{}.is_fabric_wide());
  EXPECT_EQ(Scope::parse("fabric"), Scope::fabric_wide());
  EXPECT_EQ(Scope::parse("block:b7").block_id(), "b7");
  EXPECT_EQ(Scope::block("b7").to_string(), "block:b7");
  EXPECT_THROW(Scope::parse("block:"), ValidationError);
  EXPECT_THROW(Scope::parse("rack"), ValidationError);
  EXPECT_LT(Scope::fabric_wide(), Scope::block("a"));
}

TEST(Clamp, CounterJitterTolerance) {
  EXPECT_EQ(clamp_utilization(0.5), 0.5);
  EXPECT_EQ(clamp_utilization(1.0), 1.0);
  EXPECT_EQ(clamp_utilization(1.015), 1.0);
  EXPECT_EQ(clamp_utilization(1.02), 1.0);
  EXPECT_THROW(clamp_utilization(1.03), ValidationError);
  EXPECT_THROW(clamp_utilization(-0.01), ValidationError);
  EXPECT_THROW(clamp_utilization(std::numeric_limits<double>::quiet_NaN()), ValidationError);
}

TEST(ValidateSample, FieldInvariants) {
  auto ok = fixtures::sample(1.01, 2.0);
  EXPECT_EQ(validate_sample(ok).nlm_value, 1.0);

  auto bad = ok;
  bad.window_len = 0;
  EXPECT_THROW(validate_sample(bad), ValidationError);
  bad = ok;
  bad.fabric.clear();
  EXPECT_THROW(validate_sample(bad), ValidationError);
  bad = ok;
  bad.afm_value = -1.0;
  EXPECT_THROW(validate_sample(bad), ValidationError);
  bad = ok;
  bad.afm_value = std::numeric_limits<double>::infinity();
  EXPECT_THROW(validate_sample(bad), ValidationError);
  bad = ok;
  bad.nlm_value = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(validate_sample(bad), ValidationError);

  // Non-utilization kinds are not clamped.
  auto jain = ok;
  jain.nlm_kind = MetricKind::parse("p5p95_link");
  jain.nlm_value = 1.5;
  EXPECT_EQ(validate_sample(jain).nlm_value, 1.5);
}

TEST(PipelineConfig, Defaults) {
  const PipelineConfig c;
  EXPECT_EQ(c.tau, 0.95);
  EXPECT_EQ(c.alpha, 0.5);
  EXPECT_EQ(c.curvature_threshold, 0.5);
  EXPECT_EQ(c.error_threshold, 0.15);
  EXPECT_EQ(c.n_buckets, 20);
  EXPECT_EQ(c.knee_direction, KneeDirection::ConvexIncreasing);
  EXPECT_EQ(c.tail_side, TailSide::Upper);
  ASSERT_TRUE(c.bucket_domain.has_value());
  EXPECT_EQ(c.bucket_domain->lo, 0.0);
  EXPECT_EQ(c.bucket_domain->hi, 1.0);

  const auto lat = AfmKind::latency(SizeClass::KiB1, 99);
  EXPECT_EQ(PipelineConfig::for_pair(MetricKind::parse("mlu"), lat).n_buckets, 20);
  EXPECT_EQ(PipelineConfig::for_pair(MetricKind::parse("aau"), lat).n_buckets, 100);
  EXPECT_EQ(PipelineConfig::for_pair(MetricKind::parse("alu"), lat).n_buckets, 100);

  const auto dr = PipelineConfig::for_pair(MetricKind::parse("mlu"), AfmKind::delivery_rate(1));
  EXPECT_EQ(dr.tail_side, TailSide::Lower);
  EXPECT_EQ(dr.knee_direction, KneeDirection::ConcaveDecreasing);
  EXPECT_EQ(dr.fitted_quantile(), 1.0 - dr.tau);
  EXPECT_NEAR(dr.fitted_quantile(), 0.05, 1e-15);
}

TEST(PipelineConfig, ValidateRejectsOutOfRange) {
  PipelineConfig c;
  c.alpha = 1.0;
  EXPECT_THROW(c.validate(), ValidationError);
  c = {};
  c.tau = 0.0;
  EXPECT_THROW(c.validate(), ValidationError);
  c = {};
  c.curvature_threshold = 1.2;
  EXPECT_THROW(c.validate(), ValidationError);
  c = {};
  c.n_buckets = 3;
  EXPECT_THROW(c.validate(), ValidationError);
  c = {};
  c.bucket_domain = BucketDomain{0.5, 0.5};
  EXPECT_THROW(c.validate(), ValidationError);
}

TEST(FittedModel, JsonRoundTrip) {
  FittedModel m;
  m.kind = ModelKind::Queueing;
  m.slope = 3.0000000000000004;
  m.intercept = 0.1;
  m.knee_threshold = 0.8;
  m.test_rarmse = 0.07;
  m.coverage = 0.93;
  m.train_amse = 1e-5;
  const auto j = to_json(m);
  EXPECT_EQ(fitted_model_from_json(Json::parse(j.dump())), m);

  FittedModel bare;
  const auto jb = to_json(bare);
  EXPECT_FALSE(jb.contains("knee_threshold"));
  EXPECT_FALSE(jb.contains("test_rarmse"));
  EXPECT_EQ(fitted_model_from_json(jb), bare);

  auto broken = j;
  broken["knee_threshold"] = 1.0;
  EXPECT_THROW(fitted_model_from_json(broken), ValidationError);
  EXPECT_TRUE(m.accurate(0.15));
  EXPECT_FALSE(m.accurate(0.05));
  EXPECT_FALSE(bare.accurate(0.15));
}
