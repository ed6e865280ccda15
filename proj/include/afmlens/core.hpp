#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "afmlens/error.hpp"
#include "afmlens/stats.hpp"

namespace afmlens {

using Json = nlohmann::json;

// ---------------------------------------------------------------------------
// Metric identities
// ---------------------------------------------------------------------------

enum class MetricName {
  LinkUtilization,
  AdjacencyUtilization,
  MaxLinkUtilization,
  AvgLinkUtilization,
  MaxAdjacencyUtilization,
  AvgAdjacencyUtilization,
  PercentileLinkUtilization,
  PercentileAdjacencyUtilization,
  P5P95DistanceLink,
  P5P95DistanceAdjacency,
  JainFairnessIndex,
};

/// A network-level metric. Percentile kinds carry k in [0, 100].
struct MetricKind {
  MetricName name = MetricName::MaxAdjacencyUtilization;
  std::optional<double> percentile;

  static MetricKind of(MetricName n) {
    if (n == MetricName::PercentileLinkUtilization || n == MetricName::PercentileAdjacencyUtilization)
      throw ValidationError("percentile metric requires k");
    return MetricKind{n, std::nullopt};
  }
  static MetricKind percentile_link(double k) { return checked({MetricName::PercentileLinkUtilization, k}); }
  static MetricKind percentile_adjacency(double k) {
    return checked({MetricName::PercentileAdjacencyUtilization, k});
  }

  bool is_percentile() const {
    return name == MetricName::PercentileLinkUtilization || name == MetricName::PercentileAdjacencyUtilization;
  }

  // Utilization-like kinds are subject to the near-1 clamp.
  bool is_utilization() const {
    switch (name) {
      case MetricName::P5P95DistanceLink:
      case MetricName::P5P95DistanceAdjacency:
      case MetricName::JainFairnessIndex:
        return false;
      default:
        return true;
    }
  }

  // Mean-type kinds have narrow domains and get finer buckets by default.
  bool is_mean_type() const {
    return name == MetricName::AvgLinkUtilization || name == MetricName::AvgAdjacencyUtilization;
  }

  std::string to_string() const {
    switch (name) {
      case MetricName::LinkUtilization: return "link_util";
      case MetricName::AdjacencyUtilization: return "adjacency_util";
      case MetricName::MaxLinkUtilization: return "mlu";
      case MetricName::AvgLinkUtilization: return "alu";
      case MetricName::MaxAdjacencyUtilization: return "mau";
      case MetricName::AvgAdjacencyUtilization: return "aau";
      case MetricName::PercentileLinkUtilization: return "p" + format_double(*percentile) + "_link_util";
      case MetricName::PercentileAdjacencyUtilization:
        return "p" + format_double(*percentile) + "_adjacency_util";
      case MetricName::P5P95DistanceLink: return "p5p95_link";
      case MetricName::P5P95DistanceAdjacency: return "p5p95_adjacency";
      case MetricName::JainFairnessIndex: return "jain";
    }
    return "?";
  }

  static MetricKind parse(std::string_view s) {
    static constexpr std::pair<std::string_view, MetricName> fixed[] = {
        {"link_util", MetricName::LinkUtilization},
        {"adjacency_util", MetricName::AdjacencyUtilization},
        {"mlu", MetricName::MaxLinkUtilization},
        {"alu", MetricName::AvgLinkUtilization},
        {"mau", MetricName::MaxAdjacencyUtilization},
        {"aau", MetricName::AvgAdjacencyUtilization},
        {"p5p95_link", MetricName::P5P95DistanceLink},
        {"p5p95_adjacency", MetricName::P5P95DistanceAdjacency},
        {"jain", MetricName::JainFairnessIndex},
    };
    for (const auto& [text, n] : fixed)
      if (s == text) return MetricKind{n, std::nullopt};
    auto try_suffix = [&](std::string_view suffix, MetricName n) -> std::optional<MetricKind> {
      if (s.size() > suffix.size() + 1 && s.front() == 'p' && s.ends_with(suffix)) {
        double k = 0;
        if (parse_double(s.substr(1, s.size() - 1 - suffix.size()), k)) return checked({n, k});
      }
      return std::nullopt;
    };
    if (auto m = try_suffix("_link_util", MetricName::PercentileLinkUtilization)) return *m;
    if (auto m = try_suffix("_adjacency_util", MetricName::PercentileAdjacencyUtilization)) return *m;
    throw ValidationError("unknown NLM kind: " + std::string(s));
  }

  friend bool operator==(const MetricKind&, const MetricKind&) = default;
  friend auto operator<=>(const MetricKind&, const MetricKind&) = default;

private:
  static MetricKind checked(MetricKind m) {
    if (!m.percentile || !(*m.percentile >= 0.0 && *m.percentile <= 100.0))
      throw ValidationError("percentile k must lie in [0, 100]");
    return m;
  }
};

enum class AfmFamily { TransmitLatency, DeliveryRate };
enum class SizeClass { KiB1, KiB8, KiB64, KiB256 };

inline std::string to_string(AfmFamily f) {
  return f == AfmFamily::TransmitLatency ? "transmit_latency" : "delivery_rate";
}

inline AfmFamily parse_afm_family(std::string_view s) {
  if (s == "transmit_latency") return AfmFamily::TransmitLatency;
  if (s == "delivery_rate") return AfmFamily::DeliveryRate;
  throw ValidationError("unknown AFM family: " + std::string(s));
}

inline std::string to_string(SizeClass c) {
  switch (c) {
    case SizeClass::KiB1: return "1KiB";
    case SizeClass::KiB8: return "8KiB";
    case SizeClass::KiB64: return "64KiB";
    case SizeClass::KiB256: return "256KiB";
  }
  return "?";
}

inline SizeClass parse_size_class(std::string_view s) {
  if (s == "1KiB") return SizeClass::KiB1;
  if (s == "8KiB") return SizeClass::KiB8;
  if (s == "64KiB") return SizeClass::KiB64;
  if (s == "256KiB") return SizeClass::KiB256;
  throw ValidationError("unknown size class: " + std::string(s));
}

/// An application-facing metric: family, size class (latency only), and the
/// reported percentile of the per-window distribution.
struct AfmKind {
  AfmFamily family = AfmFamily::TransmitLatency;
  std::optional<SizeClass> size_class = SizeClass::KiB1;
  double stat = 99.0;

  static AfmKind latency(SizeClass c, double stat) { return checked({AfmFamily::TransmitLatency, c, stat}); }
  static AfmKind delivery_rate(double stat) { return checked({AfmFamily::DeliveryRate, std::nullopt, stat}); }

  static AfmKind checked(AfmKind k) {
    if (k.family == AfmFamily::DeliveryRate && k.size_class)
      throw ValidationError("delivery rate carries no size class");
    if (k.family == AfmFamily::TransmitLatency && !k.size_class)
      throw ValidationError("transmit latency requires a size class");
    if (!(k.stat > 0.0 && k.stat < 100.0)) throw ValidationError("AFM stat must lie in (0, 100)");
    return k;
  }

  // e.g. "transmit_latency_1KiB_p99", "delivery_rate_p1"
  std::string to_string() const {
    std::string s = afmlens::to_string(family);
    if (size_class) s += "_" + afmlens::to_string(*size_class);
    return s + "_p" + format_double(stat);
  }

  static AfmKind parse(std::string_view s) {
    const auto p = s.rfind("_p");
    if (p == std::string_view::npos) throw ValidationError("unknown AFM kind: " + std::string(s));
    double stat = 0;
    if (!parse_double(s.substr(p + 2), stat)) throw ValidationError("bad AFM stat in: " + std::string(s));
    const auto head = s.substr(0, p);
    if (head == "delivery_rate") return delivery_rate(stat);
    constexpr std::string_view lat = "transmit_latency_";
    if (head.starts_with(lat)) return latency(parse_size_class(head.substr(lat.size())), stat);
    throw ValidationError("unknown AFM kind: " + std::string(s));
  }

  friend bool operator==(const AfmKind&, const AfmKind&) = default;
  friend auto operator<=>(const AfmKind&, const AfmKind&) = default;
};

enum class Qos { High, Medium, Low };

inline std::string to_string(Qos q) {
  switch (q) {
    case Qos::High: return "high";
    case Qos::Medium: return "medium";
    case Qos::Low: return "low";
  }
  return "?";
}

inline Qos parse_qos(std::string_view s) {
  if (s == "high") return Qos::High;
  if (s == "medium") return Qos::Medium;
  if (s == "low") return Qos::Low;
  throw ValidationError("unknown QoS: " + std::string(s));
}

/// Fabric-wide (inter-block) or a single aggregation block.
class Scope {
public:
  Scope() = default;  // fabric-wide

  static Scope fabric_wide() { return Scope{}; }
  static Scope block(std::string id) {
    if (id.empty()) throw ValidationError("block scope requires a non-empty id");
    Scope s;
    s.block_id_ = std::move(id);
    return s;
  }

  bool is_fabric_wide() const { return block_id_.empty(); }
  const std::string& block_id() const { return block_id_; }

  std::string to_string() const { return is_fabric_wide() ? "fabric" : "block:" + block_id_; }
  static Scope parse(std::string_view s) {
    if (s == "fabric") return fabric_wide();
    if (s.starts_with("block:")) return block(std::string(s.substr(6)));
    throw ValidationError("unknown scope: " + std::string(s));
  }

  friend bool operator==(const Scope&, const Scope&) = default;
  friend auto operator<=>(const Scope&, const Scope&) = default;

private:
  std::string block_id_;
};

// ---------------------------------------------------------------------------
// Samples
// ---------------------------------------------------------------------------

inline constexpr std::int64_t kDefaultWindowSeconds = 300;
inline constexpr double kUtilizationClampTolerance = 0.02;

/// Applies the counter-jitter clamp: values in (1, 1.02] become 1.0, values
/// beyond that (or negative) are rejected.
inline double clamp_utilization(double v) {
  if (!std::isfinite(v)) throw ValidationError("non-finite NLM");
  if (v < 0.0) throw ValidationError("negative utilization");
  if (v > 1.0) {
    if (v <= 1.0 + kUtilizationClampTolerance) return 1.0;
    throw ValidationError("utilization above 1 beyond clamp tolerance");
  }
  return v;
}

struct JoinedSample {
  std::int64_t window_start = 0;  // epoch seconds, window is [start, start + len)
  std::int64_t window_len = kDefaultWindowSeconds;
  std::string fabric;
  Scope scope = Scope::fabric_wide();
  Qos qos = Qos::Low;
  MetricKind nlm_kind;
  double nlm_value = 0.0;
  AfmKind afm_kind;
  double afm_value = 0.0;

  friend bool operator==(const JoinedSample&, const JoinedSample&) = default;
};

/// Checks every field invariant. Returns the sample, with a utilization
/// value inside the clamp tolerance pinned to 1.
inline JoinedSample validate_sample(JoinedSample s) {
  if (s.window_len <= 0) throw ValidationError("zero window");
  if (s.fabric.empty()) throw ValidationError("empty fabric");
  if (!std::isfinite(s.nlm_value)) throw ValidationError("non-finite NLM");
  if (!std::isfinite(s.afm_value)) throw ValidationError("non-finite AFM");
  if (s.afm_value < 0.0) throw ValidationError("negative AFM");
  AfmKind::checked(s.afm_kind);
  if (s.nlm_kind.is_utilization()) s.nlm_value = clamp_utilization(s.nlm_value);
  return s;
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

enum class KneeDirection { ConvexIncreasing, ConcaveDecreasing };
enum class TailSide { Upper, Lower };

inline std::string to_string(KneeDirection d) {
  return d == KneeDirection::ConvexIncreasing ? "convex_increasing" : "concave_decreasing";
}
inline std::string to_string(TailSide t) { return t == TailSide::Upper ? "upper" : "lower"; }

struct BucketDomain {
  double lo = 0.0;
  double hi = 1.0;
  friend bool operator==(const BucketDomain&, const BucketDomain&) = default;
};

inline constexpr int kMaxTypeBuckets = 20;
inline constexpr int kMeanTypeBuckets = 100;

struct PipelineConfig {
  double tau = 0.95;
  double alpha = 0.5;
  double curvature_threshold = 0.5;
  double error_threshold = 0.15;
  int n_buckets = kMaxTypeBuckets;
  int min_bucket_samples = 10;
  KneeDirection knee_direction = KneeDirection::ConvexIncreasing;
  TailSide tail_side = TailSide::Upper;
  // Every NLM is a fraction, so buckets tile [0, 1] by default (20 buckets
  // are 5% wide). nullopt derives the grid from the data range instead.
  std::optional<BucketDomain> bucket_domain = BucketDomain{};

  /// Quantile fitted in each bucket: tau for the upper tail, 1 - tau for the lower.
  double fitted_quantile() const { return tail_side == TailSide::Upper ? tau : 1.0 - tau; }

  /// Defaults for one (NLM, AFM) pair.
  static PipelineConfig for_pair(const MetricKind& nlm, const AfmKind& afm) {
    PipelineConfig c;
    c.n_buckets = nlm.is_mean_type() ? kMeanTypeBuckets : kMaxTypeBuckets;
    if (afm.family == AfmFamily::DeliveryRate) {
      c.tail_side = TailSide::Lower;
      c.knee_direction = KneeDirection::ConcaveDecreasing;
    }
    return c;
  }

  void validate() const {
    auto open_unit = [](double v) { return v > 0.0 && v < 1.0; };
    if (!open_unit(tau)) throw ValidationError("tau must lie in (0, 1)");
    if (!open_unit(alpha)) throw ValidationError("alpha must lie in (0, 1)");
    if (!open_unit(curvature_threshold)) throw ValidationError("curvature threshold must lie in (0, 1)");
    if (!(error_threshold > 0.0)) throw ValidationError("error threshold must be positive");
    if (n_buckets < 4) throw ValidationError("n_buckets must be at least 4");
    if (min_bucket_samples < 1) throw ValidationError("min_bucket_samples must be positive");
    if (bucket_domain && !(bucket_domain->hi > bucket_domain->lo))
      throw ValidationError("bucket domain must have hi > lo");
  }
};

inline Json to_json(const PipelineConfig& c) {
  Json j = {{"tau", c.tau},
            {"alpha", c.alpha},
            {"curvature_threshold", c.curvature_threshold},
            {"error_threshold", c.error_threshold},
            {"n_buckets", c.n_buckets},
            {"min_bucket_samples", c.min_bucket_samples},
            {"knee_direction", to_string(c.knee_direction)},
            {"tail_side", to_string(c.tail_side)}};
  if (c.bucket_domain)
    j["bucket_domain"] = Json::array({c.bucket_domain->lo, c.bucket_domain->hi});
  else
    j["bucket_domain"] = "data_range";
  return j;
}

// ---------------------------------------------------------------------------
// Fitted models
// ---------------------------------------------------------------------------

enum class ModelKind { Linear, Queueing };

inline std::string to_string(ModelKind k) { return k == ModelKind::Linear ? "linear" : "queueing"; }
inline ModelKind parse_model_kind(std::string_view s) {
  if (s == "linear") return ModelKind::Linear;
  if (s == "queueing") return ModelKind::Queueing;
  throw ValidationError("unknown model kind: " + std::string(s));
}

struct FittedModel {
  ModelKind kind = ModelKind::Linear;
  double slope = 0.0;
  double intercept = 0.0;
  double tau = 0.95;
  double alpha = 0.5;
  std::optional<double> knee_threshold;  // upper NLM bound of validity
  double train_amse = 0.0;
  std::optional<double> test_rarmse;
  std::optional<double> coverage;

  bool accurate(double error_threshold) const { return test_rarmse && *test_rarmse <= error_threshold; }

  friend bool operator==(const FittedModel&, const FittedModel&) = default;
};

inline Json to_json(const FittedModel& m) {
  Json j = {{"kind", to_string(m.kind)}, {"slope", m.slope},         {"intercept", m.intercept},
            {"tau", m.tau},              {"alpha", m.alpha},         {"train_amse", m.train_amse}};
  if (m.knee_threshold) j["knee_threshold"] = *m.knee_threshold;
  if (m.test_rarmse) j["test_rarmse"] = *m.test_rarmse;
  if (m.coverage) j["coverage"] = *m.coverage;
  return j;
}

inline FittedModel fitted_model_from_json(const Json& j) {
  FittedModel m;
  m.kind = parse_model_kind(j.at("kind").get<std::string>());
  m.slope = j.at("slope").get<double>();
  m.intercept = j.at("intercept").get<double>();
  m.tau = j.at("tau").get<double>();
  m.alpha = j.at("alpha").get<double>();
  m.train_amse = j.at("train_amse").get<double>();
  if (j.contains("knee_threshold")) m.knee_threshold = j["knee_threshold"].get<double>();
  if (j.contains("test_rarmse")) m.test_rarmse = j["test_rarmse"].get<double>();
  if (j.contains("coverage")) m.coverage = j["coverage"].get<double>();
  if (m.kind == ModelKind::Queueing && m.knee_threshold && !(*m.knee_threshold < 1.0))
    throw ValidationError("queueing model knee threshold must be below 1");
  return m;
}

}  // namespace afmlens
