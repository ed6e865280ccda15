#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "afmlens/core.hpp"
#include "afmlens/error.hpp"
#include "afmlens/stats.hpp"

namespace afmlens {

enum class Stage { ToR, Aggregation, Spine };

inline std::string to_string(Stage s) {
  switch (s) {
    case Stage::ToR: return "tor";
    case Stage::Aggregation: return "aggregation";
    case Stage::Spine: return "spine";
  }
  return "?";
}

inline Stage parse_stage(std::string_view s) {
  if (s == "tor") return Stage::ToR;
  if (s == "aggregation") return Stage::Aggregation;
  if (s == "spine") return Stage::Spine;
  throw ValidationError("unknown stage: " + std::string(s));
}

/// One counter sample for one switch port.
struct PortRecord {
  std::string fabric;
  Stage stage = Stage::Aggregation;
  std::string port_id;
  std::string peer_port_id;
  double port_speed_bps = 0.0;
  std::string src_block;
  std::string dst_block;
  std::int64_t window_start = 0;
  std::int64_t window_len = 30;
  std::uint64_t outgoing_octets = 0;
  std::uint64_t incoming_octets = 0;

  friend bool operator==(const PortRecord&, const PortRecord&) = default;
};

inline void validate_record(const PortRecord& r) {
  if (!(r.port_speed_bps > 0.0) || !std::isfinite(r.port_speed_bps))
    throw ValidationError("port speed must be positive");
  if (r.window_len <= 0) throw ValidationError("window length must be positive");
}

/// Sent bits over offered capacity (speed x seconds), clamped. Every
/// utilization in the library goes through this one expression so that a
/// value rebuilt from the same counters reproduces bit for bit.
inline double utilization_of(double bits, double capacity_bit_seconds) {
  if (!(capacity_bit_seconds > 0.0)) throw ValidationError("capacity must be positive");
  return clamp_utilization(bits / capacity_bit_seconds);
}

inline double link_utilization(const PortRecord& r) {
  validate_record(r);
  return utilization_of(static_cast<double>(r.outgoing_octets) * 8.0,
                        r.port_speed_bps * static_cast<double>(r.window_len));
}

/// Capacity-weighted utilization of every link between one block pair in
/// one window.
inline double adjacency_utilization(std::span<const PortRecord> records) {
  if (records.empty()) throw ValidationError("adjacency utilization of empty link set");
  const auto& first = records.front();
  double bits = 0.0;
  double capacity = 0.0;
  for (const auto& r : records) {
    validate_record(r);
    if (r.window_start != first.window_start || r.window_len != first.window_len)
      throw ValidationError("adjacency records span mixed windows");
    if (r.src_block != first.src_block || r.dst_block != first.dst_block || r.fabric != first.fabric)
      throw ValidationError("adjacency records span mixed block pairs");
    bits += static_cast<double>(r.outgoing_octets) * 8.0;
    capacity += r.port_speed_bps * static_cast<double>(r.window_len);
  }
  return utilization_of(bits, capacity);
}

struct AggregateStat {
  enum class Kind { Max, Mean, Percentile, P5P95Distance, Jain };
  Kind kind = Kind::Max;
  double k = 0.0;  // Percentile only

  static AggregateStat max() { return {Kind::Max}; }
  static AggregateStat mean() { return {Kind::Mean}; }
  static AggregateStat percentile(double k) {
    if (!(k >= 0.0 && k <= 100.0)) throw ValidationError("percentile k must lie in [0, 100]");
    return {Kind::Percentile, k};
  }
  static AggregateStat p5p95_distance() { return {Kind::P5P95Distance}; }
  static AggregateStat jain() { return {Kind::Jain}; }
};

/// Jain's fairness index (sum x)^2 / (n sum x^2); an all-zero input is
/// perfectly fair.
inline double jain_index(std::span<const double> xs) {
  double sum = 0.0;
  double sq = 0.0;
  for (double x : xs) {
    sum += x;
    sq += x * x;
  }
  if (sq == 0.0) return 1.0;
  return (sum * sum) / (static_cast<double>(xs.size()) * sq);
}

inline double fabric_aggregate(std::span<const double> values, AggregateStat stat) {
  if (values.empty()) throw ValidationError("fabric aggregate of empty list");
  for (double v : values)
    if (!std::isfinite(v)) throw ValidationError("non-finite NLM");
  using K = AggregateStat::Kind;
  switch (stat.kind) {
    case K::Max: return *std::max_element(values.begin(), values.end());
    case K::Mean:
      return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    case K::Jain: return jain_index(values);
    case K::Percentile:
    case K::P5P95Distance: break;
  }
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  if (stat.kind == K::Percentile) return sorted_quantile(sorted, stat.k / 100.0);
  return std::max(0.0, sorted_quantile(sorted, 0.95) - sorted_quantile(sorted, 0.05));
}

}  // namespace afmlens
