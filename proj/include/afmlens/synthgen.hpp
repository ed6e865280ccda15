#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "afmlens/core.hpp"
#include "afmlens/csv.hpp"
#include "afmlens/error.hpp"
#include "afmlens/ingestion.hpp"
#include "afmlens/metrics.hpp"
#include "afmlens/sketch.hpp"
#include "afmlens/stats.hpp"

namespace afmlens {

/// SplitMix64. Seed 0 yields e220a8397b1dcdaf, 6e789e6aa1b965f4,
/// 06c45d188009454f.
class SplitMix64 {
public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Box-Muller; the second variate of each pair is cached.
  double normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * std::numbers::pi * u2;
    cached_ = r * std::sin(t);
    has_cached_ = true;
    return r * std::cos(t);
  }

private:
  std::uint64_t state_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

struct InjectedKnee {
  double knee_x = 0.85;
  double penalty_slope = 200.0;
};

struct GeneratorSpec {
  ModelKind kind = ModelKind::Linear;
  double beta = 1.0;
  double c = 0.0;
  std::optional<InjectedKnee> knee;
  double sigma = 0.0;
  double x_lo = 0.05;
  double x_hi = 0.9;
  std::size_t n = 1000;
  std::uint64_t seed = 0;

  std::string fabric = "fabric-a";
  Scope scope;
  Qos qos = Qos::Low;
  MetricKind nlm_kind = MetricKind::of(MetricName::MaxLinkUtilization);
  AfmKind afm_kind = AfmKind::latency(SizeClass::KiB1, 99.0);
  std::int64_t start_epoch = 1'700'000'100;  // multiple of 300
  std::int64_t window_len = kDefaultWindowSeconds;
  std::int64_t cadence = 30;
  double port_speed_bps = 100e9;
};

inline void validate(const GeneratorSpec& s) {
  auto finite = [](double v) { return std::isfinite(v); };
  if (!finite(s.beta) || !finite(s.c) || !finite(s.sigma) || !finite(s.x_lo) || !finite(s.x_hi))
    throw ValidationError("generator parameters must be finite");
  if (s.c < 0.0) throw ValidationError("generator intercept c must be >= 0");
  if (s.sigma < 0.0) throw ValidationError("generator sigma must be >= 0");
  if (!(s.x_lo >= 0.0 && s.x_lo <= s.x_hi && s.x_hi <= 1.0))
    throw ValidationError("generator x range must satisfy 0 <= lo <= hi <= 1");
  if ((s.kind == ModelKind::Queueing || s.knee) && !(s.x_hi < 1.0))
    throw ValidationError("generator x_hi must be < 1 for queueing or knee traces");
  if (s.knee && !(s.knee->penalty_slope > 0.0)) throw ValidationError("knee penalty slope must be positive");
  if (s.n == 0) throw ValidationError("generator needs n > 0");
  if (s.fabric.empty()) throw ValidationError("empty fabric");
  if (s.window_len <= 0 || s.cadence <= 0 || s.window_len % s.cadence != 0)
    throw ValidationError("cadence must be positive and divide the window length");
  if (!(s.port_speed_bps > 0.0)) throw ValidationError("port speed must be positive");
  if (s.start_epoch % s.window_len != 0) throw ValidationError("start epoch must be window aligned");
  if (!s.nlm_kind.is_utilization()) throw ValidationError("generator NLM kind must be a utilization metric");
  AfmKind::checked(s.afm_kind);
  auto base = [&](double x) { return s.beta * (s.kind == ModelKind::Linear ? x : x / (1.0 - x)) + s.c; };
  if (!(base(s.x_lo) > 0.0) || !(base(s.x_hi) > 0.0)) throw ValidationError("generator base AFM must be positive");
}

/// Noise-free AFM at x.
inline double generator_base(const GeneratorSpec& s, double x) {
  double y = s.beta * (s.kind == ModelKind::Linear ? x : x / (1.0 - x)) + s.c;
  if (s.knee && x > s.knee->knee_x) y += s.knee->penalty_slope * (x - s.knee->knee_x) * (x - s.knee->knee_x);
  return y;
}

namespace detail {

inline std::int64_t subintervals(const GeneratorSpec& s) { return s.window_len / s.cadence; }

inline double window_capacity(const GeneratorSpec& s) {
  // Same accumulation as counter aggregation, so utilizations agree bit for bit.
  double cap = 0.0;
  for (std::int64_t i = 0; i < subintervals(s); ++i) cap += s.port_speed_bps * static_cast<double>(s.cadence);
  return cap;
}

inline std::uint64_t octets_for(const GeneratorSpec& s, double x) {
  return static_cast<std::uint64_t>(std::llround(x * window_capacity(s) / 8.0));
}

}  // namespace detail

/// Each sample occupies its own window. x is quantized through an integer
/// octet count so it equals what the counters re-derive.
inline std::vector<JoinedSample> generate(const GeneratorSpec& spec) {
  validate(spec);
  SplitMix64 rng(spec.seed);
  const double cap = detail::window_capacity(spec);
  std::vector<JoinedSample> out;
  out.reserve(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) {
    const double raw = spec.x_lo + (spec.x_hi - spec.x_lo) * rng.uniform();
    const auto octets = detail::octets_for(spec, raw);
    const double x = utilization_of(static_cast<double>(octets) * 8.0, cap);
    const double eps = spec.sigma > 0.0 ? spec.sigma * rng.normal() : 0.0;
    JoinedSample s;
    s.window_start = spec.start_epoch + static_cast<std::int64_t>(i) * spec.window_len;
    s.window_len = spec.window_len;
    s.fabric = spec.fabric;
    s.scope = spec.scope;
    s.qos = spec.qos;
    s.nlm_kind = spec.nlm_kind;
    s.nlm_value = x;
    s.afm_kind = spec.afm_kind;
    s.afm_value = generator_base(spec, x) * std::exp(eps);
    out.push_back(validate_sample(std::move(s)));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Emission
// ---------------------------------------------------------------------------

enum class AfmEmission { Scalar, Sketch, Both };

struct EmitOptions {
  Format format = Format::CSV;
  AfmEmission afm = AfmEmission::Both;
  std::int64_t cadence = 30;
  double port_speed_bps = 100e9;
  std::size_t sketch_points = 64;
};

struct EmittedFiles {
  std::filesystem::path nlm;
  std::optional<std::filesystem::path> afm_scalar;
  std::optional<std::filesystem::path> afm_sketch;
};

/// Window values whose type-7 quantile at `q` equals `target` up to
/// rounding: evenly spaced around the interpolation position.
inline std::vector<double> sketch_values(double target, double q, std::size_t n) {
  const double h = q * static_cast<double>(n - 1);
  std::vector<double> v(n);
  for (std::size_t j = 0; j < n; ++j) v[j] = target * (1.0 + 0.01 * (static_cast<double>(j) - h));
  return v;
}

namespace detail {

inline std::pair<std::string, std::string> blocks_for(const Scope& scope) {
  if (scope.is_fabric_wide()) return {"blk-a", "blk-b"};
  return {scope.block_id(), scope.block_id()};
}

class TableWriter {
public:
  TableWriter(const std::filesystem::path& path, Format format, std::span<const std::string_view> columns)
      : out_(path, std::ios::binary | std::ios::trunc), format_(format),
        columns_(columns.begin(), columns.end()) {
    if (!out_) throw Error("cannot write " + path.string());
    if (format_ == Format::CSV) csv::write_record(out_, columns_);
  }

  // Empty fields are omitted from JSONL rows; `numeric` marks columns
  // written as JSON numbers.
  void row(const std::vector<std::string>& fields, const std::vector<bool>& numeric) {
    if (format_ == Format::CSV) {
      csv::write_record(out_, fields);
    } else {
      std::string line = "{";
      bool first = true;
      for (std::size_t i = 0; i < fields.size(); ++i) {
        if (fields[i].empty()) continue;
        if (!first) line += ',';
        first = false;
        line += Json(columns_[i]).dump() + ':';
        line += numeric[i] ? fields[i] : Json(fields[i]).dump();
      }
      out_ << line << "}\n";
    }
  }

  void close(const std::filesystem::path& path) {
    out_.close();
    if (!out_) throw Error("write failed for " + path.string());
  }

private:
  std::ofstream out_;
  Format format_;
  std::vector<std::string> columns_;
};

}  // namespace detail

/// Writes nlm.{csv,jsonl} as 30 s port counters (one aggregation-stage link
/// per window and scope) and the AFM side as afm.* (scalar rows) and/or
/// afm_sketch.* (t-digest rows). Parsing, re-aggregating and joining the
/// files reproduces the samples. Samples must share one utilization NLM
/// kind and one AFM kind.
inline EmittedFiles emit_files(std::span<const JoinedSample> samples, const std::filesystem::path& dir,
                               const EmitOptions& opt = {}) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (!fs::is_directory(dir)) throw Error("cannot create output directory " + dir.string());
  if (opt.cadence <= 0 || !(opt.port_speed_bps > 0.0)) throw ValidationError("bad emission options");
  for (const auto& s : samples) {
    if (!s.nlm_kind.is_utilization()) throw ValidationError("emission needs a utilization NLM kind");
    if (s.window_len % opt.cadence != 0) throw ValidationError("cadence must divide the window length");
  }

  const std::string ext = opt.format == Format::CSV ? ".csv" : ".jsonl";
  EmittedFiles files;
  files.nlm = dir / ("nlm" + ext);

  // One link per (fabric, window, scope); QoS classes share it.
  detail::TableWriter nlm(files.nlm, opt.format, kNlmColumns);
  const std::vector<bool> nlm_numeric = {false, false, false, false, true, false, false, true, true, true, true};
  std::set<std::tuple<std::string, std::int64_t, Scope>> links;
  for (const auto& s : samples) {
    if (!links.emplace(s.fabric, s.window_start, s.scope).second) continue;
    GeneratorSpec g;
    g.window_len = s.window_len;
    g.cadence = opt.cadence;
    g.port_speed_bps = opt.port_speed_bps;
    const auto total = detail::octets_for(g, s.nlm_value);
    const auto parts = static_cast<std::uint64_t>(detail::subintervals(g));
    const auto [src, dst] = detail::blocks_for(s.scope);
    const std::string port = src + "/" + dst + "/p0";
    for (std::uint64_t k = 0; k < parts; ++k) {
      const std::uint64_t oct = total / parts + (k < total % parts ? 1 : 0);
      nlm.row({s.fabric, "aggregation", port, port + "-peer", format_double(opt.port_speed_bps), src, dst,
               std::to_string(s.window_start + static_cast<std::int64_t>(k) * opt.cadence), std::to_string(opt.cadence),
               std::to_string(oct), std::to_string(oct)},
              nlm_numeric);
    }
  }
  nlm.close(files.nlm);

  const std::vector<bool> afm_numeric = {false, true, true, false, false, false, false, false, true, true, false};
  auto afm_fields = [](const JoinedSample& s) {
    const auto [src, dst] = detail::blocks_for(s.scope);
    return std::vector<std::string>{s.fabric,
                                    std::to_string(s.window_start),
                                    std::to_string(s.window_len),
                                    to_string(s.qos),
                                    src,
                                    dst,
                                    to_string(s.afm_kind.family),
                                    s.afm_kind.size_class ? to_string(*s.afm_kind.size_class) : "",
                                    "",
                                    "",
                                    ""};
  };
  if (opt.afm != AfmEmission::Sketch) {
    files.afm_scalar = dir / ("afm" + ext);
    detail::TableWriter w(*files.afm_scalar, opt.format, kAfmColumns);
    for (const auto& s : samples) {
      auto f = afm_fields(s);
      f[8] = format_double(s.afm_kind.stat);
      f[9] = format_double(s.afm_value);
      w.row(f, afm_numeric);
    }
    w.close(*files.afm_scalar);
  }
  if (opt.afm != AfmEmission::Scalar) {
    files.afm_sketch = dir / ("afm_sketch" + ext);
    auto numeric = afm_numeric;
    numeric[10] = opt.format == Format::JSONL;  // embed the sketch as a JSON object
    detail::TableWriter w(*files.afm_sketch, opt.format, kAfmColumns);
    for (const auto& s : samples) {
      TDigest d;
      d.add_all(sketch_values(s.afm_value, s.afm_kind.stat / 100.0, opt.sketch_points));
      auto f = afm_fields(s);
      f[10] = d.to_json().dump();
      w.row(f, numeric);
    }
    w.close(*files.afm_sketch);
  }
  return files;
}

}  // namespace afmlens
