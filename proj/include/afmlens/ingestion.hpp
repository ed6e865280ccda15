#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <variant>
#include <vector>

#include <json.hpp>

#include "afmlens/core.hpp"
#include "afmlens/csv.hpp"
#include "afmlens/error.hpp"
#include "afmlens/metrics.hpp"
#include "afmlens/sketch.hpp"
#include "afmlens/stats.hpp"

namespace afmlens {

enum class Format { CSV, JSONL };

inline Format parse_format(std::string_view s) {
  if (s == "csv") return Format::CSV;
  if (s == "jsonl") return Format::JSONL;
  throw ValidationError("unknown format: " + std::string(s));
}

struct RowError {
  std::size_t line = 0;
  std::string message;
};

template <typename T>
struct Parsed {
  std::vector<T> records;
  std::vector<RowError> errors;
};

inline const std::array<std::string_view, 11> kNlmColumns = {
    "fabric",     "stage",     "port_id",     "peer_port_id",    "port_speed_bps", "src_block",
    "dst_block",  "window_start_epoch_s",     "window_len_s",    "outgoing_octets", "incoming_octets"};

inline const std::array<std::string_view, 11> kAfmColumns = {
    "fabric",      "window_start_epoch_s", "window_len_s", "qos",  "src_block",  "dst_block",
    "afm_family",  "size_class",           "stat",         "value", "sketch_json"};

namespace detail {

// Reads CSV or JSONL rows into fields ordered like `columns`; absent fields
// are nullopt. Stream-level problems throw, row-level ones go to `on_error`.
template <std::size_t N>
class TableReader {
public:
  using Row = std::array<std::optional<std::string>, N>;

  TableReader(std::istream& in, Format format, const std::array<std::string_view, N>& columns)
      : in_(in), format_(format), columns_(columns) {
    if (!in_) throw ParseError("unreadable stream");
    if (format_ == Format::CSV) read_header();
  }

  bool has_column(std::size_t c) const { return format_ == Format::JSONL || present_[c]; }

  // Returns false at end of input. Sets `error` for a malformed row.
  bool next(Row& row, std::size_t& line, std::optional<std::string>& error) {
    row.fill(std::nullopt);
    error.reset();
    if (format_ == Format::CSV) {
      std::vector<std::string> fields;
      while (true) {
        if (!csv::read_record(in_, fields, line_)) return false;
        if (!(fields.size() == 1 && fields[0].empty())) break;
      }
      line = line_;
      if (fields.size() != index_.size()) {
        error = "expected " + std::to_string(index_.size()) + " fields, found " + std::to_string(fields.size());
        return true;
      }
      for (std::size_t i = 0; i < fields.size(); ++i) row[index_[i]] = std::move(fields[i]);
      return true;
    }
    std::string raw;
    while (true) {
      if (!std::getline(in_, raw)) return false;
      ++line_;
      if (raw.find_first_not_of(" \t\r") != std::string::npos) break;
    }
    line = line_;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(raw);
    } catch (const nlohmann::json::exception& e) {
      error = std::string("invalid JSON: ") + e.what();
      return true;
    }
    if (!obj.is_object()) {
      error = "JSONL line is not an object";
      return true;
    }
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      const auto c = column_of(it.key());
      if (!c) throw ParseError("unknown column: " + it.key());
      const auto& v = it.value();
      if (v.is_null()) continue;
      if (v.is_string()) row[*c] = v.get<std::string>();
      else if (v.is_number_integer()) row[*c] = std::to_string(v.get<std::int64_t>());
      else if (v.is_number_unsigned()) row[*c] = std::to_string(v.get<std::uint64_t>());
      else if (v.is_number_float()) row[*c] = format_double(v.get<double>());
      else row[*c] = v.dump();
    }
    return true;
  }

private:
  std::optional<std::size_t> column_of(std::string_view name) const {
    for (std::size_t c = 0; c < N; ++c)
      if (columns_[c] == name) return c;
    return std::nullopt;
  }

  void read_header() {
    std::vector<std::string> header;
    if (!csv::read_record(in_, header, line_)) throw ParseError("missing CSV header");
    for (auto& h : header) {
      const auto c = column_of(h);
      if (!c) throw ParseError("unknown column: " + h);
      if (present_[*c]) throw ParseError("duplicate column: " + h);
      present_[*c] = true;
      index_.push_back(*c);
    }
  }

  std::istream& in_;
  Format format_;
  const std::array<std::string_view, N>& columns_;
  std::array<bool, N> present_{};
  std::vector<std::size_t> index_;
  std::size_t line_ = 0;
};

template <std::size_t N>
const std::string& need(const typename TableReader<N>::Row& row, std::size_t c,
                        const std::array<std::string_view, N>& cols) {
  if (!row[c] || row[c]->empty()) throw ValidationError("missing " + std::string(cols[c]));
  return *row[c];
}

inline std::int64_t to_int(const std::string& s, std::string_view what) {
  std::int64_t v = 0;
  if (!parse_int64(s, v)) throw ValidationError("bad integer for " + std::string(what) + ": " + s);
  return v;
}

inline double to_real(const std::string& s, std::string_view what) {
  double v = 0;
  if (!parse_double(s, v) || !std::isfinite(v))
    throw ValidationError("bad number for " + std::string(what) + ": " + s);
  return v;
}

// Window floor that is correct for negative timestamps.
inline std::int64_t floor_to(std::int64_t t, std::int64_t w) {
  std::int64_t q = t / w;
  if (t % w != 0 && t < 0) --q;
  return q * w;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// NLM counters
// ---------------------------------------------------------------------------

inline Parsed<PortRecord> parse_port_records(std::istream& in, Format format) {
  detail::TableReader<kNlmColumns.size()> reader(in, format, kNlmColumns);
  if (format == Format::CSV)
    for (std::size_t c = 0; c < kNlmColumns.size(); ++c)
      if (!reader.has_column(c)) throw ParseError("missing column: " + std::string(kNlmColumns[c]));

  Parsed<PortRecord> out;
  decltype(reader)::Row row;
  std::size_t line = 0;
  std::optional<std::string> err;
  const auto& C = kNlmColumns;
  auto need = [&](std::size_t c) -> const std::string& { return detail::need<C.size()>(row, c, C); };
  while (reader.next(row, line, err)) {
    if (err) {
      out.errors.push_back({line, *err});
      continue;
    }
    try {
      PortRecord r;
      r.fabric = need(0);
      r.stage = parse_stage(need(1));
      r.port_id = need(2);
      r.peer_port_id = row[3].value_or("");
      r.port_speed_bps = detail::to_real(need(4), C[4]);
      r.src_block = row[5].value_or("");
      r.dst_block = row[6].value_or("");
      r.window_start = detail::to_int(need(7), C[7]);
      r.window_len = detail::to_int(need(8), C[8]);
      const auto out_oct = detail::to_int(need(9), C[9]);
      const auto in_oct = detail::to_int(need(10), C[10]);
      if (out_oct < 0 || in_oct < 0) throw ValidationError("negative octets");
      r.outgoing_octets = static_cast<std::uint64_t>(out_oct);
      r.incoming_octets = static_cast<std::uint64_t>(in_oct);
      validate_record(r);
      out.records.push_back(std::move(r));
    } catch (const ValidationError& e) {
      out.errors.push_back({line, e.what()});
    }
  }
  return out;
}

/// Per-port counters summed over one aggregation window.
struct WindowedPort {
  std::string fabric;
  Stage stage = Stage::Aggregation;
  std::string port_id;
  std::string src_block;
  std::string dst_block;
  std::int64_t window_start = 0;
  std::int64_t window_len = kDefaultWindowSeconds;
  std::uint64_t outgoing_octets = 0;
  std::uint64_t incoming_octets = 0;
  double capacity_bit_seconds = 0.0;  // sum of speed x observed seconds
  std::int64_t observed_seconds = 0;
  std::int64_t subintervals = 0;
  std::int64_t expected_subintervals = 0;

  double utilization() const {
    return utilization_of(static_cast<double>(outgoing_octets) * 8.0, capacity_bit_seconds);
  }
};

struct ReaggregateReport {
  std::size_t windows = 0;
  std::size_t port_windows = 0;
  std::int64_t expected_subintervals = 0;
  std::int64_t observed_subintervals = 0;

  std::int64_t gap_subintervals() const { return expected_subintervals - observed_subintervals; }
  double gap_fraction() const {
    return expected_subintervals == 0
               ? 0.0
               : static_cast<double>(gap_subintervals()) / static_cast<double>(expected_subintervals);
  }
};

/// Sums each port's native-cadence counters into aligned windows of
/// `window_len` seconds. Windows missing sub-intervals are kept and the
/// shortfall is counted in `report`.
inline std::vector<WindowedPort> aggregate_counters(std::span<const PortRecord> records, std::int64_t window_len,
                                                    ReaggregateReport* report = nullptr) {
  if (window_len <= 0) throw ValidationError("window length must be positive");
  using PortWindow = std::tuple<std::string, std::string, std::int64_t>;  // fabric, port, window
  std::map<PortWindow, WindowedPort> acc;
  std::set<std::tuple<std::string, std::string, std::int64_t>> seen;

  for (const auto& r : records) {
    validate_record(r);
    if (window_len % r.window_len != 0)
      throw ValidationError("native cadence of port " + r.port_id + " does not divide the window");
    const auto w0 = detail::floor_to(r.window_start, window_len);
    if (detail::floor_to(r.window_start + r.window_len - 1, window_len) != w0)
      throw ValidationError("record for port " + r.port_id + " straddles a window boundary");
    if (!seen.emplace(r.fabric, r.port_id, r.window_start).second)
      throw ValidationError("duplicate record for port " + r.port_id + " at " + std::to_string(r.window_start));

    auto [it, fresh] = acc.try_emplace({r.fabric, r.port_id, w0});
    auto& wp = it->second;
    if (fresh) {
      wp.fabric = r.fabric;
      wp.stage = r.stage;
      wp.port_id = r.port_id;
      wp.src_block = r.src_block;
      wp.dst_block = r.dst_block;
      wp.window_start = w0;
      wp.window_len = window_len;
      wp.expected_subintervals = window_len / r.window_len;
    }
    wp.outgoing_octets += r.outgoing_octets;
    wp.incoming_octets += r.incoming_octets;
    wp.capacity_bit_seconds += r.port_speed_bps * static_cast<double>(r.window_len);
    wp.observed_seconds += r.window_len;
    wp.subintervals += 1;
  }

  std::vector<WindowedPort> out;
  out.reserve(acc.size());
  std::set<std::pair<std::string, std::int64_t>> windows;
  for (auto& [key, wp] : acc) {
    windows.emplace(wp.fabric, wp.window_start);
    out.push_back(std::move(wp));
  }
  if (report) {
    report->windows = windows.size();
    report->port_windows = out.size();
    for (const auto& wp : out) {
      report->expected_subintervals += wp.expected_subintervals;
      report->observed_subintervals += wp.subintervals;
    }
  }
  return out;
}

/// One fabric-level or block-level NLM value for one window. NLMs are
/// QoS-agnostic; the QoS dimension comes from the AFM side at join time.
struct NlmPoint {
  std::string fabric;
  std::int64_t window_start = 0;
  std::int64_t window_len = kDefaultWindowSeconds;
  Scope scope;
  MetricKind kind;
  double value = 0.0;

  friend bool operator==(const NlmPoint&, const NlmPoint&) = default;
};

struct ReaggregateOptions {
  std::int64_t window_len = kDefaultWindowSeconds;
  std::vector<double> percentiles = {50.0, 90.0, 95.0, 99.0};
};

struct Reaggregated {
  std::vector<NlmPoint> points;
  ReaggregateReport report;
};

/// Counters are summed per window before any utilization is derived.
/// Fabric scope uses inter-block links (src_block != dst_block), block scope
/// uses the links internal to each block; ToR ports contribute to neither.
inline Reaggregated reaggregate_nlm(std::span<const PortRecord> records, const ReaggregateOptions& opts = {}) {
  Reaggregated out;
  auto ports = aggregate_counters(records, opts.window_len, &out.report);

  struct Group {
    std::vector<double> links;
    std::map<std::pair<std::string, std::string>, std::pair<double, double>> adjacency;  // bits, capacity
  };
  using WindowKey = std::tuple<std::string, std::int64_t, Scope>;
  std::map<WindowKey, Group> groups;
  for (const auto& wp : ports) {
    if (wp.stage == Stage::ToR) continue;
    const bool inter = wp.src_block != wp.dst_block;
    if (!inter && wp.src_block.empty()) continue;
    Scope scope = inter ? Scope::fabric_wide() : Scope::block(wp.src_block);
    auto& g = groups[{wp.fabric, wp.window_start, scope}];
    g.links.push_back(wp.utilization());
    if (inter) {
      auto& adj = g.adjacency[{wp.src_block, wp.dst_block}];
      adj.first += static_cast<double>(wp.outgoing_octets) * 8.0;
      adj.second += wp.capacity_bit_seconds;
    }
  }

  for (const auto& [key, g] : groups) {
    const auto& [fabric, start, scope] = key;
    auto emit = [&](MetricKind kind, double v) {
      out.points.push_back({fabric, start, opts.window_len, scope, kind, v});
    };
    const std::span<const double> links(g.links);
    emit(MetricKind::of(MetricName::MaxLinkUtilization), fabric_aggregate(links, AggregateStat::max()));
    emit(MetricKind::of(MetricName::AvgLinkUtilization), fabric_aggregate(links, AggregateStat::mean()));
    for (double k : opts.percentiles)
      emit(MetricKind::percentile_link(k), fabric_aggregate(links, AggregateStat::percentile(k)));
    emit(MetricKind::of(MetricName::P5P95DistanceLink), fabric_aggregate(links, AggregateStat::p5p95_distance()));
    emit(MetricKind::of(MetricName::JainFairnessIndex), fabric_aggregate(links, AggregateStat::jain()));
    if (!g.adjacency.empty()) {
      std::vector<double> adj;
      for (const auto& [pair, bc] : g.adjacency) adj.push_back(utilization_of(bc.first, bc.second));
      emit(MetricKind::of(MetricName::MaxAdjacencyUtilization), fabric_aggregate(adj, AggregateStat::max()));
      emit(MetricKind::of(MetricName::AvgAdjacencyUtilization), fabric_aggregate(adj, AggregateStat::mean()));
      for (double k : opts.percentiles)
        emit(MetricKind::percentile_adjacency(k), fabric_aggregate(adj, AggregateStat::percentile(k)));
      emit(MetricKind::of(MetricName::P5P95DistanceAdjacency),
           fabric_aggregate(adj, AggregateStat::p5p95_distance()));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// AFM records
// ---------------------------------------------------------------------------

struct JoinKey {
  std::string fabric;
  std::int64_t window_start = 0;
  Scope scope;
  Qos qos = Qos::Low;

  friend bool operator==(const JoinKey&, const JoinKey&) = default;
  friend auto operator<=>(const JoinKey&, const JoinKey&) = default;
};

struct ScalarStat {
  double stat = 0.0;  // percentile in (0, 100)
  double value = 0.0;
};

/// One AFM row: either a single pre-computed percentile or a full sketch of
/// the window's distribution.
struct AfmRecord {
  JoinKey key;
  std::int64_t window_len = kDefaultWindowSeconds;
  std::string src_block;
  std::string dst_block;
  AfmFamily family = AfmFamily::TransmitLatency;
  std::optional<SizeClass> size_class;
  std::variant<ScalarStat, TDigest> payload;

  bool is_sketch() const { return std::holds_alternative<TDigest>(payload); }
  bool matches(const AfmKind& k) const {
    if (family != k.family || size_class != k.size_class) return false;
    return is_sketch() || std::get<ScalarStat>(payload).stat == k.stat;
  }
};

/// Empty blocks or distinct src/dst blocks denote inter-block (fabric-wide)
/// traffic; equal blocks denote intra-block traffic.
inline Scope afm_scope(const std::string& src, const std::string& dst) {
  if (src.empty() || dst.empty() || src != dst) return Scope::fabric_wide();
  return Scope::block(src);
}

inline Parsed<AfmRecord> parse_afm_records(std::istream& in, Format format) {
  detail::TableReader<kAfmColumns.size()> reader(in, format, kAfmColumns);
  if (format == Format::CSV) {
    for (std::size_t c : {0U, 1U, 2U, 3U, 6U})
      if (!reader.has_column(c)) throw ParseError("missing column: " + std::string(kAfmColumns[c]));
    const bool scalar = reader.has_column(8) && reader.has_column(9);
    if (!scalar && !reader.has_column(10)) throw ParseError("AFM file needs (stat, value) or sketch_json columns");
  }

  Parsed<AfmRecord> out;
  decltype(reader)::Row row;
  std::size_t line = 0;
  std::optional<std::string> err;
  const auto& C = kAfmColumns;
  auto need = [&](std::size_t c) -> const std::string& { return detail::need<C.size()>(row, c, C); };
  while (reader.next(row, line, err)) {
    if (err) {
      out.errors.push_back({line, *err});
      continue;
    }
    try {
      AfmRecord r;
      r.key.fabric = need(0);
      r.key.window_start = detail::to_int(need(1), C[1]);
      r.window_len = detail::to_int(need(2), C[2]);
      if (r.window_len <= 0) throw ValidationError("zero window");
      r.key.qos = parse_qos(need(3));
      r.src_block = row[4].value_or("");
      r.dst_block = row[5].value_or("");
      r.key.scope = afm_scope(r.src_block, r.dst_block);
      r.family = parse_afm_family(need(6));
      if (row[7] && !row[7]->empty()) r.size_class = parse_size_class(*row[7]);
      if (r.family == AfmFamily::DeliveryRate && r.size_class)
        throw ValidationError("delivery rate carries no size class");
      if (r.family == AfmFamily::TransmitLatency && !r.size_class)
        throw ValidationError("transmit latency requires a size class");

      if (row[10] && !row[10]->empty()) {
        try {
          r.payload = TDigest::from_json(nlohmann::json::parse(*row[10]));
        } catch (const nlohmann::json::exception& e) {
          throw ValidationError(std::string("bad sketch: ") + e.what());
        } catch (const ValidationError& e) {
          throw ValidationError(std::string("bad sketch: ") + e.what());
        }
      } else {
        ScalarStat s;
        s.stat = detail::to_real(need(8), C[8]);
        s.value = detail::to_real(need(9), C[9]);
        if (!(s.stat > 0.0 && s.stat < 100.0)) throw ValidationError("AFM stat must lie in (0, 100)");
        if (s.value < 0.0) throw ValidationError("negative AFM");
        r.payload = s;
      }
      out.records.push_back(std::move(r));
    } catch (const ValidationError& e) {
      out.errors.push_back({line, e.what()});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Join
// ---------------------------------------------------------------------------

struct JoinReport {
  std::size_t matched = 0;
  std::size_t nlm_only = 0;
  std::size_t afm_only = 0;
  std::size_t dropped_invalid = 0;
};

struct JoinResult {
  std::vector<JoinedSample> samples;
  JoinReport report;
};

/// Inner join of one NLM kind against one AFM kind on (fabric, window,
/// scope). Each NLM window pairs with every QoS class reported for it.
/// Sketch rows for the same key are merged before the AFM's stat is read;
/// a scalar row for exactly that stat takes precedence over sketches.
inline JoinResult join_series(std::span<const NlmPoint> nlm, std::span<const AfmRecord> afm, const MetricKind& nlm_kind,
                              const AfmKind& afm_kind) {
  AfmKind::checked(afm_kind);
  using SpaceKey = std::tuple<std::string, std::int64_t, Scope>;
  std::map<SpaceKey, const NlmPoint*> nlm_by_key;
  JoinResult out;
  for (const auto& p : nlm) {
    if (p.kind != nlm_kind) continue;
    if (!nlm_by_key.emplace(SpaceKey{p.fabric, p.window_start, p.scope}, &p).second) ++out.report.dropped_invalid;
  }

  struct AfmGroup {
    std::vector<const AfmRecord*> scalars;
    std::vector<const AfmRecord*> sketches;
  };
  std::map<JoinKey, AfmGroup> afm_by_key;
  for (const auto& r : afm) {
    if (!r.matches(afm_kind)) continue;
    auto& g = afm_by_key[r.key];
    (r.is_sketch() ? g.sketches : g.scalars).push_back(&r);
  }

  std::set<SpaceKey> nlm_matched;
  for (const auto& [key, g] : afm_by_key) {
    const SpaceKey space{key.fabric, key.window_start, key.scope};
    const auto it = nlm_by_key.find(space);
    if (it == nlm_by_key.end()) {
      ++out.report.afm_only;
      continue;
    }
    nlm_matched.insert(space);
    const NlmPoint& p = *it->second;
    try {
      double value = 0.0;
      std::int64_t len = 0;
      if (g.scalars.size() > 1) throw ValidationError("duplicate scalar AFM rows");
      if (g.scalars.size() == 1) {
        value = std::get<ScalarStat>(g.scalars.front()->payload).value;
        len = g.scalars.front()->window_len;
      } else {
        TDigest merged = std::get<TDigest>(g.sketches.front()->payload);
        len = g.sketches.front()->window_len;
        for (std::size_t i = 1; i < g.sketches.size(); ++i) {
          if (g.sketches[i]->window_len != len) throw ValidationError("mixed AFM window lengths");
          merged = TDigest::merge(merged, std::get<TDigest>(g.sketches[i]->payload));
        }
        if (merged.empty()) throw ValidationError("empty sketch");
        value = merged.quantile(afm_kind.stat / 100.0);
      }
      if (len != p.window_len) throw ValidationError("NLM and AFM window lengths differ");
      JoinedSample s;
      s.window_start = key.window_start;
      s.window_len = len;
      s.fabric = key.fabric;
      s.scope = key.scope;
      s.qos = key.qos;
      s.nlm_kind = nlm_kind;
      s.nlm_value = p.value;
      s.afm_kind = afm_kind;
      s.afm_value = value;
      out.samples.push_back(validate_sample(std::move(s)));
      ++out.report.matched;
    } catch (const ValidationError&) {
      ++out.report.dropped_invalid;
    }
  }
  out.report.nlm_only = nlm_by_key.size() - nlm_matched.size();
  std::sort(out.samples.begin(), out.samples.end(), [](const JoinedSample& a, const JoinedSample& b) {
    return std::tie(a.fabric, a.window_start, a.scope, a.qos) < std::tie(b.fabric, b.window_start, b.scope, b.qos);
  });
  return out;
}

}  // namespace afmlens
