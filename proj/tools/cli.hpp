#pragma once

// Command-line front end. Kept header-only so tests can drive `run` with
// string streams instead of spawning the binary.

#include <CLI11.hpp>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "afmlens/core.hpp"
#include "afmlens/ingestion.hpp"
#include "afmlens/pipeline.hpp"
#include "afmlens/synthgen.hpp"

namespace afmlens::cli {

inline constexpr const char* kVersion = "0.1.0";

enum Exit : int { kOk = 0, kUsage = 1, kNoRelationship = 2, kInsufficient = 3 };

inline int exit_code(Verdict v) {
  switch (v) {
    case Verdict::Accurate: return kOk;
    case Verdict::NoClearRelationship: return kNoRelationship;
    case Verdict::InsufficientData: return kInsufficient;
  }
  return kUsage;
}

/// FNV-1a 64 of a file's bytes, as 16 hex digits.
inline std::string file_digest(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot read " + p.string());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

struct Manifest {
  std::string command;
  std::vector<std::string> args;
  Json config = Json::object();
  std::vector<std::string> inputs;
  std::optional<std::uint64_t> seed;
  bool deterministic = false;

  Json to_json() const {
    Json digests = Json::array();
    for (const auto& p : inputs) digests.push_back({{"path", p}, {"fnv1a64", file_digest(p)}});
    Json j = {{"tool", "afmlens"},
              {"version", kVersion},
              {"command", command},
              {"args", args},
              {"config", config},
              {"inputs", std::move(digests)},
              {"seed", seed ? Json(*seed) : Json(nullptr)}};
    if (!deterministic) {
      const auto now = std::chrono::system_clock::now();
      j["created_at_epoch_s"] = std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch()).count();
    }
    return j;
  }
};

inline void write_text(const std::string& path, const std::string& text, std::ostream& fallback) {
  if (path.empty() || path == "-") {
    fallback << text;
    return;
  }
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path);
  out << text;
  if (!out) throw Error("write failed for " + path);
}

inline Format format_of(const std::string& path, const std::string& forced) {
  if (!forced.empty()) return parse_format(forced);
  return std::filesystem::path(path).extension() == ".jsonl" ? Format::JSONL : Format::CSV;
}

// ---------------------------------------------------------------------------
// Shared input handling for fit / stability / sweep
// ---------------------------------------------------------------------------

struct InputFlags {
  std::string nlm_file;
  std::vector<std::string> afm_files;
  std::string format;
  std::string nlm = "mlu";
  std::string afm = "transmit_latency_1KiB_p99";
  std::string qos;
  std::string scope;
  std::string fabric;
  std::int64_t window = kDefaultWindowSeconds;

  // Pipeline overrides; unset ones take for_pair defaults.
  std::optional<double> tau, alpha, curvature, threshold;
  std::optional<int> buckets, min_bucket_samples;

  void attach(CLI::App* app) {
    app->add_option("--nlm-file", nlm_file, "port counter file (csv or jsonl)")->required();
    app->add_option("--afm-file", afm_files, "AFM file(s), scalar or sketch rows")->required();
    app->add_option("--format", format, "force input format: csv or jsonl");
    app->add_option("--nlm", nlm, "NLM kind, e.g. mlu, aau, p99_link_util");
    app->add_option("--afm", afm, "AFM kind, e.g. transmit_latency_1KiB_p99, delivery_rate_p1");
    app->add_option("--qos", qos, "QoS class filter: high, medium, low");
    app->add_option("--scope", scope, "scope filter: fabric or block:<id>");
    app->add_option("--fabric", fabric, "fabric filter");
    app->add_option("--window", window, "NLM re-aggregation window in seconds");
    app->add_option("--tau", tau, "fitted tail quantile of the AFM");
    app->add_option("--alpha", alpha, "AMSE asymmetry, above 0.5 penalizes overprediction");
    app->add_option("--curvature", curvature, "knee curvature threshold");
    app->add_option("--threshold", threshold, "rARMSE accuracy threshold");
    app->add_option("--buckets", buckets, "bucket count (default 20, or 100 for mean-type NLMs)");
    app->add_option("--min-bucket-samples", min_bucket_samples, "buckets with fewer samples are dropped");
  }

  PipelineConfig config() const {
    auto cfg = PipelineConfig::for_pair(MetricKind::parse(nlm), AfmKind::parse(afm));
    if (tau) cfg.tau = *tau;
    if (alpha) cfg.alpha = *alpha;
    if (curvature) cfg.curvature_threshold = *curvature;
    if (threshold) cfg.error_threshold = *threshold;
    if (buckets) cfg.n_buckets = *buckets;
    if (min_bucket_samples) cfg.min_bucket_samples = *min_bucket_samples;
    cfg.validate();
    return cfg;
  }

  std::vector<std::string> inputs() const {
    std::vector<std::string> v{nlm_file};
    v.insert(v.end(), afm_files.begin(), afm_files.end());
    return v;
  }
};

struct LoadedSeries {
  std::vector<JoinedSample> samples;
  Json summary;
};

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  return in;
}

/// Parses, re-aggregates, joins and filters to one metric identity.
inline LoadedSeries load_series(const InputFlags& f, std::ostream& err) {
  const auto nlm_kind = MetricKind::parse(f.nlm);
  const auto afm_kind = AfmKind::parse(f.afm);

  auto nin = open_input(f.nlm_file);
  auto ports = parse_port_records(nin, format_of(f.nlm_file, f.format));
  for (const auto& e : ports.errors) err << f.nlm_file << ":" << e.line << ": " << e.message << "\n";
  ReaggregateOptions ro;
  ro.window_len = f.window;
  if (nlm_kind.name == MetricName::PercentileLinkUtilization ||
      nlm_kind.name == MetricName::PercentileAdjacencyUtilization)
    ro.percentiles = {*nlm_kind.percentile};
  const auto nlm = reaggregate_nlm(ports.records, ro);

  std::vector<AfmRecord> afm;
  std::size_t afm_errors = 0;
  for (const auto& path : f.afm_files) {
    auto ain = open_input(path);
    auto parsed = parse_afm_records(ain, format_of(path, f.format));
    for (const auto& e : parsed.errors) err << path << ":" << e.line << ": " << e.message << "\n";
    afm_errors += parsed.errors.size();
    afm.insert(afm.end(), std::make_move_iterator(parsed.records.begin()),
               std::make_move_iterator(parsed.records.end()));
  }
  auto joined = join_series(nlm.points, afm, nlm_kind, afm_kind);

  const bool by_qos = !f.qos.empty();
  const bool by_scope = !f.scope.empty();
  const Qos qos = by_qos ? parse_qos(f.qos) : Qos::Low;
  const Scope scope = by_scope ? Scope::parse(f.scope) : Scope::fabric_wide();
  LoadedSeries out;
  for (auto& s : joined.samples) {
    if (by_qos && s.qos != qos) continue;
    if (by_scope && s.scope != scope) continue;
    if (!f.fabric.empty() && s.fabric != f.fabric) continue;
    out.samples.push_back(std::move(s));
  }
  if (out.samples.empty()) throw ValidationError("no joined samples match the requested filters");
  const auto key = PairKey::of(out.samples.front());
  for (const auto& s : out.samples)
    if (!(PairKey::of(s) == key))
      throw ValidationError("input holds several fabrics, scopes or QoS classes; narrow with --fabric, --scope, --qos");

  out.summary = {{"nlm_rows", ports.records.size()},
                 {"nlm_row_errors", ports.errors.size()},
                 {"afm_rows", afm.size()},
                 {"afm_row_errors", afm_errors},
                 {"missing_subintervals",
                  nlm.report.expected_subintervals - nlm.report.observed_subintervals},
                 {"matched", joined.report.matched},
                 {"nlm_only", joined.report.nlm_only},
                 {"afm_only", joined.report.afm_only},
                 {"dropped_invalid", joined.report.dropped_invalid},
                 {"selected_samples", out.samples.size()}};
  return out;
}

/// Train is [start, train_end), test is [train_end, end). Without an explicit
/// boundary the split falls two thirds of the way through the span.
inline std::pair<std::vector<JoinedSample>, std::vector<JoinedSample>> split_by_time(
    std::span<const JoinedSample> series, std::optional<std::int64_t> train_end, std::int64_t& boundary) {
  const auto span = series_span(series);
  boundary = train_end ? *train_end : span.start + (span.end - span.start) * 2 / 3;
  std::vector<JoinedSample> train, test;
  for (const auto& s : series) (s.window_start < boundary ? train : test).push_back(s);
  return {std::move(train), std::move(test)};
}

inline std::vector<std::string> arg_vector(int argc, const char* const* argv) {
  std::vector<std::string> v;
  for (int i = 1; i < argc; ++i) v.emplace_back(argv[i]);
  return v;
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

struct SynthFlags {
  std::string kind = "linear";
  double beta = 1.0;
  double c = 0.0;
  std::optional<double> knee_x;
  double penalty = 200.0;
  double sigma = 0.05;
  double x_lo = 0.05;
  double x_hi = 0.9;
  std::size_t n = 1000;
  std::uint64_t seed = 0;
  std::string out;
  std::string fabric = "fabric-a";
  std::string scope = "fabric";
  std::string qos = "low";
  std::string nlm = "mlu";
  std::string afm = "transmit_latency_1KiB_p99";
  std::int64_t start = 1'700'000'100;
  std::string format = "csv";
  std::string afm_mode = "both";
  bool deterministic = false;
};

inline int cmd_synth(const SynthFlags& f, const std::vector<std::string>& args, std::ostream& out) {
  GeneratorSpec g;
  g.kind = parse_model_kind(f.kind);
  g.beta = f.beta;
  g.c = f.c;
  if (f.knee_x) g.knee = InjectedKnee{*f.knee_x, f.penalty};
  g.sigma = f.sigma;
  g.x_lo = f.x_lo;
  g.x_hi = f.x_hi;
  g.n = f.n;
  g.seed = f.seed;
  g.fabric = f.fabric;
  g.scope = Scope::parse(f.scope);
  g.qos = parse_qos(f.qos);
  g.nlm_kind = MetricKind::parse(f.nlm);
  g.afm_kind = AfmKind::parse(f.afm);
  g.start_epoch = f.start;

  EmitOptions eo;
  eo.format = parse_format(f.format);
  if (f.afm_mode == "scalar") eo.afm = AfmEmission::Scalar;
  else if (f.afm_mode == "sketch") eo.afm = AfmEmission::Sketch;
  else if (f.afm_mode == "both") eo.afm = AfmEmission::Both;
  else throw ValidationError("unknown --afm-mode: " + f.afm_mode);

  const auto samples = generate(g);
  const auto files = emit_files(samples, f.out, eo);

  Manifest m;
  m.command = "synth";
  m.args = args;
  m.seed = f.seed;
  m.deterministic = f.deterministic;
  m.config = {{"kind", to_string(g.kind)}, {"beta", g.beta},   {"c", g.c},         {"sigma", g.sigma},
              {"x_lo", g.x_lo},           {"x_hi", g.x_hi},   {"n", g.n},         {"fabric", g.fabric},
              {"scope", g.scope.to_string()}, {"qos", to_string(g.qos)}, {"nlm", g.nlm_kind.to_string()},
              {"afm", g.afm_kind.to_string()}, {"start_epoch", g.start_epoch}, {"format", f.format},
              {"afm_mode", f.afm_mode}};
  if (g.knee) m.config["knee"] = {{"knee_x", g.knee->knee_x}, {"penalty_slope", g.knee->penalty_slope}};
  Json outputs = Json::array();
  auto record = [&](const std::filesystem::path& p) {
    outputs.push_back({{"path", p.filename().string()}, {"fnv1a64", file_digest(p)}});
  };
  record(files.nlm);
  if (files.afm_scalar) record(*files.afm_scalar);
  if (files.afm_sketch) record(*files.afm_sketch);
  Json j = m.to_json();
  j["outputs"] = std::move(outputs);
  write_text((std::filesystem::path(f.out) / "manifest.json").string(), j.dump(2) + "\n", out);
  out << "wrote " << samples.size() << " samples to " << f.out << "\n";
  return kOk;
}

struct FitFlags {
  InputFlags in;
  std::optional<std::int64_t> train_end;
  std::string out;
  std::string plot_csv;
  bool deterministic = false;
};

inline int cmd_fit(const FitFlags& f, const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  const auto cfg = f.in.config();
  const auto series = load_series(f.in, err);
  std::int64_t boundary = 0;
  const auto [train, test] = split_by_time(series.samples, f.train_end, boundary);
  const auto rep = fit_pair(train, test, cfg);

  Manifest m{"fit", args, to_json(cfg), f.in.inputs(), std::nullopt, f.deterministic};
  Json j = {{"manifest", m.to_json()},
            {"input", series.summary},
            {"split", {{"train_end", boundary}, {"train_samples", train.size()}, {"test_samples", test.size()}}},
            {"report", to_json(rep)}};
  write_text(f.out, j.dump(2) + "\n", out);
  if (!f.plot_csv.empty()) {
    std::ostringstream csv;
    write_plot_csv(csv, rep, test, cfg);
    write_text(f.plot_csv, csv.str(), out);
  }
  return exit_code(rep.verdict);
}

struct StabilityFlags {
  InputFlags in;
  double train_weeks = 4, test_weeks = 2, step_weeks = 2;
  std::string out;
  std::string plot_dir;
  bool deterministic = false;
};

inline std::int64_t weeks(double w) { return static_cast<std::int64_t>(std::llround(w * kWeekSeconds)); }

inline int cmd_stability(const StabilityFlags& f, const std::vector<std::string>& args, std::ostream& out,
                         std::ostream& err) {
  const auto cfg = f.in.config();
  const auto series = load_series(f.in, err);
  const StabilityOptions so{weeks(f.train_weeks), weeks(f.test_weeks), weeks(f.step_weeks)};
  const auto windows = stability_sweep(series.samples, cfg, so);

  Json cfg_json = to_json(cfg);
  cfg_json["train_len_s"] = so.train_len;
  cfg_json["test_len_s"] = so.test_len;
  cfg_json["step_s"] = so.step;
  Manifest m{"stability", args, cfg_json, f.in.inputs(), std::nullopt, f.deterministic};
  Json rows = Json::array();
  for (const auto& w : windows) rows.push_back(to_json(w));
  Json j = {{"manifest", m.to_json()}, {"input", series.summary}, {"windows", std::move(rows)}};
  write_text(f.out, j.dump(2) + "\n", out);

  if (!f.plot_dir.empty()) {
    std::ostringstream summary;
    summary << "window,train_start,test_start,test_end,verdict,knee_x,best_kind,best_test_rarmse\n";
    for (std::size_t i = 0; i < windows.size(); ++i) {
      const auto& w = windows[i];
      const auto best = w.report.best_candidate();
      summary << i << ',' << w.train_span.start << ',' << w.test_span.start << ',' << w.test_span.end << ','
              << to_string(w.report.verdict) << ',' << (w.report.knee ? format_double(w.report.knee->knee_x) : "")
              << ',' << (best ? to_string(best->kind) : "") << ','
              << (best ? format_double(*best->test_rarmse) : "") << '\n';
      std::ostringstream plot;
      write_plot_csv(plot, w.report, samples_in(series.samples, w.test_span), cfg);
      write_text((std::filesystem::path(f.plot_dir) / ("window_" + std::to_string(i) + ".csv")).string(), plot.str(),
                 out);
    }
    write_text((std::filesystem::path(f.plot_dir) / "windows.csv").string(), summary.str(), out);
  }
  return kOk;
}

struct SweepFlags {
  InputFlags in;
  std::optional<std::int64_t> train_end;
  std::vector<double> alphas = SweepGrids::default_alphas();
  std::vector<double> curvatures = SweepGrids::default_curvatures();
  std::vector<double> thresholds = {0.15};
  std::string out;
  std::string plot_csv;
  bool deterministic = false;
};

inline int cmd_sweep(const SweepFlags& f, const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  const auto cfg = f.in.config();
  const auto series = load_series(f.in, err);
  std::int64_t boundary = 0;
  const auto [train, test] = split_by_time(series.samples, f.train_end, boundary);
  const SweepGrids grids{f.alphas, f.curvatures, f.thresholds};
  const auto rows = sensitivity_sweep(train, test, cfg, grids);

  Json cfg_json = to_json(cfg);
  cfg_json["alphas"] = f.alphas;
  cfg_json["curvatures"] = f.curvatures;
  cfg_json["error_thresholds"] = f.thresholds;
  Manifest m{"sweep", args, cfg_json, f.in.inputs(), std::nullopt, f.deterministic};
  Json jrows = Json::array();
  for (const auto& r : rows) jrows.push_back(to_json(r));
  Json j = {{"manifest", m.to_json()},
            {"input", series.summary},
            {"split", {{"train_end", boundary}, {"train_samples", train.size()}, {"test_samples", test.size()}}},
            {"rows", std::move(jrows)}};
  write_text(f.out, j.dump(2) + "\n", out);

  if (!f.plot_csv.empty()) {
    std::ostringstream csv;
    csv << "alpha,curvature,error_threshold,verdict,knee_x,best_kind,best_test_rarmse,best_overprediction\n";
    for (const auto& r : rows) {
      csv << format_double(r.alpha) << ',' << format_double(r.curvature) << ',' << format_double(r.error_threshold)
          << ',' << to_string(r.verdict) << ',' << (r.knee ? format_double(r.knee->knee_x) : "") << ','
          << (r.best ? to_string(r.best->kind) : "") << ','
          << (r.best && r.best->test_rarmse ? format_double(*r.best->test_rarmse) : "") << ','
          << (r.best_overprediction ? format_double(*r.best_overprediction) : "") << '\n';
    }
    write_text(f.plot_csv, csv.str(), out);
  }
  return kOk;
}

/// Human-readable summary of a saved fit report; exits with the report's
/// verdict code.
inline int cmd_report(const std::string& path, std::ostream& out) {
  auto in = open_input(path);
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::exception& e) {
    throw ParseError(std::string("invalid report JSON: ") + e.what());
  }
  const Json& r = j.contains("report") ? j.at("report") : j;
  const auto& key = r.at("key");
  out << "pair:     " << key.at("nlm_kind").get<std::string>() << " vs " << key.at("afm_kind").get<std::string>()
      << " (" << key.at("fabric").get<std::string>() << ", " << key.at("scope").get<std::string>() << ", qos "
      << key.at("qos").get<std::string>() << ")\n";
  if (r.contains("knee"))
    out << "knee:     x = " << r["knee"].at("knee_x").get<double>()
        << ", curvature = " << r["knee"].at("curvature").get<double>() << "\n";
  else
    out << "knee:     none\n";
  for (const auto& c : r.at("candidates")) {
    out << "model:    " << c.at("kind").get<std::string>() << " slope " << c.at("slope").get<double>()
        << " intercept " << c.at("intercept").get<double>();
    if (c.contains("test_rarmse")) out << " test rARMSE " << c["test_rarmse"].get<double>();
    if (c.contains("coverage")) out << " coverage " << c["coverage"].get<double>();
    out << "\n";
  }
  const auto verdict = r.at("verdict").get<std::string>();
  out << "verdict:  " << verdict << "\n";
  for (const auto& n : r.value("notes", Json::array())) out << "note:     " << n.get<std::string>() << "\n";
  if (verdict == "accurate") return kOk;
  if (verdict == "no_clear_relationship") return kNoRelationship;
  if (verdict == "insufficient_data") return kInsufficient;
  throw ParseError("unknown verdict in report: " + verdict);
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"afmlens: relate network-level metrics to application-facing metrics"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  SynthFlags sf;
  auto* synth = app.add_subcommand("synth", "generate a synthetic trace with known ground truth");
  synth->add_option("--kind", sf.kind, "linear or queueing");
  synth->add_option("--beta", sf.beta, "slope of the ground-truth model");
  synth->add_option("--c", sf.c, "intercept of the ground-truth model");
  synth->add_option("--knee-x", sf.knee_x, "inject a congestion knee at this utilization");
  synth->add_option("--penalty", sf.penalty, "quadratic slope of the post-knee penalty");
  synth->add_option("--sigma", sf.sigma, "lognormal noise scale");
  synth->add_option("--x-lo", sf.x_lo, "lowest generated utilization");
  synth->add_option("--x-hi", sf.x_hi, "highest generated utilization");
  synth->add_option("--n", sf.n, "sample (window) count");
  synth->add_option("--seed", sf.seed, "random seed");
  synth->add_option("--out", sf.out, "output directory")->required();
  synth->add_option("--fabric", sf.fabric, "fabric name written to every record");
  synth->add_option("--scope", sf.scope, "fabric or block:<id>");
  synth->add_option("--qos", sf.qos, "QoS class of the AFM rows");
  synth->add_option("--nlm", sf.nlm, "NLM kind the trace is generated against");
  synth->add_option("--afm", sf.afm, "AFM kind of the emitted rows");
  synth->add_option("--start", sf.start, "first window start, epoch seconds");
  synth->add_option("--format", sf.format, "csv or jsonl");
  synth->add_option("--afm-mode", sf.afm_mode, "scalar, sketch or both");
  synth->add_flag("--deterministic", sf.deterministic, "omit timestamps from the manifest");

  FitFlags ff;
  auto* fit = app.add_subcommand("fit", "fit and score one NLM/AFM pair");
  ff.in.attach(fit);
  fit->add_option("--train-end", ff.train_end, "train/test boundary, epoch seconds");
  fit->add_option("--out", ff.out, "report path (default stdout)");
  fit->add_option("--plot-csv", ff.plot_csv, "plot-ready CSV path");
  fit->add_flag("--deterministic", ff.deterministic, "omit timestamps from the manifest");

  StabilityFlags stf;
  auto* stab = app.add_subcommand("stability", "sliding-window train/test stability");
  stf.in.attach(stab);
  stab->add_option("--train-weeks", stf.train_weeks, "training window length in weeks");
  stab->add_option("--test-weeks", stf.test_weeks, "test window length in weeks");
  stab->add_option("--step-weeks", stf.step_weeks, "offset between consecutive windows in weeks");
  stab->add_option("--out", stf.out, "JSON report path, - for stdout");
  stab->add_option("--plot-dir", stf.plot_dir, "directory for per-window plot CSVs");
  stab->add_flag("--deterministic", stf.deterministic, "omit timestamps from the manifest");

  SweepFlags swf;
  auto* sweep = app.add_subcommand("sweep", "alpha x curvature x threshold sensitivity table");
  swf.in.attach(sweep);
  sweep->add_option("--train-end", swf.train_end, "epoch second splitting train from test (default: 2/3 of the span)");
  sweep->add_option("--alphas", swf.alphas, "comma-separated alpha grid")->delimiter(',');
  sweep->add_option("--curvatures", swf.curvatures, "comma-separated curvature threshold grid")->delimiter(',');
  sweep->add_option("--thresholds", swf.thresholds, "comma-separated rARMSE threshold grid")->delimiter(',');
  sweep->add_option("--out", swf.out, "JSON report path, - for stdout");
  sweep->add_option("--plot-csv", swf.plot_csv, "write the table as CSV");
  sweep->add_flag("--deterministic", swf.deterministic, "omit timestamps from the manifest");

  std::string report_path;
  auto* report = app.add_subcommand("report", "summarize a fit report");
  report->add_option("report", report_path, "fit report JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  const auto args = arg_vector(argc, argv);
  try {
    if (*synth) return cmd_synth(sf, args, out);
    if (*fit) return cmd_fit(ff, args, out, err);
    if (*stab) return cmd_stability(stf, args, out, err);
    if (*sweep) return cmd_sweep(swf, args, out, err);
    if (*report) return cmd_report(report_path, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}

}  // namespace afmlens::cli
