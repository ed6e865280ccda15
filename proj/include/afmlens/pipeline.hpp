#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "afmlens/buckets.hpp"
#include "afmlens/core.hpp"
#include "afmlens/error.hpp"
#include "afmlens/knee.hpp"
#include "afmlens/parallel.hpp"
#include "afmlens/regression.hpp"
#include "afmlens/stats.hpp"

namespace afmlens {

enum class Verdict { Accurate, NoClearRelationship, InsufficientData };

inline std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Accurate: return "accurate";
    case Verdict::NoClearRelationship: return "no_clear_relationship";
    case Verdict::InsufficientData: return "insufficient_data";
  }
  return "?";
}

struct PairKey {
  std::string fabric;
  Scope scope;
  Qos qos = Qos::Low;
  MetricKind nlm_kind;
  AfmKind afm_kind;

  static PairKey of(const JoinedSample& s) { return {s.fabric, s.scope, s.qos, s.nlm_kind, s.afm_kind}; }
  friend bool operator==(const PairKey&, const PairKey&) = default;
};

struct PairModelReport {
  PairKey key;
  std::optional<KneeResult> knee;
  double bucket_width = 0.0;
  std::vector<FittedModel> candidates;  // Linear first, then Queueing, when fittable
  std::optional<FittedModel> selected;
  Verdict verdict = Verdict::InsufficientData;
  std::size_t train_samples = 0;
  std::size_t subset_samples = 0;
  std::size_t test_samples = 0;
  std::vector<BucketPoint> train_points;  // regression subset buckets
  std::vector<BucketPoint> test_points;   // scored test buckets (x <= knee threshold)
  std::vector<std::string> notes;

  /// Lowest test rARMSE candidate, whether or not it passes the threshold.
  std::optional<FittedModel> best_candidate() const {
    std::optional<FittedModel> best;
    for (const auto& c : candidates)
      if (c.test_rarmse && (!best || *c.test_rarmse < *best->test_rarmse)) best = c;
    return best;
  }
};

/// Verdict of a scored report under a given error threshold.
inline Verdict verdict_for(const PairModelReport& r, double error_threshold) {
  const auto best = r.best_candidate();
  if (!best) return Verdict::InsufficientData;
  return best->accurate(error_threshold) ? Verdict::Accurate : Verdict::NoClearRelationship;
}

/// Re-derives verdict and selection in place for a new threshold.
inline void apply_threshold(PairModelReport& r, double error_threshold) {
  r.verdict = verdict_for(r, error_threshold);
  r.selected.reset();
  if (r.verdict == Verdict::Accurate) r.selected = r.best_candidate();
}

/// Fraction of test samples inside the model's knee-bounded domain.
inline double coverage(const FittedModel& model, std::span<const JoinedSample> test) {
  if (test.empty()) throw ValidationError("coverage of empty test set");
  if (!model.knee_threshold) return 1.0;
  std::size_t inside = 0;
  for (const auto& s : test)
    if (s.nlm_value <= *model.knee_threshold) ++inside;
  return static_cast<double>(inside) / static_cast<double>(test.size());
}

inline void check_shared_identity(std::span<const JoinedSample> samples, const PairKey& key, const char* what) {
  for (const auto& s : samples)
    if (!(PairKey::of(s) == key)) throw ValidationError(std::string(what) + " samples mix metric identities");
}

/// Knee-gated fitting of one (NLM, AFM) pair:
///  1. envelope of the training data, knee search;
///  2. with a knee, keep training samples below knee_x - bucket width;
///  3. bucketize the subset and fit a linear and a queueing model under alpha;
///  4. score both on bucketized test data (restricted to the same domain) by
///     rARMSE and keep the lower; it is selected only if within threshold.
/// Failures never throw; they fold into the verdict and notes.
inline PairModelReport fit_pair(std::span<const JoinedSample> train, std::span<const JoinedSample> test,
                                const PipelineConfig& cfg) {
  cfg.validate();
  PairModelReport rep;
  rep.train_samples = train.size();
  rep.test_samples = test.size();
  if (train.empty()) {
    rep.notes.push_back("no training samples");
    return rep;
  }
  rep.key = PairKey::of(train.front());
  check_shared_identity(train, rep.key, "training");
  check_shared_identity(test, rep.key, "test");

  const BucketGrid grid = make_grid(train, cfg.n_buckets, cfg.bucket_domain);
  rep.bucket_width = grid.width();
  const double env_q = cfg.tail_side == TailSide::Upper ? 0.95 : 0.05;
  try {
    const auto env = build_envelope(train, grid, env_q, cfg.min_bucket_samples, cfg.knee_direction);
    rep.knee = detect_knee(env, cfg.curvature_threshold);
  } catch (const ValidationError& e) {
    rep.notes.push_back(std::string("knee detection skipped: ") + e.what());
  }

  std::optional<double> threshold;
  std::vector<JoinedSample> subset;
  if (rep.knee) {
    threshold = rep.knee->knee_x - rep.bucket_width;
    for (const auto& s : train)
      if (s.nlm_value < *threshold) subset.push_back(s);
  } else {
    subset.assign(train.begin(), train.end());
  }
  rep.subset_samples = subset.size();
  if (subset.empty()) {
    rep.notes.push_back("regression subset is empty");
    return rep;
  }

  try {
    rep.train_points = bucketize(subset, grid, cfg.tau, cfg.tail_side, cfg.min_bucket_samples);
  } catch (const ValidationError& e) {
    rep.notes.push_back(std::string("training bucketize failed: ") + e.what());
    return rep;
  }

  std::vector<JoinedSample> test_in;
  for (const auto& s : test)
    if (!threshold || s.nlm_value <= *threshold) test_in.push_back(s);
  bool test_ok = false;
  if (!test_in.empty()) {
    try {
      const auto test_grid = make_grid(test_in, cfg.n_buckets, cfg.bucket_domain);
      rep.test_points = bucketize(test_in, test_grid, cfg.tau, cfg.tail_side, cfg.min_bucket_samples);
      test_ok = true;
    } catch (const ValidationError& e) {
      rep.notes.push_back(std::string("test bucketize failed: ") + e.what());
    }
  } else {
    rep.notes.push_back("no test samples inside the model domain");
  }

  std::vector<double> test_truth;
  for (const auto& b : rep.test_points) test_truth.push_back(b.y_tau);

  for (ModelKind kind : {ModelKind::Linear, ModelKind::Queueing}) {
    FittedModel m;
    m.kind = kind;
    m.tau = cfg.tau;
    m.alpha = cfg.alpha;
    m.knee_threshold = threshold;
    try {
      LineFit fit;
      if (kind == ModelKind::Linear) {
        fit = fit_linear(rep.train_points, cfg.alpha);
      } else {
        std::vector<BucketPoint> usable;
        for (const auto& b : rep.train_points)
          if (b.x < kQueueingMaxX) usable.push_back(b);
        fit = fit_queueing(usable, cfg.alpha);
      }
      m.slope = fit.slope;
      m.intercept = fit.intercept;
      m.train_amse = fit.amse;
    } catch (const ValidationError& e) {
      rep.notes.push_back(to_string(kind) + " fit failed: " + e.what());
      continue;
    }
    if (test_ok) {
      try {
        m.test_rarmse = rarmse(predict_points(m, rep.test_points), test_truth, cfg.alpha);
      } catch (const Error& e) {
        rep.notes.push_back(to_string(kind) + " scoring failed: " + e.what());
      }
      if (!test.empty()) m.coverage = coverage(m, test);
    }
    rep.candidates.push_back(m);
  }
  apply_threshold(rep, cfg.error_threshold);
  return rep;
}

// ---------------------------------------------------------------------------
// Sliding-window stability
// ---------------------------------------------------------------------------

inline constexpr std::int64_t kWeekSeconds = 7 * 24 * 3600;

struct TimeSpan {
  std::int64_t start = 0;
  std::int64_t end = 0;  // exclusive
  friend bool operator==(const TimeSpan&, const TimeSpan&) = default;
};

struct WindowReport {
  TimeSpan train_span;
  TimeSpan test_span;
  PairModelReport report;
};

struct StabilityOptions {
  std::int64_t train_len = 4 * kWeekSeconds;
  std::int64_t test_len = 2 * kWeekSeconds;
  std::int64_t step = 2 * kWeekSeconds;
};

/// Series span: first window start to the end of the last window.
inline TimeSpan series_span(std::span<const JoinedSample> series) {
  if (series.empty()) throw ValidationError("empty series");
  TimeSpan s{series.front().window_start, series.front().window_start + series.front().window_len};
  for (const auto& x : series) {
    s.start = std::min(s.start, x.window_start);
    s.end = std::max(s.end, x.window_start + x.window_len);
  }
  return s;
}

/// Window placements (train, test) at offsets 0, step, 2 step, ... while the
/// test span fits inside the series.
inline std::vector<std::pair<TimeSpan, TimeSpan>> window_placements(TimeSpan span, const StabilityOptions& o) {
  if (o.train_len <= 0 || o.test_len <= 0 || o.step <= 0)
    throw ValidationError("window lengths and step must be positive");
  if (span.end - span.start < o.train_len + o.test_len)
    throw ValidationError("series span is shorter than one train + test window");
  std::vector<std::pair<TimeSpan, TimeSpan>> out;
  for (std::int64_t off = 0; span.start + off + o.train_len + o.test_len <= span.end; off += o.step) {
    const std::int64_t t0 = span.start + off;
    out.push_back({{t0, t0 + o.train_len}, {t0 + o.train_len, t0 + o.train_len + o.test_len}});
  }
  return out;
}

inline std::vector<JoinedSample> samples_in(std::span<const JoinedSample> series, TimeSpan t) {
  std::vector<JoinedSample> out;
  for (const auto& s : series)
    if (s.window_start >= t.start && s.window_start < t.end) out.push_back(s);
  return out;
}

inline std::vector<WindowReport> stability_sweep(std::span<const JoinedSample> series, const PipelineConfig& cfg,
                                                 const StabilityOptions& opts = {},
                                                 unsigned threads = default_thread_count()) {
  cfg.validate();
  const auto placements = window_placements(series_span(series), opts);
  return parallel_map(placements.size(), threads, [&](std::size_t i) {
    const auto& [tr, te] = placements[i];
    const auto train = samples_in(series, tr);
    const auto test = samples_in(series, te);
    return WindowReport{tr, te, fit_pair(train, test, cfg)};
  });
}

// ---------------------------------------------------------------------------
// Sensitivity sweeps
// ---------------------------------------------------------------------------

struct SweepGrids {
  std::vector<double> alphas;
  std::vector<double> curvatures;
  std::vector<double> error_thresholds;

  static std::vector<double> default_alphas() { return {0.1, 0.3, 0.5, 0.7, 0.9}; }
  static std::vector<double> default_curvatures() { return {0.05, 0.1, 0.3, 0.5, 0.7, 0.8}; }
};

struct SweepRow {
  double alpha = 0.0;
  double curvature = 0.0;
  double error_threshold = 0.0;
  Verdict verdict = Verdict::InsufficientData;
  std::optional<KneeResult> knee;
  std::optional<FittedModel> best;       // lowest test rARMSE candidate
  std::optional<double> linear_overprediction;  // over the training buckets
  std::optional<double> best_overprediction;
};

/// Cross product of the grids. Models are refit along alpha and curvature
/// only; thresholds just re-derive the verdict.
inline std::vector<SweepRow> sensitivity_sweep(std::span<const JoinedSample> train, std::span<const JoinedSample> test,
                                               const PipelineConfig& base, const SweepGrids& grids,
                                               unsigned threads = default_thread_count()) {
  if (grids.alphas.empty() || grids.curvatures.empty() || grids.error_thresholds.empty())
    throw ValidationError("sweep grids must be non-empty");
  const std::size_t nc = grids.curvatures.size();
  const auto fits = parallel_map(grids.alphas.size() * nc, threads, [&](std::size_t i) {
    PipelineConfig cfg = base;
    cfg.alpha = grids.alphas[i / nc];
    cfg.curvature_threshold = grids.curvatures[i % nc];
    return fit_pair(train, test, cfg);
  });
  std::vector<SweepRow> rows;
  for (std::size_t i = 0; i < fits.size(); ++i) {
    const auto& rep = fits[i];
    for (double thr : grids.error_thresholds) {
      SweepRow r;
      r.alpha = grids.alphas[i / nc];
      r.curvature = grids.curvatures[i % nc];
      r.error_threshold = thr;
      r.verdict = verdict_for(rep, thr);
      r.knee = rep.knee;
      r.best = rep.best_candidate();
      for (const auto& c : rep.candidates)
        if (c.kind == ModelKind::Linear) r.linear_overprediction = overprediction_fraction(c, rep.train_points);
      if (r.best) r.best_overprediction = overprediction_fraction(*r.best, rep.train_points);
      rows.push_back(r);
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

inline Json to_json(const KneeResult& k) {
  return {{"knee_x", k.knee_x}, {"curvature", k.curvature}, {"bucket_index", k.bucket_index}};
}

inline Json to_json(const PairKey& k) {
  return {{"fabric", k.fabric},
          {"scope", k.scope.to_string()},
          {"qos", to_string(k.qos)},
          {"nlm_kind", k.nlm_kind.to_string()},
          {"afm_kind", k.afm_kind.to_string()}};
}

inline Json points_json(std::span<const BucketPoint> pts) {
  Json a = Json::array();
  for (const auto& b : pts) a.push_back({{"x", b.x}, {"y", b.y_tau}, {"n", b.n}});
  return a;
}

inline Json to_json(const PairModelReport& r) {
  Json cands = Json::array();
  for (const auto& c : r.candidates) cands.push_back(to_json(c));
  Json j = {{"key", to_json(r.key)},
            {"bucket_width", r.bucket_width},
            {"candidates", std::move(cands)},
            {"verdict", to_string(r.verdict)},
            {"train_samples", r.train_samples},
            {"subset_samples", r.subset_samples},
            {"test_samples", r.test_samples},
            {"train_buckets", points_json(r.train_points)},
            {"test_buckets", points_json(r.test_points)},
            {"notes", r.notes}};
  if (r.knee) j["knee"] = to_json(*r.knee);
  if (r.selected) j["selected"] = to_json(*r.selected);
  return j;
}

inline Json to_json(const WindowReport& w) {
  return {{"train_span", {w.train_span.start, w.train_span.end}},
          {"test_span", {w.test_span.start, w.test_span.end}},
          {"report", to_json(w.report)}};
}

inline Json to_json(const SweepRow& r) {
  Json j = {{"alpha", r.alpha},
            {"curvature", r.curvature},
            {"error_threshold", r.error_threshold},
            {"verdict", to_string(r.verdict)}};
  if (r.knee) j["knee"] = to_json(*r.knee);
  if (r.best) j["best"] = to_json(*r.best);
  if (r.linear_overprediction) j["linear_overprediction"] = *r.linear_overprediction;
  if (r.best_overprediction) j["best_overprediction"] = *r.best_overprediction;
  return j;
}

/// Plot-ready rows: one per test bucket over the whole test domain, with
/// the prediction of the selected model (or the best candidate when none is
/// selected) and a marker on the knee's bucket.
inline void write_plot_csv(std::ostream& out, const PairModelReport& r, std::span<const JoinedSample> test,
                           const PipelineConfig& cfg) {
  out << "bucket_x,observed_quantile,predicted_quantile,in_domain,knee_marker\n";
  if (test.empty()) return;
  const auto model = r.selected ? r.selected : r.best_candidate();
  const auto grid = make_grid(test, cfg.n_buckets, cfg.bucket_domain);
  const auto pts = bucket_quantiles(test, grid, cfg.fitted_quantile(), cfg.min_bucket_samples);
  const auto knee_bucket = r.knee ? grid.index_of(r.knee->knee_x) : std::nullopt;
  for (const auto& b : pts) {
    out << format_double(b.x) << ',' << format_double(b.y_tau) << ',';
    bool in_domain = true;
    if (model) {
      try {
        const auto p = predict(*model, b.x);
        out << format_double(p.value);
        in_domain = p.in_domain;
      } catch (const ValidationError&) {
        in_domain = false;
      }
    }
    out << ',' << (in_domain ? 1 : 0) << ',' << (knee_bucket && *knee_bucket == b.bucket ? 1 : 0) << '\n';
  }
}

}  // namespace afmlens
