#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "afmlens/buckets.hpp"
#include "afmlens/core.hpp"
#include "afmlens/error.hpp"

namespace afmlens {

/// Discretizes samples into conditional-quantile points: the upper-tail
/// config fits the tau-quantile of each bucket, the lower-tail config the
/// (1 - tau)-quantile.
inline std::vector<BucketPoint> bucketize(std::span<const JoinedSample> samples, const BucketGrid& grid, double tau,
                                          TailSide side, int min_bucket_samples) {
  if (samples.empty()) throw ValidationError("bucketize of no samples");
  const double q = side == TailSide::Upper ? tau : 1.0 - tau;
  auto pts = bucket_quantiles(samples, grid, q, min_bucket_samples);
  if (pts.size() < 2) throw ValidationError("fewer than 2 populated buckets");
  return pts;
}

inline std::vector<BucketPoint> bucketize(std::span<const JoinedSample> samples, const PipelineConfig& cfg) {
  return bucketize(samples, make_grid(samples, cfg.n_buckets, cfg.bucket_domain), cfg.tau, cfg.tail_side,
                   cfg.min_bucket_samples);
}

// ---------------------------------------------------------------------------
// Asymmetric losses
// ---------------------------------------------------------------------------

namespace detail {

inline void check_loss_args(std::span<const double> pred, std::span<const double> truth, double alpha) {
  if (pred.size() != truth.size()) throw ValidationError("prediction and truth lengths differ");
  if (pred.empty()) throw ValidationError("loss of empty input");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must lie in (0, 1)");
}

// 2 (alpha mean(over^2) + (1 - alpha) mean(under^2)), each mean taken over
// the strictly over- or under-predicted points only. An empty side adds 0.
inline double asymmetric_mean_square(double over_sq, std::size_t n_over, double under_sq, std::size_t n_under,
                                     double alpha) {
  const double over = n_over ? over_sq / static_cast<double>(n_over) : 0.0;
  const double under = n_under ? under_sq / static_cast<double>(n_under) : 0.0;
  return 2.0 * (alpha * over + (1.0 - alpha) * under);
}

}  // namespace detail

/// Asymmetric mean squared error. alpha > 0.5 penalizes overprediction.
inline double amse(std::span<const double> predictions, std::span<const double> truths, double alpha) {
  detail::check_loss_args(predictions, truths, alpha);
  double over = 0.0, under = 0.0;
  std::size_t n_over = 0, n_under = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double e = predictions[i] - truths[i];
    if (e > 0.0) {
      over += e * e;
      ++n_over;
    } else if (e < 0.0) {
      under += e * e;
      ++n_under;
    }
  }
  return detail::asymmetric_mean_square(over, n_over, under, n_under, alpha);
}

/// Relative asymmetric root mean squared error: errors are divided by the
/// truth, so a zero truth is an error.
inline double rarmse(std::span<const double> predictions, std::span<const double> truths, double alpha) {
  detail::check_loss_args(predictions, truths, alpha);
  double over = 0.0, under = 0.0;
  std::size_t n_over = 0, n_under = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (truths[i] == 0.0) throw DivisionByZeroError("rARMSE division by zero: zero-valued truth");
    const double e = (predictions[i] - truths[i]) / truths[i];
    if (e > 0.0) {
      over += e * e;
      ++n_over;
    } else if (e < 0.0) {
      under += e * e;
      ++n_under;
    }
  }
  return std::sqrt(detail::asymmetric_mean_square(over, n_over, under, n_under, alpha));
}

// ---------------------------------------------------------------------------
// Fitting
// ---------------------------------------------------------------------------

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double amse = 0.0;
  int sweeps = 0;
};

inline LineFit ordinary_least_squares(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2) throw ValidationError("least squares needs at least 2 points");
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (!(sxx > 0.0)) throw ValidationError("degenerate x: all values equal");
  const double slope = sxy / sxx;
  return {slope, my - slope * mx, 0.0, 0};
}

inline constexpr int kMaxSweeps = 500;
inline constexpr double kRelativeImprovementStop = 1e-10;

/// (slope, intercept) minimizing AMSE over (x, y) pairs. Starts at the
/// least-squares line and runs a deterministic direct search: each direction
/// keeps stepping while the objective drops, and the steps halve when no
/// direction helps.
inline LineFit fit_line_amse(std::span<const double> xs, std::span<const double> ys, double alpha) {
  LineFit start = ordinary_least_squares(xs, ys);
  if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must lie in (0, 1)");

  std::vector<double> pred(xs.size());
  auto objective = [&](const std::array<double, 2>& p) {
    for (std::size_t i = 0; i < xs.size(); ++i) pred[i] = p[0] * xs[i] + p[1];
    return amse(pred, ys, alpha);
  };

  std::array<double, 2> p{start.slope, start.intercept};
  std::array<double, 2> step{std::abs(p[0]) * 0.1 + 1e-6, std::abs(p[1]) * 0.1 + 1e-6};
  // Axis moves alone stall on kinks of the loss that are not axis aligned,
  // so each sweep also tries evenly spaced oblique directions. The fan turns
  // by an irrational angle whenever the steps shrink.
  constexpr int kDirections = 16;
  std::array<std::array<double, 2>, kDirections> dirs{};
  auto aim = [&](double phase) {
    for (int k = 0; k < kDirections; ++k) {
      const double theta = std::numbers::pi * 2.0 * k / kDirections + phase;
      dirs[static_cast<std::size_t>(k)] = {std::cos(theta), std::sin(theta)};
    }
  };
  double phase = 0.0;
  aim(phase);
  double f = objective(p);
  int sweep = 0;
  for (; sweep < kMaxSweeps && f > 0.0; ++sweep) {
    const double f_start = f;
    const auto p_start = p;
    bool moved = false;
    for (const auto& d : dirs) {
      for (int k = 0; k < 64; ++k) {
        const std::array<double, 2> trial{p[0] + d[0] * step[0], p[1] + d[1] * step[1]};
        const double ft = objective(trial);
        if (!(ft < f)) break;
        p = trial;
        f = ft;
        moved = true;
      }
    }
    // Pattern move: extrapolate along this sweep's net displacement, which
    // follows a valley that no fixed direction fits.
    for (double scale = 1.0; moved && scale <= 1024.0; scale *= 2.0) {
      const std::array<double, 2> trial{p[0] + scale * (p[0] - p_start[0]), p[1] + scale * (p[1] - p_start[1])};
      const double ft = objective(trial);
      if (!(ft < f)) break;
      p = trial;
      f = ft;
    }
    const bool tiny = step[0] <= 1e-9 * (std::abs(p[0]) + 1.0) && step[1] <= 1e-9 * (std::abs(p[1]) + 1.0);
    if (!moved) {
      step[0] *= 0.5;
      step[1] *= 0.5;
      phase += std::numbers::pi * 2.0 / kDirections / std::numbers::phi;
      aim(phase);
    }
    if (tiny && f_start - f <= kRelativeImprovementStop * f_start) break;
  }
  return {p[0], p[1], f, sweep};
}

inline LineFit fit_linear(std::span<const BucketPoint> points, double alpha) {
  std::vector<double> xs, ys;
  for (const auto& b : points) {
    xs.push_back(b.x);
    ys.push_back(b.y_tau);
  }
  return fit_line_amse(xs, ys, alpha);
}

inline constexpr double kQueueingMaxX = 0.995;

/// x / (1 - x): the M/D/1-style reciprocal feature.
inline double queueing_transform(double x) {
  if (!(x < 1.0)) throw ValidationError("queueing transform requires x < 1");
  return x / (1.0 - x);
}

/// Linear fit on the queueing feature; the result predicts
/// y = slope * x / (1 - x) + intercept.
inline LineFit fit_queueing(std::span<const BucketPoint> points, double alpha) {
  std::vector<double> qs, ys;
  for (const auto& b : points) {
    if (!(b.x < kQueueingMaxX)) throw ValidationError("queueing fit requires every bucket x < 0.995");
    qs.push_back(queueing_transform(b.x));
    ys.push_back(b.y_tau);
  }
  return fit_line_amse(qs, ys, alpha);
}

struct Prediction {
  double value = 0.0;
  bool in_domain = true;  // x within the model's knee-bounded domain
};

inline Prediction predict(const FittedModel& m, double x) {
  const double feature = m.kind == ModelKind::Linear ? x : queueing_transform(x);
  return {m.slope * feature + m.intercept, !m.knee_threshold || x <= *m.knee_threshold};
}

inline std::vector<double> predict_points(const FittedModel& m, std::span<const BucketPoint> points) {
  std::vector<double> out;
  out.reserve(points.size());
  for (const auto& b : points) out.push_back(predict(m, b.x).value);
  return out;
}

/// Fraction of points the model strictly overpredicts.
inline double overprediction_fraction(const FittedModel& m, std::span<const BucketPoint> points) {
  if (points.empty()) return 0.0;
  std::size_t over = 0;
  for (const auto& b : points)
    if (predict(m, b.x).value > b.y_tau) ++over;
  return static_cast<double>(over) / static_cast<double>(points.size());
}

}  // namespace afmlens
