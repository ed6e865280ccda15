#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "afmlens/buckets.hpp"
#include "afmlens/core.hpp"
#include "afmlens/error.hpp"

namespace afmlens {

struct EnvelopePoint {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const EnvelopePoint&, const EnvelopePoint&) = default;
};

inline constexpr std::size_t kMinEnvelopePoints = 4;

/// Ordered (x, y) curve on which the knee is searched.
class EnvelopeCurve {
public:
  EnvelopeCurve(std::vector<EnvelopePoint> points, KneeDirection direction)
      : points_(std::move(points)), direction_(direction) {
    if (points_.size() < kMinEnvelopePoints) throw ValidationError("insufficient envelope");
    for (std::size_t i = 0; i < points_.size(); ++i) {
      if (!std::isfinite(points_[i].x) || !std::isfinite(points_[i].y))
        throw ValidationError("envelope values must be finite");
      if (i > 0 && !(points_[i].x > points_[i - 1].x)) throw ValidationError("envelope x must be strictly increasing");
    }
  }

  const std::vector<EnvelopePoint>& points() const { return points_; }
  KneeDirection direction() const { return direction_; }

private:
  std::vector<EnvelopePoint> points_;
  KneeDirection direction_;
};

/// Envelope: the `env_quantile` AFM value of each populated bucket, placed
/// at the bucket centre.
inline EnvelopeCurve build_envelope(std::span<const JoinedSample> samples, const BucketGrid& grid,
                                    double env_quantile, int min_bucket_samples, KneeDirection direction) {
  if (samples.empty()) throw ValidationError("envelope of no samples");
  std::vector<EnvelopePoint> pts;
  for (const auto& b : bucket_quantiles(samples, grid, env_quantile, min_bucket_samples)) pts.push_back({b.x, b.y_tau});
  return EnvelopeCurve(std::move(pts), direction);
}

inline EnvelopeCurve build_envelope(std::span<const JoinedSample> samples, const PipelineConfig& cfg,
                                    double env_quantile = 0.95) {
  return build_envelope(samples, make_grid(samples, cfg.n_buckets, cfg.bucket_domain), env_quantile,
                        cfg.min_bucket_samples, cfg.knee_direction);
}

struct KneeResult {
  double knee_x = 0.0;
  double curvature = 0.0;  // normalized difference-curve height
  int bucket_index = 0;    // index into the envelope's points

  friend bool operator==(const KneeResult&, const KneeResult&) = default;
};

/// Difference curve in the envelope's point order. Points are normalized to
/// the unit square and reflected so the working curve is concave
/// increasing: ConvexIncreasing flips both axes, ConcaveDecreasing flips x.
/// The value at each point is y' - x' of the reflected curve. Empty for a
/// flat envelope.
inline std::vector<double> difference_curve(const EnvelopeCurve& curve) {
  const auto& p = curve.points();
  const double x0 = p.front().x;
  const double x1 = p.back().x;
  auto [ylo, yhi] = std::minmax_element(p.begin(), p.end(), [](auto& a, auto& b) { return a.y < b.y; });
  const double y0 = ylo->y;
  const double y1 = yhi->y;
  if (!(y1 > y0)) return {};
  std::vector<double> d(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double xn = (p[i].x - x0) / (x1 - x0);
    const double yn = (p[i].y - y0) / (y1 - y0);
    const double xr = 1.0 - xn;
    const double yr = curve.direction() == KneeDirection::ConvexIncreasing ? 1.0 - yn : yn;
    d[i] = yr - xr;
  }
  return d;
}

/// Kneedle with two changes: a knee must reach `curvature_threshold`, and
/// only the global maximum among the local maxima of the difference curve
/// is returned (ties go to the smallest x).
inline std::optional<KneeResult> detect_knee(const EnvelopeCurve& curve, double curvature_threshold) {
  if (!(curvature_threshold > 0.0 && curvature_threshold < 1.0))
    throw ValidationError("curvature threshold must lie in (0, 1)");
  const auto d = difference_curve(curve);
  if (d.empty()) return std::nullopt;

  std::optional<std::size_t> best;
  for (std::size_t i = 1; i + 1 < d.size(); ++i) {
    const bool local_max = d[i] >= d[i - 1] && d[i] >= d[i + 1];
    if (!local_max || d[i] < curvature_threshold) continue;
    if (!best || d[i] > d[*best]) best = i;
  }
  if (!best) return std::nullopt;
  return KneeResult{curve.points()[*best].x, d[*best], static_cast<int>(*best)};
}

}  // namespace afmlens
