#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "afmlens/core.hpp"
#include "afmlens/error.hpp"
#include "afmlens/stats.hpp"

namespace afmlens {

/// Equal-width buckets over [lo, hi]; the last bucket is closed.
struct BucketGrid {
  double lo = 0.0;
  double hi = 1.0;
  int n = kMaxTypeBuckets;

  double width() const { return (hi - lo) / n; }
  double center(int i) const { return lo + (static_cast<double>(i) + 0.5) * width(); }

  std::optional<int> index_of(double x) const {
    if (!(x >= lo && x <= hi)) return std::nullopt;
    if (!(hi > lo)) return 0;
    const int i = static_cast<int>(std::floor((x - lo) / width()));
    return std::clamp(i, 0, n - 1);
  }
};

inline BucketGrid make_grid(std::span<const JoinedSample> samples, int n, const std::optional<BucketDomain>& domain) {
  if (n < 1) throw ValidationError("bucket count must be positive");
  if (domain) return {domain->lo, domain->hi, n};
  if (samples.empty()) throw ValidationError("cannot derive bucket grid from no samples");
  auto [lo, hi] = std::minmax_element(samples.begin(), samples.end(),
                                      [](const auto& a, const auto& b) { return a.nlm_value < b.nlm_value; });
  return {lo->nlm_value, hi->nlm_value, n};
}

/// Bucket-centre NLM value paired with a conditional quantile of the AFM.
struct BucketPoint {
  double x = 0.0;
  double y_tau = 0.0;
  std::size_t n = 0;
  int bucket = 0;

  friend bool operator==(const BucketPoint&, const BucketPoint&) = default;
};

/// Per-bucket type-7 quantile `q` of the AFM values. Buckets holding fewer
/// than `min_samples` samples are omitted; samples outside the grid are
/// ignored.
inline std::vector<BucketPoint> bucket_quantiles(std::span<const JoinedSample> samples, const BucketGrid& grid,
                                                 double q, int min_samples) {
  std::vector<std::vector<double>> ys(static_cast<std::size_t>(grid.n));
  for (const auto& s : samples)
    if (auto i = grid.index_of(s.nlm_value)) ys[static_cast<std::size_t>(*i)].push_back(s.afm_value);
  std::vector<BucketPoint> out;
  for (int i = 0; i < grid.n; ++i) {
    auto& v = ys[static_cast<std::size_t>(i)];
    if (v.empty() || v.size() < static_cast<std::size_t>(min_samples)) continue;
    std::sort(v.begin(), v.end());
    out.push_back({grid.center(i), sorted_quantile(v, q), v.size(), i});
  }
  return out;
}

}  // namespace afmlens
