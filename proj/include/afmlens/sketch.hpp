#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include <json.hpp>

#include "afmlens/error.hpp"

namespace afmlens {

/// Merging t-digest. Values are buffered and periodically compacted into
/// centroids whose size is bounded by the arcsine scale function
/// k(q) = delta * (asin(2q - 1) / pi + 1/2): a centroid may absorb
/// neighbours only while it spans at most one unit of k.
///
/// Quantiles interpolate linearly in cumulative weight between centroid
/// centres, with the ends pinned to the observed min and max. Each centroid
/// of weight w is centred at order-statistic index (weight before it) +
/// (w - 1) / 2, so a digest of weight-1 centroids reproduces the type-7
/// sample quantile exactly.
class TDigest {
public:
  struct Centroid {
    double mean = 0.0;
    double weight = 0.0;
    friend bool operator==(const Centroid&, const Centroid&) = default;
    friend auto operator<=>(const Centroid&, const Centroid&) = default;
  };

  static constexpr double kDefaultCompression = 100.0;

  explicit TDigest(double compression = kDefaultCompression) : delta_(compression) {
    if (!(compression > 0.0) || !std::isfinite(compression))
      throw ValidationError("t-digest compression must be positive");
    buffer_cap_ = static_cast<std::size_t>(std::ceil(5.0 * delta_)) + 8;
  }

  double compression() const { return delta_; }
  std::uint64_t count() const { return count_; }
  bool empty() const { return count_ == 0; }
  double min() const { return min_; }
  double max() const { return max_; }

  void add(double v) {
    if (!std::isfinite(v)) throw ValidationError("t-digest rejects non-finite value");
    if (count_ == 0) {
      min_ = max_ = v;
    } else {
      min_ = std::min(min_, v);
      max_ = std::max(max_, v);
    }
    ++count_;
    buffer_.push_back(v);
    if (buffer_.size() >= buffer_cap_) compact();
  }

  template <typename Range>
  void add_all(const Range& values) {
    for (double v : values) add(v);
  }

  /// Forces pending values into centroids.
  void compact() {
    if (buffer_.empty()) return;
    std::vector<Centroid> all = centroids_;
    all.reserve(all.size() + buffer_.size());
    for (double v : buffer_) all.push_back({v, 1.0});
    buffer_.clear();
    centroids_ = compress(std::move(all), delta_);
  }

  /// Compacted centroid list (does not modify the digest).
  std::vector<Centroid> centroids() const {
    if (buffer_.empty()) return centroids_;
    TDigest copy = *this;
    copy.compact();
    return copy.centroids_;
  }

  /// Merge of two independently built digests. The combined centroids are
  /// ordered canonically, so merge(a, b) and merge(b, a) are identical.
  static TDigest merge(const TDigest& a, const TDigest& b) {
    if (a.delta_ != b.delta_) throw ValidationError("cannot merge t-digests with different compression");
    TDigest out(a.delta_);
    out.count_ = a.count_ + b.count_;
    if (a.count_ == 0) {
      out.min_ = b.min_;
      out.max_ = b.max_;
    } else if (b.count_ == 0) {
      out.min_ = a.min_;
      out.max_ = a.max_;
    } else {
      out.min_ = std::min(a.min_, b.min_);
      out.max_ = std::max(a.max_, b.max_);
    }
    std::vector<Centroid> all = a.centroids();
    const auto bc = b.centroids();
    all.insert(all.end(), bc.begin(), bc.end());
    if (!all.empty()) out.centroids_ = compress(std::move(all), out.delta_);
    return out;
  }

  double quantile(double q) const {
    if (!(q >= 0.0 && q <= 1.0)) throw ValidationError("quantile fraction outside [0, 1]");
    if (count_ == 0) throw ValidationError("quantile of empty t-digest");
    if (!buffer_.empty()) {
      TDigest copy = *this;
      copy.compact();
      return copy.quantile(q);
    }
    const auto& cs = centroids_;
    const double last = static_cast<double>(count_ - 1);
    const double h = q * last;

    double before = 0.0;
    double prev_pos = 0.0;
    double prev_val = min_;
    for (const auto& c : cs) {
      const double pos = before + (c.weight - 1.0) / 2.0;
      if (h <= pos) return clamp(interpolate(prev_pos, prev_val, pos, c.mean, h));
      prev_pos = pos;
      prev_val = c.mean;
      before += c.weight;
    }
    return clamp(interpolate(prev_pos, prev_val, last, max_, h));
  }

  nlohmann::json to_json() const {
    nlohmann::json cs = nlohmann::json::array();
    for (const auto& c : centroids()) cs.push_back(nlohmann::json::array({c.mean, c.weight}));
    nlohmann::json j = {{"compression", delta_}, {"count", count_}, {"centroids", std::move(cs)}};
    if (count_ > 0) {
      j["min"] = min_;
      j["max"] = max_;
    } else {
      j["min"] = 0.0;
      j["max"] = 0.0;
    }
    return j;
  }

  /// Rebuilds a digest, checking every structural invariant.
  static TDigest from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ValidationError("sketch must be a JSON object");
    TDigest d(j.at("compression").get<double>());
    d.count_ = j.at("count").get<std::uint64_t>();
    d.min_ = j.at("min").get<double>();
    d.max_ = j.at("max").get<double>();
    double total = 0.0;
    for (const auto& c : j.at("centroids")) {
      if (!c.is_array() || c.size() != 2) throw ValidationError("centroid must be [mean, weight]");
      Centroid cen{c[0].get<double>(), c[1].get<double>()};
      if (!std::isfinite(cen.mean) || !(cen.weight > 0.0)) throw ValidationError("invalid centroid");
      if (!d.centroids_.empty() && !(cen.mean > d.centroids_.back().mean))
        throw ValidationError("centroid means must be strictly increasing");
      if (d.count_ > 0 && (cen.mean < d.min_ || cen.mean > d.max_))
        throw ValidationError("centroid mean outside [min, max]");
      total += cen.weight;
      d.centroids_.push_back(cen);
    }
    if (total != static_cast<double>(d.count_)) throw ValidationError("centroid weights do not sum to count");
    if (d.count_ > 0 && !(d.min_ <= d.max_)) throw ValidationError("sketch min exceeds max");
    return d;
  }

private:
  static double interpolate(double x0, double y0, double x1, double y1, double x) {
    if (x1 <= x0) return y1;
    return y0 + (y1 - y0) * ((x - x0) / (x1 - x0));
  }

  double clamp(double v) const { return std::clamp(v, min_, max_); }

  double k_scale(double q) const { return delta_ * (std::asin(2.0 * q - 1.0) / std::numbers::pi + 0.5); }
  double k_inverse(double k) const { return (std::sin((k / delta_ - 0.5) * std::numbers::pi) + 1.0) / 2.0; }

  // Greedy single pass over centroids sorted by (mean, weight). Equal means
  // always fuse so that means stay strictly increasing.
  static std::vector<Centroid> compress(std::vector<Centroid> all, double delta) {
    std::sort(all.begin(), all.end());
    double total = 0.0;
    for (const auto& c : all) total += c.weight;
    const TDigest scale(delta);

    std::vector<Centroid> out;
    out.reserve(static_cast<std::size_t>(2 * delta) + 2);
    double done = 0.0;
    auto limit_for = [&](double w_before) {
      const double k_next = scale.k_scale(std::min(1.0, w_before / total)) + 1.0;
      return k_next >= delta ? 1.0 : scale.k_inverse(k_next);
    };
    Centroid cur = all.front();
    double q_limit = limit_for(0.0);
    for (std::size_t i = 1; i < all.size(); ++i) {
      const Centroid& next = all[i];
      if (next.mean == cur.mean || (done + cur.weight + next.weight) / total <= q_limit) {
        const double w = cur.weight + next.weight;
        const double m = cur.mean + (next.mean - cur.mean) * (next.weight / w);
        cur.mean = std::clamp(m, cur.mean, next.mean);
        cur.weight = w;
      } else {
        out.push_back(cur);
        done += cur.weight;
        q_limit = limit_for(done);
        cur = next;
      }
    }
    out.push_back(cur);
    return out;
  }

  double delta_;
  std::size_t buffer_cap_ = 0;
  std::uint64_t count_ = 0;
  double min_ = 0.0;
  double max_ = 0.0;
  std::vector<Centroid> centroids_;
  std::vector<double> buffer_;
};

}  // namespace afmlens
