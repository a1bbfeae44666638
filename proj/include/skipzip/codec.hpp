#pragma once

// Edge-side compression: skip sampling, min/max rescaling onto [0, 1] and
// truncation to the 0.01 grid, plus the inverse mappings used on the cloud.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "skipzip/core.hpp"

namespace skipzip {

struct IndexPlan {
  std::size_t n_total = 0;
  std::vector<std::size_t> kept_indices;

  friend bool operator==(const IndexPlan&, const IndexPlan&) = default;
};

/// Number of samples retained for a segment of length n_total. The product is
/// nudged by a relative 1e-9 so that decimal alphas such as 0.7 floor as they
/// would in decimal arithmetic rather than one below.
inline std::size_t kept_count(std::size_t n_total, double alpha) {
  const double product = alpha * static_cast<double>(n_total);
  const auto floor_count = static_cast<std::size_t>(std::floor(product * (1.0 + 1e-9)));
  return std::max<std::size_t>(2, floor_count);
}

/// Evenly spaced plan with `count` anchors over [0, n_total). Both endpoints
/// are always kept. For count <= n_total the spacing is >= 1, so rounding
/// never produces duplicates; the dedup pass only matters for count > n_total.
inline IndexPlan plan_indices_for_count(std::size_t n_total, std::size_t count) {
  if (n_total < 2) throw Error(Errc::SegmentTooShort, "need at least 2 samples, got " + std::to_string(n_total));
  count = std::max<std::size_t>(count, 2);
  IndexPlan plan{n_total, {}};
  plan.kept_indices.reserve(count);
  // round-half-up of j (n_total - 1) / (count - 1), in integers.
  const std::size_t num = n_total - 1, den = count - 1;
  for (std::size_t j = 0; j < count; ++j) {
    auto idx = (2 * j * num + den) / (2 * den);
    idx = std::min(idx, n_total - 1);
    if (plan.kept_indices.empty() || plan.kept_indices.back() != idx) plan.kept_indices.push_back(idx);
  }
  return plan;
}

inline IndexPlan plan_indices(std::size_t n_total, double alpha) {
  CompressionParams::checked(alpha);
  if (n_total < 2) throw Error(Errc::SegmentTooShort, "need at least 2 samples, got " + std::to_string(n_total));
  return plan_indices_for_count(n_total, kept_count(n_total, alpha));
}

template <typename T>
std::vector<T> skip_sample(std::span<const T> values, const IndexPlan& plan) {
  if (values.size() != plan.n_total) throw Error::length_mismatch(values.size(), plan.n_total);
  std::vector<T> out;
  out.reserve(plan.kept_indices.size());
  for (auto i : plan.kept_indices) out.push_back(values[i]);
  return out;
}

template <typename T>
struct Rescaled {
  std::vector<T> scaled;
  T x_min{};
  T x_max{};
};

/// Affine map onto [0, 1]. A constant input maps to all zeros.
template <typename T>
Rescaled<T> rescale(std::span<const T> values) {
  if (values.empty()) throw Error(Errc::EmptySegment, "cannot rescale an empty sequence");
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  Rescaled<T> r{std::vector<T>(values.size(), T{0}), *lo, *hi};
  if (r.x_max == r.x_min) return r;
  const T span = r.x_max - r.x_min;
  for (std::size_t i = 0; i < values.size(); ++i) r.scaled[i] = (values[i] - r.x_min) / span;
  return r;
}

/// Floors to two decimals. The result is the largest double of the form
/// k/100 not exceeding x, which is floor(100 x)/100 in exact arithmetic but
/// does not lose a grid step when 100 x rounds below an integer (0.29 -> 0.29).
inline double truncate2(double x) {
  double k = std::floor(x * 100.0);
  if ((k + 1.0) / 100.0 <= x) k += 1.0;
  else if (k / 100.0 > x) k -= 1.0;
  return k / 100.0;
}

inline std::vector<double> truncate2(std::span<const double> scaled) {
  std::vector<double> out(scaled.size());
  std::transform(scaled.begin(), scaled.end(), out.begin(), [](double v) { return truncate2(v); });
  return out;
}

inline bool on_grid2(double v) { return truncate2(v) == v; }

template <typename T>
std::vector<T> inverse_rescale(std::span<const T> scaled, T x_min, T x_max) {
  std::vector<T> out(scaled.size(), x_min);
  if (x_max == x_min) return out;
  const T span = x_max - x_min;
  for (std::size_t i = 0; i < scaled.size(); ++i) out[i] = x_min + scaled[i] * span;
  return out;
}

/// sample -> rescale (over the sampled values) -> truncate.
inline CompressedSegment compress(const SensorSegment& seg, CompressionParams params) {
  validate_segment(seg);
  CompressionParams::checked(params.alpha);
  const IndexPlan plan = plan_indices(seg.values.size(), params.alpha);
  const auto sampled = skip_sample<double>(seg.values, plan);
  auto r = rescale<double>(sampled);

  CompressedSegment cs;
  cs.segment_id = seg.segment_id;
  cs.mode = seg.mode;
  cs.sensor = seg.sensor;
  cs.alpha = params.alpha;
  cs.n_total = seg.values.size();
  cs.x_min = r.x_min;
  cs.x_max = r.x_max;
  cs.values_scaled = truncate2(r.scaled);
  return cs;
}

inline IndexPlan plan_for(const CompressedSegment& cs) {
  return plan_indices_for_count(cs.n_total, cs.values_scaled.size());
}

/// Structural checks on a compressed segment received from the wire.
inline void validate_compressed(const CompressedSegment& cs) {
  CompressionParams::checked(cs.alpha);
  if (cs.n_total < 2) throw Error(Errc::SegmentTooShort, "n_total must be >= 2");
  const auto expected = kept_count(cs.n_total, cs.alpha);
  if (cs.values_scaled.size() != expected) throw Error::length_mismatch(cs.values_scaled.size(), expected);
  if (!(cs.x_min <= cs.x_max) || !std::isfinite(cs.x_min) || !std::isfinite(cs.x_max))
    throw Error(Errc::BadFormat, "x_min/x_max inconsistent");
  for (std::size_t i = 0; i < cs.values_scaled.size(); ++i) {
    const double v = cs.values_scaled[i];
    if (!(v >= 0.0 && v <= 1.0) || !on_grid2(v)) throw Error::out_of_band(i, v);
  }
}

}  // namespace skipzip
