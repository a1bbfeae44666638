#pragma once

// Resampling of anchor values known at a strictly increasing set of integer
// positions onto every position 0..n-1.

#include <cassert>
#include <cstddef>
#include <span>
#include <vector>

namespace skipzip::interp {

/// Piecewise linear between consecutive anchors. Positions outside the anchor
/// range take the nearest anchor value.
template <typename T>
std::vector<T> linear(std::span<const std::size_t> positions, std::span<const T> anchors, std::size_t n) {
  assert(positions.size() == anchors.size() && !positions.empty());
  std::vector<T> out(n);
  std::size_t seg = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (i <= positions.front()) {
      out[i] = anchors.front();
      continue;
    }
    if (i >= positions.back()) {
      out[i] = anchors.back();
      continue;
    }
    while (positions[seg + 1] <= i) ++seg;
    const auto x0 = static_cast<T>(positions[seg]);
    const auto x1 = static_cast<T>(positions[seg + 1]);
    const T t = (static_cast<T>(i) - x0) / (x1 - x0);
    out[i] = anchors[seg] + t * (anchors[seg + 1] - anchors[seg]);
  }
  return out;
}

/// Zero-order hold: each anchor value persists until the next anchor.
template <typename T>
std::vector<T> zero_order_hold(std::span<const std::size_t> positions, std::span<const T> anchors,
                               std::size_t n) {
  assert(positions.size() == anchors.size() && !positions.empty());
  std::vector<T> out(n, anchors.front());
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    while (k + 1 < positions.size() && positions[k + 1] <= i) ++k;
    out[i] = anchors[k];
  }
  return out;
}

/// Natural cubic spline (zero second derivative at both ends).
template <typename T>
class NaturalCubicSpline {
 public:
  NaturalCubicSpline(std::vector<T> x, std::vector<T> y) : x_(std::move(x)), y_(std::move(y)) {
    assert(x_.size() == y_.size() && x_.size() >= 2);
    const std::size_t n = x_.size();
    m_.assign(n, T{0});
    if (n < 3) return;

    // Tridiagonal system for the interior second derivatives, solved with the
    // Thomas algorithm.
    std::vector<T> h(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) h[i] = x_[i + 1] - x_[i];
    const std::size_t k = n - 2;
    std::vector<T> diag(k), upper(k), rhs(k);
    for (std::size_t i = 0; i < k; ++i) {
      diag[i] = T{2} * (h[i] + h[i + 1]);
      upper[i] = h[i + 1];
      rhs[i] = T{6} * ((y_[i + 2] - y_[i + 1]) / h[i + 1] - (y_[i + 1] - y_[i]) / h[i]);
    }
    for (std::size_t i = 1; i < k; ++i) {
      const T w = h[i] / diag[i - 1];
      diag[i] -= w * upper[i - 1];
      rhs[i] -= w * rhs[i - 1];
    }
    m_[k] = rhs[k - 1] / diag[k - 1];
    for (std::size_t i = k - 1; i-- > 0;) m_[i + 1] = (rhs[i] - upper[i] * m_[i + 2]) / diag[i];
  }

  T operator()(T xq) const {
    const std::size_t n = x_.size();
    std::size_t i = 0;
    if (xq >= x_[n - 1]) {
      i = n - 2;
    } else if (xq > x_[0]) {
      std::size_t lo = 0, hi = n - 1;
      while (hi - lo > 1) {
        const std::size_t mid = (lo + hi) / 2;
        (x_[mid] <= xq ? lo : hi) = mid;
      }
      i = lo;
    }
    const T h = x_[i + 1] - x_[i];
    const T a = (x_[i + 1] - xq) / h;
    const T b = (xq - x_[i]) / h;
    return a * y_[i] + b * y_[i + 1] +
           ((a * a * a - a) * m_[i] + (b * b * b - b) * m_[i + 1]) * h * h / T{6};
  }

  const std::vector<T>& second_derivatives() const noexcept { return m_; }

 private:
  std::vector<T> x_, y_, m_;
};

template <typename T>
std::vector<T> natural_spline(std::span<const std::size_t> positions, std::span<const T> anchors,
                              std::size_t n) {
  std::vector<T> x(positions.size());
  for (std::size_t i = 0; i < positions.size(); ++i) x[i] = static_cast<T>(positions[i]);
  NaturalCubicSpline<T> s(std::move(x), std::vector<T>(anchors.begin(), anchors.end()));
  std::vector<T> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = s(static_cast<T>(i));
  return out;
}

}  // namespace skipzip::interp
