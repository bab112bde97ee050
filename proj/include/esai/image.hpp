#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "esai/errors.hpp"

namespace esai {

/// Single-channel real-valued image, row-major.
struct GrayImage {
  int h = 0;
  int w = 0;
  std::vector<double> v;
  // Expected value range, e.g. [0,1] for normalized images or [0,255] for
  // 8-bit sources. Informational; operations do not clamp to it.
  double range_lo = 0.0;
  double range_hi = 1.0;

  GrayImage() = default;
  GrayImage(int h_, int w_, double fill = 0.0, double lo = 0.0, double hi = 1.0)
      : h(h_), w(w_), v(static_cast<size_t>(h_) * w_, fill), range_lo(lo), range_hi(hi) {}

  double& at(int y, int x) { return v[static_cast<size_t>(y) * w + x]; }
  double at(int y, int x) const { return v[static_cast<size_t>(y) * w + x]; }
  size_t size() const { return v.size(); }

  /// Bilinear sample with clamped borders; (x, y) in pixel units.
  double sample_clamped(double x, double y) const {
    const double cx = std::clamp(x, 0.0, static_cast<double>(w - 1));
    const double cy = std::clamp(y, 0.0, static_cast<double>(h - 1));
    const int x0 = std::min(static_cast<int>(cx), w - 2 >= 0 ? w - 2 : 0);
    const int y0 = std::min(static_cast<int>(cy), h - 2 >= 0 ? h - 2 : 0);
    if (w == 1 && h == 1) return at(0, 0);
    const double fx = cx - x0;
    const double fy = cy - y0;
    const int x1 = std::min(x0 + 1, w - 1);
    const int y1 = std::min(y0 + 1, h - 1);
    return (1 - fy) * ((1 - fx) * at(y0, x0) + fx * at(y0, x1)) +
           fy * ((1 - fx) * at(y1, x0) + fx * at(y1, x1));
  }
};

/// Affine rescale of an image to [0,1]: (img - min) / (max - min).
/// A constant image maps to all zeros.
inline GrayImage normalize_minmax(const GrayImage& img) {
  GrayImage out(img.h, img.w, 0.0, 0.0, 1.0);
  if (img.v.empty()) return out;
  const auto [mn_it, mx_it] = std::minmax_element(img.v.begin(), img.v.end());
  const double mn = *mn_it, mx = *mx_it;
  if (mx == mn) return out;
  const double inv = 1.0 / (mx - mn);
  for (size_t i = 0; i < img.v.size(); ++i) out.v[i] = (img.v[i] - mn) * inv;
  return out;
}

}  // namespace esai
