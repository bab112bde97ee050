#pragma once

#include <cmath>

#include "esai/errors.hpp"
#include "esai/image.hpp"

namespace esai {

/// Loss mixing weights. The perceptual slot is kept so the omission is
/// explicit, but this build ships no pretrained feature network: it must
/// stay zero.
struct LossWeights {
  double beta_per = 0.0;
  double beta_pix = 32.0;
  double beta_tv = 2e-4;

  void validate() const {
    if (beta_per != 0.0)
      throw InvalidArgument("LossWeights: perceptual term is not available, beta_per must be 0");
    if (beta_pix < 0.0 || beta_tv < 0.0)
      throw InvalidArgument("LossWeights: weights must be non-negative");
  }
};

/// Mean absolute error over all pixels.
inline double loss_pixel(const GrayImage& y, const GrayImage& truth) {
  if (y.h != truth.h || y.w != truth.w) throw InvalidArgument("loss_pixel: shape mismatch");
  double sum = 0.0;
  for (size_t i = 0; i < y.v.size(); ++i) sum += std::fabs(y.v[i] - truth.v[i]);
  return sum / static_cast<double>(y.v.size());
}

namespace detail {

inline size_t tv_offsets(const GrayImage& y) {
  return static_cast<size_t>(std::max(0, y.h - 1)) * y.w +
         static_cast<size_t>(y.h) * std::max(0, y.w - 1);
}

}  // namespace detail

/// Anisotropic total variation: mean over valid offsets of the absolute
/// vertical and horizontal forward differences.
inline double loss_tv(const GrayImage& y) {
  const size_t m = detail::tv_offsets(y);
  if (m == 0) return 0.0;
  double sum = 0.0;
  for (int r = 0; r + 1 < y.h; ++r)
    for (int c = 0; c < y.w; ++c) sum += std::fabs(y.at(r + 1, c) - y.at(r, c));
  for (int r = 0; r < y.h; ++r)
    for (int c = 0; c + 1 < y.w; ++c) sum += std::fabs(y.at(r, c + 1) - y.at(r, c));
  return sum / static_cast<double>(m);
}

inline double total_loss(const GrayImage& y, const GrayImage& truth, const LossWeights& w) {
  w.validate();
  return w.beta_pix * loss_pixel(y, truth) + w.beta_tv * loss_tv(y);
}

/// Gradient of total_loss with respect to y. Kink points (exact ties) take
/// the zero subgradient.
inline GrayImage total_loss_grad(const GrayImage& y, const GrayImage& truth,
                                 const LossWeights& w) {
  w.validate();
  if (y.h != truth.h || y.w != truth.w) throw InvalidArgument("total_loss_grad: shape mismatch");
  GrayImage g(y.h, y.w, 0.0, 0.0, 0.0);
  const double pix_scale = w.beta_pix / static_cast<double>(y.v.size());
  for (size_t i = 0; i < y.v.size(); ++i) {
    const double d = y.v[i] - truth.v[i];
    g.v[i] = d > 0.0 ? pix_scale : (d < 0.0 ? -pix_scale : 0.0);
  }
  const size_t m = detail::tv_offsets(y);
  if (m > 0 && w.beta_tv != 0.0) {
    const double tv_scale = w.beta_tv / static_cast<double>(m);
    auto add_pair = [&](int r0, int c0, int r1, int c1) {
      const double d = y.at(r1, c1) - y.at(r0, c0);
      if (d == 0.0) return;
      const double s = d > 0.0 ? tv_scale : -tv_scale;
      g.at(r1, c1) += s;
      g.at(r0, c0) -= s;
    };
    for (int r = 0; r + 1 < y.h; ++r)
      for (int c = 0; c < y.w; ++c) add_pair(r, c, r + 1, c);
    for (int r = 0; r < y.h; ++r)
      for (int c = 0; c + 1 < y.w; ++c) add_pair(r, c, r, c + 1);
  }
  return g;
}

}  // namespace esai
