#pragma once

#include <cmath>
#include <vector>

#include "esai/errors.hpp"
#include "esai/image.hpp"

namespace esai {

/// Peak signal-to-noise ratio in dB, capped at 99 dB (returned exactly when
/// the images are identical).
inline double psnr(const GrayImage& a, const GrayImage& b, double peak) {
  if (a.h != b.h || a.w != b.w) throw InvalidArgument("psnr: shape mismatch");
  if (!(peak > 0.0)) throw InvalidArgument("psnr: peak must be positive");
  if (a.v.empty()) throw InvalidArgument("psnr: empty image");
  double mse = 0.0;
  for (size_t i = 0; i < a.v.size(); ++i) {
    const double d = a.v[i] - b.v[i];
    mse += d * d;
  }
  mse /= static_cast<double>(a.v.size());
  if (mse == 0.0) return 99.0;
  return std::min(99.0, 10.0 * std::log10(peak * peak / mse));
}

/// Single-scale SSIM: 11x11 Gaussian window (sigma 1.5), k1=0.01, k2=0.03,
/// mean over all valid window positions. Images are expected on a [0, peak]
/// scale (default [0,1]).
inline double ssim(const GrayImage& a, const GrayImage& b, double peak = 1.0) {
  if (a.h != b.h || a.w != b.w) throw InvalidArgument("ssim: shape mismatch");
  constexpr int kWin = 11;
  if (a.h < kWin || a.w < kWin)
    throw InvalidArgument("ssim: images must be at least 11x11");
  constexpr double kSigma = 1.5;
  static const std::vector<double> kernel = [] {
    std::vector<double> k(kWin);
    double sum = 0.0;
    for (int i = 0; i < kWin; ++i) {
      const double d = i - (kWin - 1) / 2.0;
      k[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
      sum += k[i];
    }
    for (double& v : k) v /= sum;
    return k;
  }();

  const double c1 = (0.01 * peak) * (0.01 * peak);
  const double c2 = (0.03 * peak) * (0.03 * peak);

  // Separable Gaussian filtering of the five moment images, valid region only.
  const int oh = a.h - kWin + 1, ow = a.w - kWin + 1;
  auto filter = [&](auto&& value) {
    // horizontal pass then vertical pass
    std::vector<double> tmp(static_cast<size_t>(a.h) * ow);
    for (int y = 0; y < a.h; ++y)
      for (int x = 0; x < ow; ++x) {
        double s = 0.0;
        for (int k = 0; k < kWin; ++k) s += kernel[k] * value(y, x + k);
        tmp[static_cast<size_t>(y) * ow + x] = s;
      }
    std::vector<double> out(static_cast<size_t>(oh) * ow);
    for (int y = 0; y < oh; ++y)
      for (int x = 0; x < ow; ++x) {
        double s = 0.0;
        for (int k = 0; k < kWin; ++k) s += kernel[k] * tmp[static_cast<size_t>(y + k) * ow + x];
        out[static_cast<size_t>(y) * ow + x] = s;
      }
    return out;
  };

  const auto mu_a = filter([&](int y, int x) { return a.at(y, x); });
  const auto mu_b = filter([&](int y, int x) { return b.at(y, x); });
  const auto aa = filter([&](int y, int x) { return a.at(y, x) * a.at(y, x); });
  const auto bb = filter([&](int y, int x) { return b.at(y, x) * b.at(y, x); });
  const auto ab = filter([&](int y, int x) { return a.at(y, x) * b.at(y, x); });

  double sum = 0.0;
  for (size_t i = 0; i < mu_a.size(); ++i) {
    const double ma = mu_a[i], mb = mu_b[i];
    const double va = aa[i] - ma * ma;
    const double vb = bb[i] - mb * mb;
    const double cov = ab[i] - ma * mb;
    sum += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
  }
  return sum / static_cast<double>(mu_a.size());
}

}  // namespace esai
