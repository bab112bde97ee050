#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "esai/errors.hpp"
#include "esai/parallel.hpp"
#include "esai/rng.hpp"

namespace esai {

/// Dense (channels, height, width) tensor, row-major.
struct Tensor3 {
  int c = 0, h = 0, w = 0;
  std::vector<double> v;

  Tensor3() = default;
  Tensor3(int c_, int h_, int w_, double fill = 0.0)
      : c(c_), h(h_), w(w_), v(static_cast<size_t>(c_) * h_ * w_, fill) {}

  double& at(int ch, int y, int x) { return v[(static_cast<size_t>(ch) * h + y) * w + x]; }
  double at(int ch, int y, int x) const { return v[(static_cast<size_t>(ch) * h + y) * w + x]; }
  double* plane(int ch) { return v.data() + static_cast<size_t>(ch) * h * w; }
  const double* plane(int ch) const { return v.data() + static_cast<size_t>(ch) * h * w; }
  size_t size() const { return v.size(); }
  bool same_shape(const Tensor3& o) const { return c == o.c && h == o.h && w == o.w; }
};

/// Square convolution kernel bank with optional per-output-channel bias.
/// Weight layout: (oc, ic, ky, kx).
struct ConvLayer {
  int oc = 0, ic = 0, k = 1;
  std::vector<double> w;
  std::vector<double> b;  // empty when the layer has no bias

  ConvLayer() = default;
  ConvLayer(int oc_, int ic_, int k_, bool bias)
      : oc(oc_), ic(ic_), k(k_), w(static_cast<size_t>(oc_) * ic_ * k_ * k_, 0.0),
        b(bias ? oc_ : 0, 0.0) {}

  double& wt(int o, int i, int ky, int kx) {
    return w[((static_cast<size_t>(o) * ic + i) * k + ky) * k + kx];
  }
  double wt(int o, int i, int ky, int kx) const {
    return w[((static_cast<size_t>(o) * ic + i) * k + ky) * k + kx];
  }
  int pad() const { return k / 2; }
  bool has_bias() const { return !b.empty(); }
  size_t param_count() const { return w.size() + b.size(); }

  void init_he(Rng& rng) {
    const double std = std::sqrt(2.0 / (static_cast<double>(ic) * k * k));
    for (double& x : w) x = rng.normal(0.0, std);
    for (double& x : b) x = 0.0;
  }
};

enum class Pad { zero, reflect };

namespace detail {

inline void check_conv_input(const Tensor3& in, const ConvLayer& L, Pad pad) {
  if (in.c != L.ic)
    throw InvalidArgument("conv: input has " + std::to_string(in.c) + " channels, layer expects " +
                          std::to_string(L.ic));
  if (pad == Pad::reflect && (in.h <= L.pad() || in.w <= L.pad()))
    throw InvalidArgument("conv: image too small for reflection padding");
}

/// Mirror index excluding the edge sample (-1 -> 1, n -> n-2).
inline int reflect101(int i, int n) {
  if (i < 0) return -i;
  if (i >= n) return 2 * n - 2 - i;
  return i;
}

}  // namespace detail

/// Same-size convolution with zero padding. Per output cell, taps accumulate
/// in (ic, ky, kx) order with out-of-range taps skipped; the scalar reference
/// used in tests follows the same canonical order.
inline Tensor3 conv2d_zero(const Tensor3& in, const ConvLayer& L) {
  detail::check_conv_input(in, L, Pad::zero);
  Tensor3 out(L.oc, in.h, in.w);
  const int P = L.pad(), h = in.h, w = in.w;
  parallel_for(L.oc, [&](int64_t oc) {
    double* op = out.plane(static_cast<int>(oc));
    if (L.has_bias())
      for (int i = 0; i < h * w; ++i) op[i] = L.b[oc];
    for (int ic = 0; ic < L.ic; ++ic) {
      const double* ip = in.plane(ic);
      for (int ky = 0; ky < L.k; ++ky) {
        const int dy = ky - P;
        const int y0 = std::max(0, -dy), y1 = std::min(h, h - dy);
        for (int kx = 0; kx < L.k; ++kx) {
          const double wv = L.wt(static_cast<int>(oc), ic, ky, kx);
          if (wv == 0.0) continue;
          const int dx = kx - P;
          const int x0 = std::max(0, -dx), x1 = std::min(w, w - dx);
          for (int y = y0; y < y1; ++y) {
            const double* src = ip + (y + dy) * w + (x0 + dx);
            double* dst = op + y * w + x0;
            for (int i = 0; i < x1 - x0; ++i) dst[i] += wv * src[i];
          }
        }
      }
    }
  });
  return out;
}

/// Flat indices of non-zero entries, scan order (matches conv2d_zero's
/// per-cell accumulation order when values are binary).
inline std::vector<int32_t> active_sites(const Tensor3& t) {
  std::vector<int32_t> idx;
  for (size_t i = 0; i < t.v.size(); ++i)
    if (t.v[i] != 0.0) idx.push_back(static_cast<int32_t>(i));
  return idx;
}

/// Zero-pad convolution of a binary tensor given its active sites. Produces
/// results identical to conv2d_zero; cost scales with the firing rate.
inline Tensor3 conv2d_zero_spikes(const Tensor3& in, const std::vector<int32_t>& active,
                                  const ConvLayer& L) {
  detail::check_conv_input(in, L, Pad::zero);
  Tensor3 out(L.oc, in.h, in.w);
  const int P = L.pad(), h = in.h, w = in.w;
  parallel_for(L.oc, [&](int64_t oc) {
    double* op = out.plane(static_cast<int>(oc));
    if (L.has_bias())
      for (int i = 0; i < h * w; ++i) op[i] = L.b[oc];
    for (int32_t a : active) {
      const int ic = a / (h * w);
      const int iy = (a / w) % h;
      const int ix = a % w;
      const double* wrow = &L.w[((static_cast<size_t>(oc) * L.ic + ic) * L.k) * L.k];
      for (int ky = 0; ky < L.k; ++ky) {
        const int y = iy - ky + P;
        if (y < 0 || y >= h) continue;
        for (int kx = 0; kx < L.k; ++kx) {
          const int x = ix - kx + P;
          if (x < 0 || x >= w) continue;
          op[y * w + x] += wrow[ky * L.k + kx];
        }
      }
    }
  });
  return out;
}

/// d loss / d input for conv2d_zero.
inline Tensor3 conv2d_zero_grad_input(const Tensor3& gout, const ConvLayer& L) {
  Tensor3 gin(L.ic, gout.h, gout.w);
  const int P = L.pad(), h = gout.h, w = gout.w;
  parallel_for(L.ic, [&](int64_t ic) {
    double* gp = gin.plane(static_cast<int>(ic));
    for (int oc = 0; oc < L.oc; ++oc) {
      const double* op = gout.plane(oc);
      for (int ky = 0; ky < L.k; ++ky) {
        const int dy = P - ky;
        const int y0 = std::max(0, -dy), y1 = std::min(h, h - dy);
        for (int kx = 0; kx < L.k; ++kx) {
          const double wv = L.wt(oc, static_cast<int>(ic), ky, kx);
          if (wv == 0.0) continue;
          const int dx = P - kx;
          const int x0 = std::max(0, -dx), x1 = std::min(w, w - dx);
          for (int y = y0; y < y1; ++y) {
            const double* src = op + (y + dy) * w + (x0 + dx);
            double* dst = gp + y * w + x0;
            for (int i = 0; i < x1 - x0; ++i) dst[i] += wv * src[i];
          }
        }
      }
    }
  });
  return gin;
}

/// Accumulates d loss / d weights (and bias) for conv2d_zero into `gL`.
inline void conv2d_zero_grad_params(const Tensor3& in, const Tensor3& gout, const ConvLayer& L,
                                    ConvLayer& gL) {
  const int P = L.pad(), h = in.h, w = in.w;
  parallel_for(L.oc, [&](int64_t oc) {
    const double* op = gout.plane(static_cast<int>(oc));
    for (int ic = 0; ic < L.ic; ++ic) {
      const double* ip = in.plane(ic);
      for (int ky = 0; ky < L.k; ++ky) {
        const int dy = ky - P;
        const int y0 = std::max(0, -dy), y1 = std::min(h, h - dy);
        for (int kx = 0; kx < L.k; ++kx) {
          const int dx = kx - P;
          const int x0 = std::max(0, -dx), x1 = std::min(w, w - dx);
          double acc = 0.0;
          for (int y = y0; y < y1; ++y) {
            const double* src = ip + (y + dy) * w + (x0 + dx);
            const double* go = op + y * w + x0;
            for (int i = 0; i < x1 - x0; ++i) acc += go[i] * src[i];
          }
          gL.wt(static_cast<int>(oc), ic, ky, kx) += acc;
        }
      }
    }
    if (L.has_bias()) {
      double acc = 0.0;
      for (int i = 0; i < h * w; ++i) acc += op[i];
      gL.b[oc] += acc;
    }
  });
}

/// Weight gradients for a binary input given its active sites.
inline void conv2d_zero_grad_params_spikes(const Tensor3& in, const std::vector<int32_t>& active,
                                           const Tensor3& gout, const ConvLayer& L,
                                           ConvLayer& gL) {
  const int P = L.pad(), h = in.h, w = in.w;
  parallel_for(L.oc, [&](int64_t oc) {
    const double* op = gout.plane(static_cast<int>(oc));
    for (int32_t a : active) {
      const int ic = a / (h * w);
      const int iy = (a / w) % h;
      const int ix = a % w;
      for (int ky = 0; ky < L.k; ++ky) {
        const int y = iy - ky + P;
        if (y < 0 || y >= h) continue;
        for (int kx = 0; kx < L.k; ++kx) {
          const int x = ix - kx + P;
          if (x < 0 || x >= w) continue;
          gL.wt(static_cast<int>(oc), ic, ky, kx) += op[y * w + x];
        }
      }
    }
    if (L.has_bias()) {
      double acc = 0.0;
      for (int i = 0; i < h * w; ++i) acc += op[i];
      gL.b[oc] += acc;
    }
  });
}

/// Same-size convolution with mirror (edge-excluding) padding.
inline Tensor3 conv2d_reflect(const Tensor3& in, const ConvLayer& L) {
  detail::check_conv_input(in, L, Pad::reflect);
  Tensor3 out(L.oc, in.h, in.w);
  const int P = L.pad(), h = in.h, w = in.w;
  parallel_for(L.oc, [&](int64_t oc) {
    double* op = out.plane(static_cast<int>(oc));
    if (L.has_bias())
      for (int i = 0; i < h * w; ++i) op[i] = L.b[oc];
    for (int ic = 0; ic < L.ic; ++ic) {
      const double* ip = in.plane(ic);
      for (int ky = 0; ky < L.k; ++ky) {
        for (int kx = 0; kx < L.k; ++kx) {
          const double wv = L.wt(static_cast<int>(oc), ic, ky, kx);
          if (wv == 0.0) continue;
          for (int y = 0; y < h; ++y) {
            const int sy = detail::reflect101(y + ky - P, h);
            const double* row = ip + sy * w;
            double* dst = op + y * w;
            for (int x = 0; x < w; ++x)
              dst[x] += wv * row[detail::reflect101(x + kx - P, w)];
          }
        }
      }
    }
  });
  return out;
}

/// Gradients for conv2d_reflect: returns d/d input, accumulates d/d params.
inline Tensor3 conv2d_reflect_backward(const Tensor3& in, const Tensor3& gout, const ConvLayer& L,
                                       ConvLayer& gL) {
  const int P = L.pad(), h = in.h, w = in.w;
  Tensor3 gin(L.ic, h, w);
  parallel_for(L.ic, [&](int64_t ic) {
    double* gp = gin.plane(static_cast<int>(ic));
    for (int oc = 0; oc < L.oc; ++oc) {
      const double* op = gout.plane(oc);
      for (int ky = 0; ky < L.k; ++ky) {
        for (int kx = 0; kx < L.k; ++kx) {
          const double wv = L.wt(oc, static_cast<int>(ic), ky, kx);
          for (int y = 0; y < h; ++y) {
            const int sy = detail::reflect101(y + ky - P, h);
            const double* go = op + y * w;
            for (int x = 0; x < w; ++x)
              gp[sy * w + detail::reflect101(x + kx - P, w)] += wv * go[x];
          }
        }
      }
    }
  });
  parallel_for(L.oc, [&](int64_t oc) {
    const double* op = gout.plane(static_cast<int>(oc));
    for (int ic = 0; ic < L.ic; ++ic) {
      const double* ip = in.plane(ic);
      for (int ky = 0; ky < L.k; ++ky) {
        for (int kx = 0; kx < L.k; ++kx) {
          double acc = 0.0;
          for (int y = 0; y < h; ++y) {
            const int sy = detail::reflect101(y + ky - P, h);
            const double* row = ip + sy * w;
            const double* go = op + y * w;
            for (int x = 0; x < w; ++x) acc += go[x] * row[detail::reflect101(x + kx - P, w)];
          }
          gL.wt(static_cast<int>(oc), ic, ky, kx) += acc;
        }
      }
    }
    if (L.has_bias()) {
      double acc = 0.0;
      for (int i = 0; i < h * w; ++i) acc += op[i];
      gL.b[oc] += acc;
    }
  });
  return gin;
}

}  // namespace esai
