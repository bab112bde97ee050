#pragma once

#include <utility>
#include <vector>

#include "esai/conv.hpp"
#include "esai/errors.hpp"
#include "esai/event.hpp"
#include "esai/lif.hpp"
#include "esai/rng.hpp"

namespace esai {

/// Three spiking convolution layers. Layer 1 receives the raw two-channel
/// event frame as input current; layer 3 sees the per-step spike outputs of
/// layers 1 and 2 concatenated (channels [0,8) from layer 1, [8,24) from
/// layer 2). All layers zero-pad to preserve H x W and have no bias.
struct EncoderParams {
  ConvLayer l1{8, 2, 1, false};
  ConvLayer l2{16, 8, 3, false};
  ConvLayer l3{32, 24, 7, false};
  LifConfig lif1, lif2, lif3;

  void validate() const {
    if (l1.oc != 8 || l1.ic != 2 || l1.k != 1 || l1.has_bias() || l2.oc != 16 || l2.ic != 8 ||
        l2.k != 3 || l2.has_bias() || l3.oc != 32 || l3.ic != 24 || l3.k != 7 || l3.has_bias())
      throw InvalidArgument("EncoderParams: unexpected spiking layer geometry");
    lif1.validate();
    lif2.validate();
    lif3.validate();
  }

  void init_he(Rng& rng) {
    l1.init_he(rng);
    l2.init_he(rng);
    l3.init_he(rng);
  }
};

enum class SpikeMode {
  binary,   // Heaviside spikes, production path
  relaxed,  // clipped-ramp spikes; differentiable stand-in for gradient checks
};

/// Everything the backward pass needs: per-step inputs, pre-reset membrane
/// potentials and spike outputs of each layer.
struct SnnTrace {
  int n = 0, h = 0, w = 0;
  SpikeMode mode = SpikeMode::binary;
  std::vector<Tensor3> x;                 // (2,h,w) per step
  std::vector<Tensor3> u1, o1, u2, o2, u3, o3;
};

struct EncoderOutput {
  Tensor3 features;  // (32,h,w); time-mean of layer-3 spikes, entries in {0, 1/N, .., 1}
  Tensor3 skip1;     // (8,h,w); time-mean of layer-1 spikes
  Tensor3 raw_mean;  // (2,h,w); time-mean of the input frames
  SnnTrace trace;
};

namespace detail {

inline void lif_update(const Tensor3& current, const Tensor3& u_prev, const Tensor3& o_prev,
                       const LifConfig& cfg, SpikeMode mode, Tensor3& u_out, Tensor3& o_out) {
  for (size_t i = 0; i < current.v.size(); ++i) {
    const double u = cfg.alpha * u_prev.v[i] * (1.0 - o_prev.v[i]) + current.v[i];
    u_out.v[i] = u;
    o_out.v[i] = mode == SpikeMode::binary ? (u > cfg.u_th ? 1.0 : 0.0) : surrogate_ramp(u, cfg);
  }
}

inline Tensor3 concat_spikes(const Tensor3& a, const Tensor3& b) {
  Tensor3 z(a.c + b.c, a.h, a.w);
  std::copy(a.v.begin(), a.v.end(), z.v.begin());
  std::copy(b.v.begin(), b.v.end(), z.v.begin() + static_cast<int64_t>(a.v.size()));
  return z;
}

inline bool is_binary(const Tensor3& t) {
  for (double v : t.v)
    if (v != 0.0 && v != 1.0) return false;
  return true;
}

}  // namespace detail

/// Runs the event-frame stack through the spiking layers over t = 1..N and
/// time-averages the spike tensors.
inline EncoderOutput snn_forward(const FrameStack& stack, const EncoderParams& params,
                                 SpikeMode mode = SpikeMode::binary) {
  params.validate();
  if (stack.n < 1) throw InvalidArgument("snn_forward: stack must hold at least one interval");
  const int h = stack.h, w = stack.w;

  EncoderOutput out;
  out.features = Tensor3(32, h, w);
  out.skip1 = Tensor3(8, h, w);
  out.raw_mean = Tensor3(2, h, w);
  SnnTrace& tr = out.trace;
  tr.n = stack.n;
  tr.h = h;
  tr.w = w;
  tr.mode = mode;

  Tensor3 u1(8, h, w), o1(8, h, w), u2(16, h, w), o2(16, h, w), u3(32, h, w), o3(32, h, w);

  for (int t = 0; t < stack.n; ++t) {
    Tensor3 x(2, h, w);
    std::copy(stack.frame(t, 0), stack.frame(t, 0) + 2 * h * w, x.v.begin());

    const Tensor3 c1 = conv2d_zero(x, params.l1);
    Tensor3 u1n(8, h, w), o1n(8, h, w);
    detail::lif_update(c1, u1, o1, params.lif1, mode, u1n, o1n);

    const bool sparse = mode == SpikeMode::binary;
    const Tensor3 c2 = sparse ? conv2d_zero_spikes(o1n, active_sites(o1n), params.l2)
                              : conv2d_zero(o1n, params.l2);
    Tensor3 u2n(16, h, w), o2n(16, h, w);
    detail::lif_update(c2, u2, o2, params.lif2, mode, u2n, o2n);

    const Tensor3 z = detail::concat_spikes(o1n, o2n);
    const Tensor3 c3 =
        sparse ? conv2d_zero_spikes(z, active_sites(z), params.l3) : conv2d_zero(z, params.l3);
    Tensor3 u3n(32, h, w), o3n(32, h, w);
    detail::lif_update(c3, u3, o3, params.lif3, mode, u3n, o3n);

    for (size_t i = 0; i < out.features.v.size(); ++i) out.features.v[i] += o3n.v[i];
    for (size_t i = 0; i < out.skip1.v.size(); ++i) out.skip1.v[i] += o1n.v[i];
    for (size_t i = 0; i < out.raw_mean.v.size(); ++i) out.raw_mean.v[i] += x.v[i];

    tr.x.push_back(std::move(x));
    tr.u1.push_back(u1n);
    tr.o1.push_back(o1n);
    tr.u2.push_back(u2n);
    tr.o2.push_back(o2n);
    tr.u3.push_back(u3n);
    tr.o3.push_back(o3n);
    u1 = std::move(u1n);
    o1 = std::move(o1n);
    u2 = std::move(u2n);
    o2 = std::move(o2n);
    u3 = std::move(u3n);
    o3 = std::move(o3n);
  }

  const double inv_n = 1.0 / stack.n;
  for (double& v : out.features.v) v *= inv_n;
  for (double& v : out.skip1.v) v *= inv_n;
  for (double& v : out.raw_mean.v) v *= inv_n;
  return out;
}

struct EncoderGrads {
  ConvLayer g1{8, 2, 1, false};
  ConvLayer g2{16, 8, 3, false};
  ConvLayer g3{32, 24, 7, false};
};

/// Backpropagation through time over the trace. The spike nonlinearity is
/// differentiated with the rectangular surrogate; the reset factor
/// (1 - o(t-1)) enters the recurrence as a constant gate.
inline EncoderGrads snn_backward(const SnnTrace& tr, const EncoderParams& params,
                                 const Tensor3& d_features, const Tensor3& d_skip1) {
  params.validate();
  if (tr.n == 0) throw InvalidArgument("snn_backward: empty trace");
  const int h = tr.h, w = tr.w;
  if (d_features.c != 32 || d_features.h != h || d_features.w != w || d_skip1.c != 8 ||
      d_skip1.h != h || d_skip1.w != w)
    throw InvalidArgument("snn_backward: upstream gradient shape mismatch");

  EncoderGrads g;
  const double inv_n = 1.0 / tr.n;
  Tensor3 du1_next(8, h, w), du2_next(16, h, w), du3_next(32, h, w);

  for (int t = tr.n - 1; t >= 0; --t) {
    const bool sparse = tr.mode == SpikeMode::binary;

    Tensor3 du3(32, h, w);
    for (size_t i = 0; i < du3.v.size(); ++i)
      du3.v[i] = d_features.v[i] * inv_n * surrogate_grad(tr.u3[t].v[i], params.lif3) +
                 params.lif3.alpha * (1.0 - tr.o3[t].v[i]) * du3_next.v[i];

    const Tensor3 z = detail::concat_spikes(tr.o1[t], tr.o2[t]);
    if (sparse)
      conv2d_zero_grad_params_spikes(z, active_sites(z), du3, params.l3, g.g3);
    else
      conv2d_zero_grad_params(z, du3, params.l3, g.g3);
    const Tensor3 dz = conv2d_zero_grad_input(du3, params.l3);

    Tensor3 du2(16, h, w);
    const double* dz2 = dz.plane(8);
    for (size_t i = 0; i < du2.v.size(); ++i)
      du2.v[i] = dz2[i] * surrogate_grad(tr.u2[t].v[i], params.lif2) +
                 params.lif2.alpha * (1.0 - tr.o2[t].v[i]) * du2_next.v[i];

    if (sparse)
      conv2d_zero_grad_params_spikes(tr.o1[t], active_sites(tr.o1[t]), du2, params.l2, g.g2);
    else
      conv2d_zero_grad_params(tr.o1[t], du2, params.l2, g.g2);
    const Tensor3 do1_conv = conv2d_zero_grad_input(du2, params.l2);

    Tensor3 du1(8, h, w);
    const double* dz1 = dz.plane(0);
    for (size_t i = 0; i < du1.v.size(); ++i) {
      const double do1 = d_skip1.v[i] * inv_n + dz1[i] + do1_conv.v[i];
      du1.v[i] = do1 * surrogate_grad(tr.u1[t].v[i], params.lif1) +
                 params.lif1.alpha * (1.0 - tr.o1[t].v[i]) * du1_next.v[i];
    }
    conv2d_zero_grad_params(tr.x[t], du1, params.l1, g.g1);

    du1_next = std::move(du1);
    du2_next = std::move(du2);
    du3_next = std::move(du3);
  }
  return g;
}

}  // namespace esai
