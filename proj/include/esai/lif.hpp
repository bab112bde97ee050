#pragma once

#include <cmath>
#include <string>

#include "esai/conv.hpp"
#include "esai/errors.hpp"

namespace esai {

/// Leaky integrate-and-fire neuron parameters. The resting potential is fixed
/// at zero; membrane update is u(t) = alpha * u(t-1) * (1 - o(t-1)) + c(t) and
/// a spike fires strictly above threshold, o(t) = [u(t) > u_th].
struct LifConfig {
  double alpha = 0.9;            // decay factor, in [0,1]
  double u_th = 1.0;             // spiking threshold, > 0
  double u_rest = 0.0;           // fixed 0
  double surrogate_width = 1.0;  // rectangular surrogate support, > 0

  void validate() const {
    if (!(alpha >= 0.0 && alpha <= 1.0))
      throw InvalidArgument("LifConfig: alpha must be in [0,1]");
    if (!(u_th > 0.0)) throw InvalidArgument("LifConfig: threshold must be positive");
    if (u_rest != 0.0) throw InvalidArgument("LifConfig: resting potential is fixed at 0");
    if (!(surrogate_width > 0.0))
      throw InvalidArgument("LifConfig: surrogate width must be positive");
  }
};

/// Membrane potentials and previous-step spikes of one spiking layer. The
/// stored potential is the pre-reset value; a fired spike zeroes the
/// carry-over at the next step through the (1 - o) factor.
struct LifLayerState {
  Tensor3 u;
  Tensor3 o_prev;

  LifLayerState() = default;
  LifLayerState(int c, int h, int w) : u(c, h, w), o_prev(c, h, w) {}
};

/// One membrane update. Returns the new state and the spike tensor.
inline std::pair<LifLayerState, Tensor3> lif_step(const LifLayerState& state,
                                                  const Tensor3& input_current,
                                                  const LifConfig& cfg) {
  cfg.validate();
  if (!state.u.same_shape(input_current) || !state.o_prev.same_shape(input_current))
    throw InvalidArgument("lif_step: state/current shape mismatch");
  LifLayerState next(input_current.c, input_current.h, input_current.w);
  Tensor3 spikes(input_current.c, input_current.h, input_current.w);
  for (size_t i = 0; i < input_current.v.size(); ++i) {
    const double u = cfg.alpha * state.u.v[i] * (1.0 - state.o_prev.v[i]) + input_current.v[i];
    next.u.v[i] = u;
    const double o = u > cfg.u_th ? 1.0 : 0.0;
    spikes.v[i] = o;
    next.o_prev.v[i] = o;
  }
  return {std::move(next), std::move(spikes)};
}

/// Rectangular surrogate derivative of the spike nonlinearity:
/// d o / d u ~= (1/w) * [ |u - u_th| < w/2 ]. Its integral over u is 1.
inline double surrogate_grad(double u, const LifConfig& cfg) {
  return std::fabs(u - cfg.u_th) < 0.5 * cfg.surrogate_width ? 1.0 / cfg.surrogate_width : 0.0;
}

/// Clipped-ramp antiderivative of the surrogate; stands in for the Heaviside
/// spike when a differentiable forward is needed.
inline double surrogate_ramp(double u, const LifConfig& cfg) {
  const double r = (u - cfg.u_th) / cfg.surrogate_width + 0.5;
  return r < 0.0 ? 0.0 : (r > 1.0 ? 1.0 : r);
}

}  // namespace esai
