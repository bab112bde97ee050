#pragma once

#include <cmath>
#include <utility>

#include "esai/conv.hpp"
#include "esai/errors.hpp"
#include "esai/image.hpp"
#include "esai/rng.hpp"

namespace esai {

/// Full-resolution convolutional decoder: two 3x3 conv + rectifier stages and
/// a 3x3 conv with logistic squashing to (0,1). Reflection padding, biases
/// included. Input channels: 32 encoder features + 8 layer-1 skip + 2 raw.
struct DecoderParams {
  static constexpr int kInChannels = 42;
  ConvLayer c1{16, kInChannels, 3, true};
  ConvLayer c2{8, 16, 3, true};
  ConvLayer c3{1, 8, 3, true};

  void validate() const {
    if (c1.oc != 16 || c1.ic != kInChannels || c2.oc != 8 || c2.ic != 16 || c3.oc != 1 ||
        c3.ic != 8 || c1.k != 3 || c2.k != 3 || c3.k != 3 || !c1.has_bias() ||
        !c2.has_bias() || !c3.has_bias())
      throw InvalidArgument("DecoderParams: unexpected decoder geometry");
  }

  void init_he(Rng& rng) {
    c1.init_he(rng);
    c2.init_he(rng);
    c3.init_he(rng);
  }
};

/// Intermediate activations kept for the backward pass.
struct DecoderTrace {
  Tensor3 input;   // (42,h,w)
  Tensor3 a1, a2;  // post-rectifier activations
  GrayImage y;     // logistic output
};

inline GrayImage decoder_forward(const Tensor3& input, const DecoderParams& params,
                                 DecoderTrace* trace = nullptr) {
  params.validate();
  if (input.c != DecoderParams::kInChannels)
    throw InvalidArgument("decoder_forward: expected " +
                          std::to_string(DecoderParams::kInChannels) + " input channels, got " +
                          std::to_string(input.c));
  Tensor3 a1 = conv2d_reflect(input, params.c1);
  for (double& v : a1.v) v = v > 0.0 ? v : 0.0;
  Tensor3 a2 = conv2d_reflect(a1, params.c2);
  for (double& v : a2.v) v = v > 0.0 ? v : 0.0;
  Tensor3 z = conv2d_reflect(a2, params.c3);
  GrayImage y(input.h, input.w, 0.0, 0.0, 1.0);
  for (size_t i = 0; i < y.v.size(); ++i) y.v[i] = 1.0 / (1.0 + std::exp(-z.v[i]));
  if (trace) {
    trace->input = input;
    trace->a1 = std::move(a1);
    trace->a2 = std::move(a2);
    trace->y = y;
  }
  return y;
}

struct DecoderGrads {
  ConvLayer g1{16, DecoderParams::kInChannels, 3, true};
  ConvLayer g2{8, 16, 3, true};
  ConvLayer g3{1, 8, 3, true};
};

/// Backward pass; accumulates parameter gradients and returns the gradient
/// with respect to the decoder input.
inline Tensor3 decoder_backward(const DecoderTrace& tr, const DecoderParams& params,
                                const GrayImage& d_y, DecoderGrads& grads) {
  if (d_y.h != tr.y.h || d_y.w != tr.y.w)
    throw InvalidArgument("decoder_backward: upstream gradient shape mismatch");
  Tensor3 dz(1, d_y.h, d_y.w);
  for (size_t i = 0; i < dz.v.size(); ++i) {
    const double y = tr.y.v[i];
    dz.v[i] = d_y.v[i] * y * (1.0 - y);
  }
  Tensor3 da2 = conv2d_reflect_backward(tr.a2, dz, params.c3, grads.g3);
  for (size_t i = 0; i < da2.v.size(); ++i)
    if (tr.a2.v[i] <= 0.0) da2.v[i] = 0.0;
  Tensor3 da1 = conv2d_reflect_backward(tr.a1, da2, params.c2, grads.g2);
  for (size_t i = 0; i < da1.v.size(); ++i)
    if (tr.a1.v[i] <= 0.0) da1.v[i] = 0.0;
  return conv2d_reflect_backward(tr.input, da1, params.c1, grads.g1);
}

}  // namespace esai
