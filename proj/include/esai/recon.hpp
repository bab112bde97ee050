#pragma once

#include <cmath>
#include <utility>

#include "esai/decoder.hpp"
#include "esai/event.hpp"
#include "esai/image.hpp"
#include "esai/refocus.hpp"
#include "esai/snn.hpp"

namespace esai {

/// Bins a refocused (subpixel) stream with nearest-pixel placement; events
/// landing outside the frame are dropped.
inline FrameStack stack_events(const SubpixelEventStream& stream, int n,
                               std::pair<int64_t, int64_t> window) {
  if (n < 1) throw InvalidArgument("stack_events: interval count must be >= 1");
  const auto [t0, t1] = window;
  if (t0 >= t1) throw InvalidArgument("stack_events: window must satisfy t0 < t1");
  FrameStack st(n, stream.height, stream.width);
  st.t_edges.resize(n + 1);
  const double span = static_cast<double>(t1 - t0);
  for (int k = 0; k <= n; ++k) st.t_edges[k] = t0 + span * k / n;
  for (const auto& e : stream.events) {
    if (e.t < t0 || e.t > t1) continue;
    const int x = static_cast<int>(std::lround(e.x));
    const int y = static_cast<int>(std::lround(e.y));
    if (x < 0 || x >= stream.width || y < 0 || y >= stream.height) continue;
    int64_t bin = ((e.t - t0) * n) / (t1 - t0);
    if (bin == n) bin = n - 1;
    st.at(static_cast<int>(bin), e.p > 0 ? 0 : 1, y, x) += 1.0;
  }
  return st;
}

/// Accumulation baseline: polarity-ignoring count image of the refocused
/// stream, min-max normalized to [0,1].
inline GrayImage reconstruct_acc(const SubpixelEventStream& refocused, int height, int width) {
  return normalize_minmax(accumulate(refocused, height, width, Voting::nearest));
}

/// Decoder input: encoder features, layer-1 skip and the time-mean raw frame.
inline Tensor3 assemble_decoder_input(const EncoderOutput& enc_out) {
  Tensor3 in(DecoderParams::kInChannels, enc_out.features.h, enc_out.features.w);
  double* dst = in.v.data();
  dst = std::copy(enc_out.features.v.begin(), enc_out.features.v.end(), dst);
  dst = std::copy(enc_out.skip1.v.begin(), enc_out.skip1.v.end(), dst);
  std::copy(enc_out.raw_mean.v.begin(), enc_out.raw_mean.v.end(), dst);
  return in;
}

/// Full pipeline: refocus the stream, stack it into n intervals over its own
/// span, encode with the spiking layers and decode to an image in (0,1).
inline GrayImage reconstruct_hybrid(const EventStream& stream, const WarpParam& warp,
                                    const EncoderParams& enc, const DecoderParams& dec, int n) {
  const SubpixelEventStream refocused = warp_events(stream, warp);
  const FrameStack stack = stack_events(refocused, n, {stream.t_min, stream.t_max});
  const EncoderOutput enc_out = snn_forward(stack, enc);
  return decoder_forward(assemble_decoder_input(enc_out), dec);
}

}  // namespace esai
