#pragma once

#include <string>

#include "esai/decoder.hpp"
#include "esai/io.hpp"
#include "esai/snn.hpp"

namespace esai {

// Parameter container, little-endian:
//   magic "ESNN", u16 version=1, u16 section_count=2
//   section 0 (encoder): u8 layer_count, then per layer
//     u16 oc, u16 ic, u16 k, u8 has_bias,
//     f32 alpha, f32 u_th, f32 surrogate_width,
//     f32 weights (oc*ic*k*k) [, f32 bias (oc)]
//   section 1 (decoder): u8 layer_count, then per layer
//     u16 oc, u16 ic, u16 k, u8 has_bias, f32 weights [, f32 bias]

namespace detail {

inline void put_layer_shape(std::string& out, const ConvLayer& L) {
  put_u16(out, static_cast<uint16_t>(L.oc));
  put_u16(out, static_cast<uint16_t>(L.ic));
  put_u16(out, static_cast<uint16_t>(L.k));
  out.push_back(L.has_bias() ? 1 : 0);
}

inline void put_layer_weights(std::string& out, const ConvLayer& L) {
  for (double v : L.w) put_f32(out, static_cast<float>(v));
  for (double v : L.b) put_f32(out, static_cast<float>(v));
}

}  // namespace detail

inline void save_checkpoint(const EncoderParams& enc, const DecoderParams& dec,
                            const std::string& path) {
  std::string out = "ESNN";
  detail::put_u16(out, 1);
  detail::put_u16(out, 2);

  out.push_back(3);
  for (const ConvLayer* L : {&enc.l1, &enc.l2, &enc.l3}) detail::put_layer_shape(out, *L);
  for (const LifConfig* c : {&enc.lif1, &enc.lif2, &enc.lif3}) {
    detail::put_f32(out, static_cast<float>(c->alpha));
    detail::put_f32(out, static_cast<float>(c->u_th));
    detail::put_f32(out, static_cast<float>(c->surrogate_width));
  }
  for (const ConvLayer* L : {&enc.l1, &enc.l2, &enc.l3}) detail::put_layer_weights(out, *L);

  out.push_back(3);
  for (const ConvLayer* L : {&dec.c1, &dec.c2, &dec.c3}) detail::put_layer_shape(out, *L);
  for (const ConvLayer* L : {&dec.c1, &dec.c2, &dec.c3}) detail::put_layer_weights(out, *L);

  detail::write_file(path, out);
}

inline std::pair<EncoderParams, DecoderParams> load_checkpoint(const std::string& path) {
  const std::string buf = detail::read_file(path);
  detail::ByteReader r(buf, path);
  r.expect_magic("ESNN");
  if (r.u16() != 1) throw DataError(path + ": unsupported checkpoint version");
  if (r.u16() != 2) throw DataError(path + ": expected encoder and decoder sections");

  EncoderParams enc;
  DecoderParams dec;
  if (r.i8() != 3) throw DataError(path + ": encoder section must hold 3 layers");
  {
    const int oc0 = r.u16(), ic0 = r.u16(), k0 = r.u16();
    const bool b0 = r.i8() != 0;
    const int oc1 = r.u16(), ic1 = r.u16(), k1 = r.u16();
    const bool b1 = r.i8() != 0;
    const int oc2 = r.u16(), ic2 = r.u16(), k2 = r.u16();
    const bool b2 = r.i8() != 0;
    if (oc0 != 8 || ic0 != 2 || k0 != 1 || b0 || oc1 != 16 || ic1 != 8 || k1 != 3 || b1 ||
        oc2 != 32 || ic2 != 24 || k2 != 7 || b2)
      throw DataError(path + ": encoder layer shapes do not match this build");
  }
  for (LifConfig* c : {&enc.lif1, &enc.lif2, &enc.lif3}) {
    c->alpha = r.f32();
    c->u_th = r.f32();
    c->surrogate_width = r.f32();
  }
  for (ConvLayer* L : {&enc.l1, &enc.l2, &enc.l3}) {
    for (double& v : L->w) v = r.f32();
  }

  if (r.i8() != 3) throw DataError(path + ": decoder section must hold 3 layers");
  for (ConvLayer* L : {&dec.c1, &dec.c2, &dec.c3}) {
    const int oc = r.u16(), ic = r.u16(), k = r.u16();
    const bool bias = r.i8() != 0;
    if (oc != L->oc || ic != L->ic || k != L->k || !bias)
      throw DataError(path + ": decoder layer shapes do not match this build");
  }
  for (ConvLayer* L : {&dec.c1, &dec.c2, &dec.c3}) {
    for (double& v : L->w) v = r.f32();
    for (double& v : L->b) v = r.f32();
  }
  enc.validate();
  dec.validate();
  return {enc, dec};
}

}  // namespace esai
