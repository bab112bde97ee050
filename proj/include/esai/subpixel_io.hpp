#pragma once

#include <string>

#include "esai/io.hpp"
#include "esai/refocus.hpp"

namespace esai {

// Refocused (subpixel) stream container: 16-byte header (magic "ESAF",
// u16 version=1, u16 width, u16 height, u16 reserved, u32 count) then packed
// little-endian records of (u64 t_us, f64 x, f64 y, i8 p). Width/height name
// the nominal frame; coordinates may fall outside it.

inline void write_subpixel_bin(const SubpixelEventStream& s, const std::string& path) {
  std::string out;
  out.reserve(16 + s.events.size() * 25);
  out += "ESAF";
  detail::put_u16(out, 1);
  detail::put_u16(out, static_cast<uint16_t>(s.width));
  detail::put_u16(out, static_cast<uint16_t>(s.height));
  detail::put_u16(out, 0);
  detail::put_u32(out, static_cast<uint32_t>(s.events.size()));
  for (const auto& e : s.events) {
    detail::put_u64(out, static_cast<uint64_t>(e.t));
    detail::put_f64(out, e.x);
    detail::put_f64(out, e.y);
    out.push_back(static_cast<char>(e.p));
  }
  detail::write_file(path, out);
}

inline SubpixelEventStream read_subpixel_bin(const std::string& path) {
  const std::string buf = detail::read_file(path);
  detail::ByteReader r(buf, path);
  r.expect_magic("ESAF");
  if (r.u16() != 1) throw DataError(path + ": unsupported version");
  SubpixelEventStream s;
  s.width = r.u16();
  s.height = r.u16();
  r.u16();
  const uint32_t count = r.u32();
  s.events.reserve(count);
  for (uint32_t i = 0; i < count; ++i) {
    SubpixelEvent e;
    e.t = static_cast<int64_t>(r.u64());
    e.x = r.f64();
    e.y = r.f64();
    e.p = r.i8();
    if (e.p != 1 && e.p != -1)
      throw DataError(path + ": event " + std::to_string(i) + ": polarity must be +1 or -1");
    s.events.push_back(e);
  }
  if (!s.events.empty()) {
    s.t_min = s.events.front().t;
    s.t_max = s.events.back().t;
  }
  return s;
}

/// Reads either container by magic: integer streams are promoted to subpixel.
inline SubpixelEventStream read_any_events(const std::string& path) {
  const std::string head = detail::read_file(path).substr(0, 4);
  if (head == "ESAF") return read_subpixel_bin(path);
  if (head == "ESAI") return to_subpixel(read_events_bin(path));
  throw DataError(path + ": unknown event container (expected ESAI or ESAF magic)");
}

}  // namespace esai
