#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "esai/errors.hpp"
#include "esai/event.hpp"
#include "esai/image.hpp"

namespace esai {

// ---------------------------------------------------------------------------
// little-endian packing helpers

namespace detail {

inline void put_u16(std::string& out, uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}
inline void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void put_u64(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void put_f32(std::string& out, float v) {
  uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}
inline void put_f64(std::string& out, double v) {
  uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(out, bits);
}

class ByteReader {
public:
  ByteReader(const std::string& buf, const std::string& path) : buf_(buf), path_(path) {}

  uint16_t u16() { return static_cast<uint16_t>(byte() | (byte() << 8)); }
  uint32_t u32() {
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(byte()) << (8 * i);
    return v;
  }
  uint64_t u64() {
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(byte()) << (8 * i);
    return v;
  }
  int8_t i8() { return static_cast<int8_t>(byte()); }
  float f32() {
    uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }
  double f64() {
    uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  void expect_magic(const char* magic) {
    for (int i = 0; i < 4; ++i) {
      if (pos_ >= buf_.size() || buf_[pos_] != magic[i])
        throw DataError(path_ + ": bad magic, expected '" + magic + "'");
      ++pos_;
    }
  }
  size_t pos() const { return pos_; }
  size_t remaining() const { return buf_.size() - pos_; }

private:
  uint8_t byte() {
    if (pos_ >= buf_.size())
      throw DataError(path_ + ": truncated at byte offset " + std::to_string(pos_));
    return static_cast<uint8_t>(buf_[pos_++]);
  }
  const std::string& buf_;
  std::string path_;
  size_t pos_ = 0;
};

inline std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& data) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot write " + path);
  f.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!f) throw DataError("write failed: " + path);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Event CSV: UTF-8, header "t,x,y,p", one event per line, t in microseconds.

inline void write_events_csv(const EventStream& s, const std::string& path) {
  std::string out = "t,x,y,p\n";
  char line[64];
  for (const Event& e : s.events) {
    std::snprintf(line, sizeof(line), "%lld,%d,%d,%d\n", static_cast<long long>(e.t), e.x,
                  e.y, e.p);
    out += line;
  }
  detail::write_file(path, out);
}

inline EventStream read_events_csv(const std::string& path, int width = 0, int height = 0) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open " + path);
  std::string line;
  if (!std::getline(f, line) || line != "t,x,y,p")
    throw DataError(path + ": line 1: expected header 't,x,y,p'");
  EventStream s;
  s.width = width;
  s.height = height;
  size_t lineno = 1;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    Event e;
    long long t;
    if (std::sscanf(line.c_str(), "%lld,%d,%d,%d", &t, &e.x, &e.y, &e.p) != 4)
      throw DataError(path + ": line " + std::to_string(lineno) + ": malformed record");
    e.t = t;
    if (e.p != 1 && e.p != -1)
      throw DataError(path + ": line " + std::to_string(lineno) + ": polarity must be +1 or -1");
    if (e.t < 0)
      throw DataError(path + ": line " + std::to_string(lineno) + ": negative timestamp");
    s.events.push_back(e);
  }
  if (width == 0 || height == 0) {
    for (const Event& e : s.events) {
      s.width = std::max(s.width, e.x + 1);
      s.height = std::max(s.height, e.y + 1);
    }
  }
  if (!s.events.empty()) {
    s.t_min = s.events.front().t;
    s.t_max = s.events.back().t;
  }
  validate_stream(s);
  return s;
}

// ---------------------------------------------------------------------------
// Event binary: 16-byte header (magic "ESAI", u16 version=1, u16 width,
// u16 height, u16 reserved, u32 count) then packed little-endian records of
// (u64 t_us, u16 x, u16 y, i8 p).

inline void write_events_bin(const EventStream& s, const std::string& path) {
  std::string out;
  out.reserve(16 + s.events.size() * 13);
  out += "ESAI";
  detail::put_u16(out, 1);
  detail::put_u16(out, static_cast<uint16_t>(s.width));
  detail::put_u16(out, static_cast<uint16_t>(s.height));
  detail::put_u16(out, 0);
  detail::put_u32(out, static_cast<uint32_t>(s.events.size()));
  for (const Event& e : s.events) {
    detail::put_u64(out, static_cast<uint64_t>(e.t));
    detail::put_u16(out, static_cast<uint16_t>(e.x));
    detail::put_u16(out, static_cast<uint16_t>(e.y));
    out.push_back(static_cast<char>(e.p));
  }
  detail::write_file(path, out);
}

inline EventStream read_events_bin(const std::string& path) {
  const std::string buf = detail::read_file(path);
  detail::ByteReader r(buf, path);
  r.expect_magic("ESAI");
  const uint16_t version = r.u16();
  if (version != 1) throw DataError(path + ": unsupported version " + std::to_string(version));
  EventStream s;
  s.width = r.u16();
  s.height = r.u16();
  r.u16();  // reserved
  const uint32_t count = r.u32();
  s.events.reserve(count);
  for (uint32_t i = 0; i < count; ++i) {
    Event e;
    e.t = static_cast<int64_t>(r.u64());
    e.x = r.u16();
    e.y = r.u16();
    e.p = r.i8();
    s.events.push_back(e);
  }
  if (!s.events.empty()) {
    s.t_min = s.events.front().t;
    s.t_max = s.events.back().t;
  }
  validate_stream(s);
  return s;
}

enum class EventFormat { csv, bin };

inline void write_events(const EventStream& s, const std::string& path, EventFormat fmt) {
  fmt == EventFormat::csv ? write_events_csv(s, path) : write_events_bin(s, path);
}

inline EventStream read_events(const std::string& path, EventFormat fmt) {
  return fmt == EventFormat::csv ? read_events_csv(path) : read_events_bin(path);
}

// ---------------------------------------------------------------------------
// 8-bit binary PGM (P5)

/// Writes an image expected in [0,1]; values are clamped and quantized to 255
/// levels.
inline void write_pgm(const GrayImage& img, const std::string& path) {
  std::string out = "P5\n" + std::to_string(img.w) + " " + std::to_string(img.h) + "\n255\n";
  out.reserve(out.size() + img.size());
  for (double v : img.v) {
    const double c = std::clamp(v, 0.0, 1.0);
    out.push_back(static_cast<char>(static_cast<int>(std::lround(c * 255.0))));
  }
  detail::write_file(path, out);
}

/// Min-max scales to [0,1] first; convenience for count/EPI images.
inline void write_pgm_minmax(const GrayImage& img, const std::string& path) {
  write_pgm(normalize_minmax(img), path);
}

/// Reads a P5 PGM into a [0,1] image (values divided by maxval).
inline GrayImage read_pgm(const std::string& path) {
  const std::string buf = detail::read_file(path);
  size_t pos = 0;
  auto token = [&]() -> std::string {
    while (pos < buf.size() && std::isspace(static_cast<unsigned char>(buf[pos]))) ++pos;
    if (pos < buf.size() && buf[pos] == '#') {
      while (pos < buf.size() && buf[pos] != '\n') ++pos;
      while (pos < buf.size() && std::isspace(static_cast<unsigned char>(buf[pos]))) ++pos;
    }
    size_t start = pos;
    while (pos < buf.size() && !std::isspace(static_cast<unsigned char>(buf[pos]))) ++pos;
    return buf.substr(start, pos - start);
  };
  if (token() != "P5") throw DataError(path + ": not a binary PGM (P5)");
  const int w = std::stoi(token());
  const int h = std::stoi(token());
  const int maxval = std::stoi(token());
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 255)
    throw DataError(path + ": unsupported PGM geometry");
  ++pos;  // single whitespace after maxval
  if (buf.size() - pos < static_cast<size_t>(w) * h)
    throw DataError(path + ": truncated pixel data");
  GrayImage img(h, w, 0.0, 0.0, 1.0);
  for (size_t i = 0; i < img.size(); ++i)
    img.v[i] = static_cast<double>(static_cast<uint8_t>(buf[pos + i])) / maxval;
  return img;
}

// ---------------------------------------------------------------------------
// Raw float matrix: u32 rows, u32 cols, then row-major f32, little-endian.

inline void write_f32_grid(const GrayImage& img, const std::string& path) {
  std::string out;
  out.reserve(8 + img.size() * 4);
  detail::put_u32(out, static_cast<uint32_t>(img.h));
  detail::put_u32(out, static_cast<uint32_t>(img.w));
  for (double v : img.v) detail::put_f32(out, static_cast<float>(v));
  detail::write_file(path, out);
}

inline GrayImage read_f32_grid(const std::string& path) {
  const std::string buf = detail::read_file(path);
  detail::ByteReader r(buf, path);
  const uint32_t rows = r.u32();
  const uint32_t cols = r.u32();
  GrayImage img(static_cast<int>(rows), static_cast<int>(cols));
  for (size_t i = 0; i < img.size(); ++i) img.v[i] = r.f32();
  return img;
}

}  // namespace esai
