#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "esai/config.hpp"
#include "esai/errors.hpp"
#include "esai/event.hpp"
#include "esai/io.hpp"

namespace esai {

/// On-disk sample bundle: camera speed, intrinsics, target depth, the event
/// stream, occluded viewfinder frames and one occlusion-free reference frame.
struct DatasetSample {
  double v = 0.0;        // horizontal camera speed, m/s
  double fx = 0.0;       // pixel focal length
  int height = 0;        // size = (H, W)
  int width = 0;
  double depth = 0.0;    // target depth, m
  EventStream events;
  std::vector<GrayImage> occ_aps;
  std::vector<int64_t> occ_aps_ts;
  GrayImage occ_free_aps;
  int64_t occ_free_aps_ts = 0;
  // Offset subtracted from all timestamps on load so the sample starts at 0.
  int64_t t_offset_us = 0;
};

namespace detail {

inline std::vector<int64_t> read_ts_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open " + path);
  std::vector<int64_t> ts;
  long long v;
  while (f >> v) ts.push_back(v);
  return ts;
}

inline void write_ts_file(const std::vector<int64_t>& ts, const std::string& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw DataError("cannot write " + path);
  for (int64_t v : ts) f << v << "\n";
}

inline std::string frame_name(int i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%04d.pgm", i);
  return buf;
}

}  // namespace detail

/// Validates that frame timestamps sit inside the event span, with one frame
/// period of slack at either end.
inline void validate_sample(const DatasetSample& s) {
  if (s.occ_free_aps.h != s.height || s.occ_free_aps.w != s.width)
    throw DataError("occ_free_aps size mismatch: got " + std::to_string(s.occ_free_aps.h) +
                    "x" + std::to_string(s.occ_free_aps.w) + ", expected " +
                    std::to_string(s.height) + "x" + std::to_string(s.width));
  for (size_t i = 0; i < s.occ_aps.size(); ++i)
    if (s.occ_aps[i].h != s.height || s.occ_aps[i].w != s.width)
      throw DataError("occ_aps frame " + std::to_string(i) + " size mismatch");
  if (s.occ_aps.size() != s.occ_aps_ts.size())
    throw DataError("occ_aps frame/timestamp count mismatch");
  if (!s.events.empty() && !s.occ_aps_ts.empty()) {
    int64_t period = 33334;
    if (s.occ_aps_ts.size() >= 2)
      period = (s.occ_aps_ts.back() - s.occ_aps_ts.front()) /
               static_cast<int64_t>(s.occ_aps_ts.size() - 1);
    for (size_t i = 0; i < s.occ_aps_ts.size(); ++i) {
      const int64_t t = s.occ_aps_ts[i];
      if (t < s.events.t_min - period || t > s.events.t_max + period)
        throw DataError("occ_aps timestamp " + std::to_string(i) + " outside event span");
    }
  }
}

inline void save_sample(const DatasetSample& s, const std::string& dir) {
  namespace fs = std::filesystem;
  validate_sample(s);
  fs::create_directories(fs::path(dir) / "occ_aps");
  KeyValueFile meta;
  meta.set_double("v", s.v);
  meta.set_double("fx", s.fx);
  meta.set(std::string("size"), std::to_string(s.height) + "," + std::to_string(s.width));
  meta.set_double("depth", s.depth);
  meta.save((fs::path(dir) / "meta.txt").string());
  write_events_bin(s.events, (fs::path(dir) / "events.bin").string());
  for (size_t i = 0; i < s.occ_aps.size(); ++i)
    write_pgm(s.occ_aps[i], (fs::path(dir) / "occ_aps" / detail::frame_name(static_cast<int>(i))).string());
  detail::write_ts_file(s.occ_aps_ts, (fs::path(dir) / "occ_aps_ts.txt").string());
  write_pgm(s.occ_free_aps, (fs::path(dir) / "occ_free_aps.pgm").string());
  detail::write_ts_file({s.occ_free_aps_ts}, (fs::path(dir) / "occ_free_aps_ts.txt").string());
}

inline DatasetSample load_sample(const std::string& dir) {
  namespace fs = std::filesystem;
  const fs::path root(dir);
  if (!fs::exists(root / "meta.txt")) throw DataError(dir + ": missing key: meta.txt");
  KeyValueFile meta = KeyValueFile::load((root / "meta.txt").string());
  DatasetSample s;
  s.v = meta.get_double("v");
  s.fx = meta.get_double("fx");
  const auto [h, w] = parse_pair(meta.get("size"), dir + ": size");
  s.height = static_cast<int>(h);
  s.width = static_cast<int>(w);
  s.depth = meta.get_double("depth");

  if (!fs::exists(root / "events.bin")) throw DataError(dir + ": missing key: events");
  s.events = read_events_bin((root / "events.bin").string());
  if (s.events.width != s.width || s.events.height != s.height)
    throw DataError(dir + ": events.bin resolution disagrees with meta size");

  if (!fs::exists(root / "occ_aps_ts.txt")) throw DataError(dir + ": missing key: occ_aps_ts");
  s.occ_aps_ts = detail::read_ts_file((root / "occ_aps_ts.txt").string());
  for (size_t i = 0; i < s.occ_aps_ts.size(); ++i) {
    const fs::path p = root / "occ_aps" / detail::frame_name(static_cast<int>(i));
    if (!fs::exists(p)) throw DataError(dir + ": missing key: occ_aps[" + std::to_string(i) + "]");
    s.occ_aps.push_back(read_pgm(p.string()));
  }

  if (!fs::exists(root / "occ_free_aps.pgm"))
    throw DataError(dir + ": missing key: occ_free_aps");
  s.occ_free_aps = read_pgm((root / "occ_free_aps.pgm").string());
  if (!fs::exists(root / "occ_free_aps_ts.txt"))
    throw DataError(dir + ": missing key: occ_free_aps_ts");
  const auto free_ts = detail::read_ts_file((root / "occ_free_aps_ts.txt").string());
  if (free_ts.size() != 1) throw DataError(dir + ": occ_free_aps_ts.txt must hold one timestamp");
  s.occ_free_aps_ts = free_ts[0];

  // Re-zero the sample time axis. DAVIS recordings carry absolute clocks; the
  // offset is the earliest timestamp across events and frames so that samples
  // already starting at zero pass through unchanged.
  int64_t off = s.events.empty() ? s.occ_free_aps_ts : s.events.t_min;
  for (int64_t t : s.occ_aps_ts) off = std::min(off, t);
  off = std::min(off, s.occ_free_aps_ts);
  if (off != 0) {
    for (Event& e : s.events.events) e.t -= off;
    s.events.t_min -= off;
    s.events.t_max -= off;
    for (int64_t& t : s.occ_aps_ts) t -= off;
    s.occ_free_aps_ts -= off;
  }
  s.t_offset_us = off;

  validate_sample(s);
  return s;
}

}  // namespace esai
