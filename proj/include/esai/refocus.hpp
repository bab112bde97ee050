#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "esai/errors.hpp"
#include "esai/event.hpp"
#include "esai/image.hpp"
#include "esai/parallel.hpp"

namespace esai {

/// Coupled refocusing rate in pixels/second per axis, about a reference time.
/// Warping shifts each event by rate * (t - t_ref).
struct WarpParam {
  double px_per_s_x = 0.0;
  double px_per_s_y = 0.0;
  int64_t t_ref_us = 0;
};

/// rate = f * v / d per axis; the image of a target-plane point drifts at
/// exactly this speed during a fronto-parallel sweep.
inline WarpParam compute_psi(double fx, double fy, double vx, double vy, double depth_m,
                             int64_t t_ref_us = 0) {
  if (!(depth_m > 0.0)) throw InvalidArgument("compute_psi: depth must be positive");
  return {fx * vx / depth_m, fy * vy / depth_m, t_ref_us};
}

struct SubpixelEvent {
  int64_t t = 0;
  double x = 0.0;
  double y = 0.0;
  int p = 1;
};

/// Like EventStream but with real-valued, possibly out-of-frame coordinates.
struct SubpixelEventStream {
  std::vector<SubpixelEvent> events;
  int width = 0;
  int height = 0;
  int64_t t_min = 0;
  int64_t t_max = 0;

  size_t size() const { return events.size(); }
  bool empty() const { return events.empty(); }
};

inline SubpixelEventStream to_subpixel(const EventStream& s) {
  SubpixelEventStream out{{}, s.width, s.height, s.t_min, s.t_max};
  out.events.reserve(s.events.size());
  for (const Event& e : s.events)
    out.events.push_back({e.t, static_cast<double>(e.x), static_cast<double>(e.y), e.p});
  return out;
}

namespace detail {

inline SubpixelEvent warp_one(const SubpixelEvent& e, const WarpParam& w) {
  const double dt_s = (e.t - w.t_ref_us) * 1e-6;
  return {e.t, e.x + w.px_per_s_x * dt_s, e.y + w.px_per_s_y * dt_s, e.p};
}

}  // namespace detail

/// Uniform-motion refocusing: x_ref = x + rate * (t - t_ref). Timestamps and
/// polarities are untouched; coordinates are left unclipped.
inline SubpixelEventStream warp_events(const EventStream& s, const WarpParam& w) {
  SubpixelEventStream out{{}, s.width, s.height, s.t_min, s.t_max};
  out.events.resize(s.events.size());
  for (size_t i = 0; i < s.events.size(); ++i) {
    const Event& e = s.events[i];
    out.events[i] = detail::warp_one({e.t, static_cast<double>(e.x), static_cast<double>(e.y), e.p}, w);
  }
  return out;
}

inline SubpixelEventStream warp_events(const SubpixelEventStream& s, const WarpParam& w) {
  SubpixelEventStream out{{}, s.width, s.height, s.t_min, s.t_max};
  out.events.resize(s.events.size());
  for (size_t i = 0; i < s.events.size(); ++i) out.events[i] = detail::warp_one(s.events[i], w);
  return out;
}

/// Camera pose relative to the reference viewpoint.
struct CameraPose {
  std::array<double, 9> R{1, 0, 0, 0, 1, 0, 0, 0, 1};  // row-major rotation
  std::array<double, 3> T{0, 0, 0};                    // translation, meters
};

/// Pinhole intrinsics.
struct Intrinsics {
  double fx = 1.0, fy = 1.0, ppx = 0.0, ppy = 0.0;
};

/// Piecewise-linear pose track over time. Translations interpolate linearly;
/// the rotation of the nearer sample is used (the supported motion model is
/// translational, where R stays identity).
class PoseTrack {
public:
  PoseTrack(std::vector<int64_t> times, std::vector<CameraPose> poses)
      : times_(std::move(times)), poses_(std::move(poses)) {
    if (times_.size() != poses_.size() || times_.empty())
      throw InvalidArgument("PoseTrack: need matching, non-empty time/pose lists");
    for (size_t i = 1; i < times_.size(); ++i)
      if (times_[i] <= times_[i - 1])
        throw InvalidArgument("PoseTrack: times must be strictly increasing");
  }

  CameraPose at(int64_t t_us) const {
    if (t_us < times_.front() || t_us > times_.back())
      throw DataError("PoseTrack: no pose for t=" + std::to_string(t_us) +
                      " (track covers " + std::to_string(times_.front()) + ".." +
                      std::to_string(times_.back()) + ")");
    const auto it = std::upper_bound(times_.begin(), times_.end(), t_us);
    if (it == times_.begin()) return poses_.front();
    if (it == times_.end()) return poses_.back();
    const size_t hi = static_cast<size_t>(it - times_.begin());
    const size_t lo = hi - 1;
    const double f = static_cast<double>(t_us - times_[lo]) /
                     static_cast<double>(times_[hi] - times_[lo]);
    CameraPose p = (f < 0.5) ? poses_[lo] : poses_[hi];
    for (int i = 0; i < 3; ++i)
      p.T[i] = (1.0 - f) * poses_[lo].T[i] + f * poses_[hi].T[i];
    return p;
  }

private:
  std::vector<int64_t> times_;
  std::vector<CameraPose> poses_;
};

/// General planar refocusing: each event is pushed through the homography
/// x_ref ~ K R K^-1 x + K T / d at its own timestamp, then dehomogenized.
inline SubpixelEventStream warp_events_general(const EventStream& s, const PoseTrack& poses,
                                               const Intrinsics& K, double depth_m) {
  if (!(depth_m > 0.0)) throw InvalidArgument("warp_events_general: depth must be positive");
  SubpixelEventStream out{{}, s.width, s.height, s.t_min, s.t_max};
  out.events.resize(s.events.size());
  for (size_t i = 0; i < s.events.size(); ++i) {
    const Event& e = s.events[i];
    const CameraPose pose = poses.at(e.t);
    // normalized ray K^-1 x
    const double nx = (e.x - K.ppx) / K.fx;
    const double ny = (e.y - K.ppy) / K.fy;
    const std::array<double, 3> r = {
        pose.R[0] * nx + pose.R[1] * ny + pose.R[2],
        pose.R[3] * nx + pose.R[4] * ny + pose.R[5],
        pose.R[6] * nx + pose.R[7] * ny + pose.R[8],
    };
    // K r + K T / d, with K = [fx 0 ppx; 0 fy ppy; 0 0 1]
    const double hx = K.fx * r[0] + K.ppx * r[2] + (K.fx * pose.T[0] + K.ppx * pose.T[2]) / depth_m;
    const double hy = K.fy * r[1] + K.ppy * r[2] + (K.fy * pose.T[1] + K.ppy * pose.T[2]) / depth_m;
    const double hw = r[2] + pose.T[2] / depth_m;
    if (hw == 0.0) throw NumericError("warp_events_general: event projects to infinity");
    out.events[i] = {e.t, hx / hw, hy / hw, e.p};
  }
  return out;
}

enum class Voting { nearest, bilinear };

/// Polarity-ignoring count image. Nearest voting adds 1 to the rounded pixel;
/// bilinear voting splits 1 across the four neighbors (taps falling outside
/// the frame are dropped).
inline GrayImage accumulate(const SubpixelEventStream& s, int height, int width,
                            Voting voting = Voting::nearest) {
  GrayImage img(height, width, 0.0, 0.0, 0.0);
  if (voting == Voting::nearest) {
    for (const auto& e : s.events) {
      const int x = static_cast<int>(std::lround(e.x));
      const int y = static_cast<int>(std::lround(e.y));
      if (x < 0 || x >= width || y < 0 || y >= height) continue;
      img.at(y, x) += 1.0;
    }
  } else {
    for (const auto& e : s.events) {
      const double fx = std::floor(e.x);
      const double fy = std::floor(e.y);
      const int x0 = static_cast<int>(fx);
      const int y0 = static_cast<int>(fy);
      const double ax = e.x - fx;
      const double ay = e.y - fy;
      const double w00 = (1 - ax) * (1 - ay), w01 = ax * (1 - ay);
      const double w10 = (1 - ax) * ay, w11 = ax * ay;
      auto add = [&](int yy, int xx, double wgt) {
        if (wgt > 0.0 && xx >= 0 && xx < width && yy >= 0 && yy < height) img.at(yy, xx) += wgt;
      };
      add(y0, x0, w00);
      add(y0, x0 + 1, w01);
      add(y0 + 1, x0, w10);
      add(y0 + 1, x0 + 1, w11);
    }
  }
  return img;
}

inline GrayImage accumulate(const EventStream& s, int height, int width,
                            Voting voting = Voting::nearest) {
  return accumulate(to_subpixel(s), height, width, voting);
}

enum class FocusMetric { variance, density, combined };

/// Sharpness of a count image: population variance, the fraction of pixels
/// with count >= tau, or their product. Aligned events concentrate counts
/// (high variance); target-plane alignment also spreads them over textured
/// area (high density), which separates the two alignment peaks.
inline double focus_score(const GrayImage& counts, FocusMetric metric, double tau = 1.0) {
  if (counts.v.empty()) return 0.0;
  const double n = static_cast<double>(counts.v.size());
  switch (metric) {
    case FocusMetric::variance: {
      double sum = 0.0, sum2 = 0.0;
      for (double v : counts.v) {
        sum += v;
        sum2 += v * v;
      }
      const double mean = sum / n;
      return sum2 / n - mean * mean;
    }
    case FocusMetric::density: {
      size_t hit = 0;
      for (double v : counts.v)
        if (v >= tau) ++hit;
      return static_cast<double>(hit) / n;
    }
    case FocusMetric::combined:
      return focus_score(counts, FocusMetric::variance) *
             focus_score(counts, FocusMetric::density, tau);
  }
  return 0.0;
}

struct SearchConfig {
  double x_lo = 0.0, x_hi = 0.0;     // rate bounds per axis, px/s
  double y_lo = 0.0, y_hi = 0.0;     // equal bounds pin the axis
  int grid_points = 41;
  int refine_iters = 30;
  FocusMetric metric = FocusMetric::combined;
  Voting voting = Voting::bilinear;
};

namespace detail {

/// Warps, accumulates and scores one candidate rate.
inline double score_candidate(const EventStream& s, double rx, double ry, int64_t t_ref,
                              const SearchConfig& cfg) {
  const GrayImage counts =
      accumulate(warp_events(s, WarpParam{rx, ry, t_ref}), s.height, s.width, cfg.voting);
  return focus_score(counts, cfg.metric);
}

}  // namespace detail

/// Grid search over the warp rate followed by per-axis golden-section
/// refinement around the best grid cell. Deterministic; score ties go to the
/// candidate with smaller |rate|. t_ref is pinned to the stream-window
/// midpoint.
inline WarpParam auto_refocus(const EventStream& s, const SearchConfig& cfg) {
  if (s.empty()) throw NumericError("auto_refocus: empty stream");
  if (cfg.x_lo > cfg.x_hi || cfg.y_lo > cfg.y_hi || !std::isfinite(cfg.x_lo) ||
      !std::isfinite(cfg.x_hi) || !std::isfinite(cfg.y_lo) || !std::isfinite(cfg.y_hi))
    throw InvalidArgument("auto_refocus: malformed search bounds");
  if (cfg.grid_points < 1 || cfg.refine_iters < 0)
    throw InvalidArgument("auto_refocus: malformed search resolution");

  const int64_t t_ref = (s.t_min + s.t_max) / 2;

  auto axis_grid = [&](double lo, double hi) {
    std::vector<double> g;
    if (lo == hi) {
      g.push_back(lo);
    } else {
      const int n = cfg.grid_points;
      for (int i = 0; i < n; ++i) g.push_back(lo + (hi - lo) * i / (n - 1));
    }
    return g;
  };
  const std::vector<double> gx = axis_grid(cfg.x_lo, cfg.x_hi);
  const std::vector<double> gy = axis_grid(cfg.y_lo, cfg.y_hi);

  struct Cand {
    double rx, ry, score;
  };
  std::vector<Cand> cands;
  cands.reserve(gx.size() * gy.size());
  for (double ry : gy)
    for (double rx : gx) cands.push_back({rx, ry, 0.0});
  parallel_for(static_cast<int64_t>(cands.size()), [&](int64_t i) {
    cands[i].score = detail::score_candidate(s, cands[i].rx, cands[i].ry, t_ref, cfg);
  });

  auto better = [](double score, double rx, double ry, double best_score, double best_rx,
                   double best_ry) {
    if (score != best_score) return score > best_score;
    const double m = rx * rx + ry * ry, bm = best_rx * best_rx + best_ry * best_ry;
    if (m != bm) return m < bm;
    return false;
  };
  size_t best = 0;
  for (size_t i = 1; i < cands.size(); ++i)
    if (better(cands[i].score, cands[i].rx, cands[i].ry, cands[best].score, cands[best].rx,
               cands[best].ry))
      best = i;
  double bx = cands[best].rx, by = cands[best].ry;

  // Golden-section ascent on one axis within +-1 grid step of the incumbent.
  constexpr double kInvPhi = 0.6180339887498949;
  auto refine_axis = [&](double center, double step, bool is_x) {
    if (step <= 0.0) return center;
    double lo = center - step, hi = center + step;
    double c = hi - kInvPhi * (hi - lo);
    double d = lo + kInvPhi * (hi - lo);
    double fc = detail::score_candidate(s, is_x ? c : bx, is_x ? by : c, t_ref, cfg);
    double fd = detail::score_candidate(s, is_x ? d : bx, is_x ? by : d, t_ref, cfg);
    for (int it = 0; it < cfg.refine_iters; ++it) {
      const bool keep_low = fc > fd || (fc == fd && std::fabs(c) <= std::fabs(d));
      if (keep_low) {
        hi = d;
        d = c;
        fd = fc;
        c = hi - kInvPhi * (hi - lo);
        fc = detail::score_candidate(s, is_x ? c : bx, is_x ? by : c, t_ref, cfg);
      } else {
        lo = c;
        c = d;
        fc = fd;
        d = lo + kInvPhi * (hi - lo);
        fd = detail::score_candidate(s, is_x ? d : bx, is_x ? by : d, t_ref, cfg);
      }
    }
    const double mid = 0.5 * (lo + hi);
    const double f_mid = detail::score_candidate(s, is_x ? mid : bx, is_x ? by : mid, t_ref, cfg);
    const double f_center = detail::score_candidate(s, is_x ? center : bx, is_x ? by : center,
                                                    t_ref, cfg);
    // Never return a refinement that scores below the incumbent grid point.
    return better(f_mid, is_x ? mid : bx, is_x ? by : mid, f_center, is_x ? center : bx,
                  is_x ? by : center)
               ? mid
               : center;
  };

  if (gx.size() > 1) bx = refine_axis(bx, (cfg.x_hi - cfg.x_lo) / (cfg.grid_points - 1), true);
  if (gy.size() > 1) by = refine_axis(by, (cfg.y_hi - cfg.y_lo) / (cfg.grid_points - 1), false);

  return {bx, by, t_ref};
}

enum class EpiMode { merged, signed_sum };

/// Event-based epipolar-plane image for one pixel row: time (as the viewpoint
/// axis) binned vertically, column horizontally.
struct EpiImage {
  GrayImage data;  // (theta_bins, width)
  EpiMode mode = EpiMode::merged;
};

template <typename Stream>
inline EpiImage epi_slice(const Stream& s, int row, int theta_bins,
                          EpiMode mode = EpiMode::merged) {
  if (row < 0 || row >= s.height)
    throw InvalidArgument("epi_slice: row " + std::to_string(row) + " outside height " +
                          std::to_string(s.height));
  if (theta_bins < 1) throw InvalidArgument("epi_slice: theta_bins must be >= 1");
  EpiImage epi;
  epi.mode = mode;
  epi.data = GrayImage(theta_bins, s.width, 0.0, 0.0, 0.0);
  const int64_t t0 = s.t_min, t1 = s.t_max;
  for (const auto& e : s.events) {
    const int y = static_cast<int>(std::lround(static_cast<double>(e.y)));
    if (y != row) continue;
    const int x = static_cast<int>(std::lround(static_cast<double>(e.x)));
    if (x < 0 || x >= s.width) continue;
    int64_t bin = t1 > t0 ? ((e.t - t0) * theta_bins) / (t1 - t0) : 0;
    bin = std::clamp<int64_t>(bin, 0, theta_bins - 1);
    epi.data.at(static_cast<int>(bin), x) += (mode == EpiMode::merged) ? 1.0 : e.p;
  }
  return epi;
}

/// Average pixel shift error between two warp rates over a stream:
/// mean_i || (rate_est - rate_gt) * |t_i - t_ref| ||, in pixels.
inline double apse(const WarpParam& est, const WarpParam& gt, const EventStream& s) {
  if (s.empty()) throw NumericError("apse: empty stream");
  const double dx = est.px_per_s_x - gt.px_per_s_x;
  const double dy = est.px_per_s_y - gt.px_per_s_y;
  const double norm = std::sqrt(dx * dx + dy * dy);
  double sum = 0.0;
  for (const Event& e : s.events) sum += std::fabs((e.t - gt.t_ref_us) * 1e-6);
  return norm * sum / static_cast<double>(s.events.size());
}

}  // namespace esai
