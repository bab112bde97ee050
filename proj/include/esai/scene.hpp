#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "esai/config.hpp"
#include "esai/errors.hpp"
#include "esai/event.hpp"
#include "esai/image.hpp"
#include "esai/io.hpp"
#include "esai/rng.hpp"

namespace esai {

/// Planar occluder with a 1-D pattern along one axis (matching fronto-parallel
/// sweeps). Coordinates are world meters on the occluder plane.
struct OccluderSpec {
  enum class Kind { none, fence, cardboard, stripes };

  Kind kind = Kind::none;
  int orientation = 0;       // 0: pattern varies along x, 1: along y

  // fence / stripes: periodic slat-gap layout
  double period_m = 0.125;   // one slat + one gap
  double duty = 0.0;         // occupied fraction of a period
  double phase_m = 0.0;
  std::vector<double> slat_intensities;  // cycled over slats; may hold one value

  // cardboard: opaque sheet with see-through slits [lo, hi)
  std::vector<std::pair<double, double>> slits_m;
  double extent_m = 1.0;     // span used to derive r_o for cardboard

  // stripes: alternating bands painted on each slat
  int stripe_edges_per_slat = 0;   // interior intensity edges per slat
  double stripe_contrast = 0.0;    // log-intensity gap between bands

  double base_intensity = 0.55;

  /// Occluded-area ratio.
  double r_o() const {
    switch (kind) {
      case Kind::none:
        return 0.0;
      case Kind::fence:
      case Kind::stripes:
        return duty;
      case Kind::cardboard: {
        double open = 0.0;
        for (const auto& [lo, hi] : slits_m) open += hi - lo;
        return std::max(0.0, 1.0 - open / extent_m);
      }
    }
    return 0.0;
  }

  /// Occlusion-edge ratio: interior pattern edges per slat over the two slit
  /// edges every slat contributes.
  double r_t() const {
    return kind == Kind::stripes ? stripe_edges_per_slat / 2.0 : 0.0;
  }

  bool opaque(double u) const {
    switch (kind) {
      case Kind::none:
        return false;
      case Kind::fence:
      case Kind::stripes: {
        if (duty <= 0.0) return false;
        const double f = frac((u - phase_m) / period_m);
        return f < duty;
      }
      case Kind::cardboard: {
        for (const auto& [lo, hi] : slits_m)
          if (u >= lo && u < hi) return false;
        return true;
      }
    }
    return false;
  }

  /// Surface intensity; meaningful only where opaque(u).
  double intensity(double u) const {
    if (kind == Kind::cardboard || kind == Kind::none) return base_intensity;
    const double cycles = (u - phase_m) / period_m;
    const int64_t slat = static_cast<int64_t>(std::floor(cycles));
    double base = base_intensity;
    if (!slat_intensities.empty()) {
      const size_t n = slat_intensities.size();
      base = slat_intensities[static_cast<size_t>(((slat % static_cast<int64_t>(n)) +
                                                   static_cast<int64_t>(n)) %
                                                  static_cast<int64_t>(n))];
    }
    if (kind == Kind::stripes && stripe_edges_per_slat > 0) {
      const int bands = stripe_edges_per_slat + 1;
      const double within = frac(cycles) / duty;  // 0..1 across the slat
      int band = static_cast<int>(within * bands);
      band = std::min(band, bands - 1);
      const double sign = (band % 2 == 0) ? 0.5 : -0.5;
      return base * std::exp(sign * stripe_contrast);
    }
    return base;
  }

private:
  static double frac(double v) { return v - std::floor(v); }
};

/// Periodic slat pattern whose occupied fraction equals r_o. Slat intensities
/// are drawn uniformly from [0.45, 0.65] unless spread is zero.
inline OccluderSpec make_fence_occluder(double r_o, int slat_count, int orientation,
                                        double extent_m = 1.0, double intensity_spread = 0.0,
                                        uint64_t seed = 0) {
  if (r_o < 0.0 || r_o >= 1.0)
    throw InvalidArgument("make_fence_occluder: need 0 <= r_o < 1, got " + std::to_string(r_o));
  if (slat_count < 1) throw InvalidArgument("make_fence_occluder: slat_count must be >= 1");
  OccluderSpec occ;
  if (r_o == 0.0) {
    occ.kind = OccluderSpec::Kind::none;
    return occ;
  }
  occ.kind = OccluderSpec::Kind::fence;
  occ.orientation = orientation;
  occ.extent_m = extent_m;
  occ.period_m = extent_m / slat_count;
  occ.duty = r_o;
  // Center a gap at u=0 so the reference view keeps part of the target visible.
  occ.phase_m = occ.period_m * (1.0 - (1.0 - r_o) / 2.0);
  if (intensity_spread > 0.0) {
    Rng rng(mix_seed(seed, 0x0cc1));
    occ.slat_intensities.resize(slat_count);
    for (double& s : occ.slat_intensities)
      s = occ.base_intensity * std::exp(rng.uniform(-intensity_spread, intensity_spread));
  }
  return occ;
}

/// Fronto-parallel uniform camera motion. The camera center sits at
/// (vx, vy) * (t - t_ref) world meters, so the reference view is at the origin.
struct Trajectory {
  double vx = 0.0;           // m/s
  double vy = 0.0;
  int64_t t0_us = 0;
  int64_t t1_us = 0;
  int64_t t_ref_us = 0;
  double sample_rate = 10000.0;  // rendered positions per second

  double cam_x(double t_us) const { return vx * (t_us - t_ref_us) * 1e-6; }
  double cam_y(double t_us) const { return vy * (t_us - t_ref_us) * 1e-6; }
};

/// Synthetic scene: textured target plane behind a patterned occluder plane,
/// viewed by a pinhole camera.
struct SceneSpec {
  GrayImage target_texture;
  double depth_target_m = 0.6;
  double depth_occluder_m = 0.3;
  OccluderSpec occluder;
  double fx = 320.0, fy = 320.0;
  double ppx = 0.0, ppy = 0.0;   // principal point, pixels
  int height = 0, width = 0;
  double eta = 0.2;              // event threshold, log-intensity units
  double noise_rate = 0.0;       // noise events / pixel / second
  // Target-plane world window covered by the texture.
  double tex_x0_m = 0.0, tex_y0_m = 0.0;
  double tex_px_per_m_x = 1.0, tex_px_per_m_y = 1.0;

  static constexpr double kIntensityFloor = 1.0 / 255.0;  // applied before log

  double dir_x(int px) const { return (px - ppx) / fx; }
  double dir_y(int py) const { return (py - ppy) / fy; }

  double target_intensity(double cam_x, double cam_y, int px, int py) const {
    const double X = cam_x + depth_target_m * dir_x(px);
    const double Y = cam_y + depth_target_m * dir_y(py);
    return target_texture.sample_clamped((X - tex_x0_m) * tex_px_per_m_x,
                                         (Y - tex_y0_m) * tex_px_per_m_y);
  }

  /// Pattern coordinate on the occluder plane for a pixel ray.
  double occluder_coord(double cam_x, double cam_y, int px, int py) const {
    return occluder.orientation == 0 ? cam_x + depth_occluder_m * dir_x(px)
                                     : cam_y + depth_occluder_m * dir_y(py);
  }

  void validate() const {
    if (width <= 0 || height <= 0) throw InvalidArgument("scene: resolution must be positive");
    if (!(depth_occluder_m > 0.0) || !(depth_target_m > depth_occluder_m))
      throw InvalidArgument("scene: need 0 < occluder depth < target depth");
    if (!(eta > 0.0)) throw InvalidArgument("scene: event threshold must be positive");
    if (noise_rate < 0.0) throw InvalidArgument("scene: noise rate must be non-negative");
    if (target_texture.h < 1 || target_texture.w < 1)
      throw InvalidArgument("scene: missing target texture");
  }
};

/// Renders the view from one camera position: occluder intensity where a ray
/// hits an opaque region (mask 1), bilinear target sample elsewhere (mask 0).
/// Rays leaving the texture extent clamp to its border.
inline std::pair<GrayImage, GrayImage> render_view(const SceneSpec& scene, double cam_x,
                                                   double cam_y, bool with_occluder = true) {
  scene.validate();
  GrayImage img(scene.height, scene.width);
  GrayImage mask(scene.height, scene.width);
  for (int py = 0; py < scene.height; ++py) {
    for (int px = 0; px < scene.width; ++px) {
      const double u = scene.occluder_coord(cam_x, cam_y, px, py);
      if (with_occluder && scene.occluder.opaque(u)) {
        img.at(py, px) = scene.occluder.intensity(u);
        mask.at(py, px) = 1.0;
      } else {
        img.at(py, px) = scene.target_intensity(cam_x, cam_y, px, py);
      }
    }
  }
  return {std::move(img), std::move(mask)};
}

/// Value-noise texture: a coarse random grid bilinearly upsampled. Intensities
/// are kept strictly positive so logs stay finite.
inline GrayImage make_noise_texture(int h, int w, int cells, double lo, double hi,
                                    uint64_t seed) {
  if (cells < 2) cells = 2;
  GrayImage coarse(cells, cells);
  Rng rng(mix_seed(seed, 0x7e87));
  for (double& v : coarse.v) v = rng.uniform(lo, hi);
  GrayImage tex(h, w, 0.0, 0.0, 1.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      tex.at(y, x) = coarse.sample_clamped(x * (cells - 1.0) / std::max(1, w - 1),
                                           y * (cells - 1.0) / std::max(1, h - 1));
  return tex;
}

/// World-extent of the sweep at a given depth, per axis: [lo, hi].
inline std::pair<std::pair<double, double>, std::pair<double, double>> swept_window(
    const SceneSpec& scene, const Trajectory& traj, double depth) {
  const double cx0 = traj.cam_x(static_cast<double>(traj.t0_us));
  const double cx1 = traj.cam_x(static_cast<double>(traj.t1_us));
  const double cy0 = traj.cam_y(static_cast<double>(traj.t0_us));
  const double cy1 = traj.cam_y(static_cast<double>(traj.t1_us));
  const double x_lo = std::min(cx0, cx1) + depth * scene.dir_x(0);
  const double x_hi = std::max(cx0, cx1) + depth * scene.dir_x(scene.width - 1);
  const double y_lo = std::min(cy0, cy1) + depth * scene.dir_y(0);
  const double y_hi = std::max(cy0, cy1) + depth * scene.dir_y(scene.height - 1);
  return {{x_lo, x_hi}, {y_lo, y_hi}};
}

/// Stretches the texture so it exactly covers the world window swept at the
/// target depth.
inline void fit_texture_window(SceneSpec& scene, const Trajectory& traj) {
  const auto [xr, yr] = swept_window(scene, traj, scene.depth_target_m);
  scene.tex_x0_m = xr.first;
  scene.tex_y0_m = yr.first;
  const double dx = std::max(xr.second - xr.first, 1e-9);
  const double dy = std::max(yr.second - yr.first, 1e-9);
  scene.tex_px_per_m_x = (scene.target_texture.w - 1) / dx;
  scene.tex_px_per_m_y = (scene.target_texture.h - 1) / dy;
}

}  // namespace esai
