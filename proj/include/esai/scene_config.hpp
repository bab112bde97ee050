#pragma once

#include <string>
#include <utility>

#include "esai/config.hpp"
#include "esai/scene.hpp"

namespace esai {

/// Builds a scene and trajectory from a key=value config. Documented keys
/// (defaults in parentheses):
///   width, height          resolution (required)
///   fx, fy                 pixel focal lengths (320, fx)
///   ppx, ppy               principal point ((width-1)/2, (height-1)/2)
///   eta (0.2)              event threshold, log-intensity units
///   noise_rate (0)         noise events / pixel / second
///   depth (0.6)            target depth, m
///   depth_occ (0.3)        occluder depth, m
///   vx or v (0.177), vy (0)  camera speed, m/s
///   duration_s (0.7), sample_rate (10000), t_ref_frac (0.5)
///   seed (1)
///   texture (noise)        PGM path or "noise"
///   texture_cells (12), texture_lo (0.08), texture_hi (1.0), texture_size (128)
///   occluder (fence)       none | fence | cardboard | stripes
///   r_o (0.9), slat_count (8), orientation (0)
///   occ_intensity (0.55), slat_spread (0)
///   r_t (0), stripe_contrast (1.0)
///   slits                  cardboard openings "lo:hi;lo:hi" in meters
inline std::pair<SceneSpec, Trajectory> make_scene(const KeyValueFile& cfg) {
  SceneSpec scene;
  scene.width = static_cast<int>(cfg.get_int("width"));
  scene.height = static_cast<int>(cfg.get_int("height"));
  scene.fx = cfg.get_double_or("fx", 320.0);
  scene.fy = cfg.get_double_or("fy", scene.fx);
  scene.ppx = cfg.get_double_or("ppx", (scene.width - 1) / 2.0);
  scene.ppy = cfg.get_double_or("ppy", (scene.height - 1) / 2.0);
  scene.eta = cfg.get_double_or("eta", 0.2);
  scene.noise_rate = cfg.get_double_or("noise_rate", 0.0);
  scene.depth_target_m = cfg.get_double_or("depth", 0.6);
  scene.depth_occluder_m = cfg.get_double_or("depth_occ", 0.3);

  Trajectory traj;
  traj.vx = cfg.has("vx") ? cfg.get_double("vx") : cfg.get_double_or("v", 0.177);
  traj.vy = cfg.get_double_or("vy", 0.0);
  const double duration = cfg.get_double_or("duration_s", 0.7);
  if (!(duration > 0.0)) throw InvalidArgument("scene config: duration_s must be positive");
  traj.t0_us = 0;
  traj.t1_us = static_cast<int64_t>(llround(duration * 1e6));
  traj.t_ref_us =
      static_cast<int64_t>(llround(cfg.get_double_or("t_ref_frac", 0.5) * traj.t1_us));
  traj.sample_rate = cfg.get_double_or("sample_rate", 10000.0);

  const uint64_t seed = static_cast<uint64_t>(cfg.get_int_or("seed", 1));
  const std::string tex = cfg.get_or("texture", "noise");
  if (tex == "noise") {
    const int ts = static_cast<int>(cfg.get_int_or("texture_size", 128));
    scene.target_texture = make_noise_texture(
        ts, ts, static_cast<int>(cfg.get_int_or("texture_cells", 12)),
        cfg.get_double_or("texture_lo", 0.08), cfg.get_double_or("texture_hi", 1.0), seed);
  } else {
    scene.target_texture = read_pgm(tex);
  }
  fit_texture_window(scene, traj);

  const std::string occ = cfg.get_or("occluder", "fence");
  const auto [occ_x, occ_y] = swept_window(scene, traj, scene.depth_occluder_m);
  const int orientation = static_cast<int>(cfg.get_int_or("orientation", 0));
  const double extent =
      orientation == 0 ? occ_x.second - occ_x.first : occ_y.second - occ_y.first;
  if (occ == "none") {
    scene.occluder.kind = OccluderSpec::Kind::none;
  } else if (occ == "fence" || occ == "stripes") {
    scene.occluder = make_fence_occluder(
        cfg.get_double_or("r_o", 0.9), static_cast<int>(cfg.get_int_or("slat_count", 8)),
        orientation, extent, cfg.get_double_or("slat_spread", 0.0), seed);
    scene.occluder.base_intensity = cfg.get_double_or("occ_intensity", 0.55);
    // keep the pattern anchored to the swept window rather than the origin
    scene.occluder.phase_m += orientation == 0 ? occ_x.first : occ_y.first;
    if (occ == "stripes") {
      scene.occluder.kind = OccluderSpec::Kind::stripes;
      scene.occluder.stripe_edges_per_slat =
          static_cast<int>(llround(2.0 * cfg.get_double_or("r_t", 0.0)));
      scene.occluder.stripe_contrast = cfg.get_double_or("stripe_contrast", 1.0);
    }
  } else if (occ == "cardboard") {
    scene.occluder.kind = OccluderSpec::Kind::cardboard;
    scene.occluder.orientation = orientation;
    scene.occluder.base_intensity = cfg.get_double_or("occ_intensity", 0.55);
    scene.occluder.extent_m = extent;
    const std::string slits = cfg.get_or("slits", "");
    size_t pos = 0;
    while (pos < slits.size()) {
      size_t end = slits.find(';', pos);
      if (end == std::string::npos) end = slits.size();
      const std::string part = slits.substr(pos, end - pos);
      const size_t colon = part.find(':');
      if (colon == std::string::npos)
        throw DataError("scene config: slits must look like 'lo:hi;lo:hi'");
      scene.occluder.slits_m.emplace_back(std::stod(part.substr(0, colon)),
                                          std::stod(part.substr(colon + 1)));
      pos = end + 1;
    }
  } else {
    throw DataError("scene config: unknown occluder kind '" + occ + "'");
  }

  return {std::move(scene), traj};
}

}  // namespace esai
