#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "esai/errors.hpp"
#include "esai/event.hpp"
#include "esai/parallel.hpp"
#include "esai/rng.hpp"
#include "esai/sample.hpp"
#include "esai/scene.hpp"

namespace esai {

namespace detail {

struct RawEvent {
  int64_t t;
  int x, y;
  int8_t p;
  EventCategory cat;
};

/// Per-pixel state of the thresholded log-intensity signal.
struct PixelSim {
  double ref;      // log level at the last emitted event
  bool have_ref = false;
};

inline double log_intensity(double v) {
  return std::log(std::max(v, SceneSpec::kIntensityFloor));
}

}  // namespace detail

/// Simulates the event stream of a camera sweeping the scene, with per-event
/// ground-truth categories, and packages the matching dataset sample.
///
/// Per pixel the log-intensity signal is sampled along the trajectory and
/// linearly interpolated between samples; an event fires every time the signal
/// departs one threshold step further from the level of the previous event
/// (reference level walks in eta increments). Categories compare the occlusion
/// mask at the enclosing segment's endpoints: 0->0 target edges (AA), 1->1
/// occluder edges (OO), mask change (OA). Poisson noise is added per pixel
/// with uniform random polarity.
inline std::pair<LabeledEventStream, DatasetSample> simulate_events(const SceneSpec& scene,
                                                                    const Trajectory& traj,
                                                                    uint64_t seed) {
  scene.validate();
  if (traj.t0_us >= traj.t1_us)
    throw InvalidArgument("simulate_events: trajectory duration must be positive");
  if (traj.t_ref_us < traj.t0_us || traj.t_ref_us > traj.t1_us)
    throw InvalidArgument("simulate_events: t_ref must lie within the trajectory span");
  if (!(traj.sample_rate > 0.0))
    throw InvalidArgument("simulate_events: sample_rate must be positive");

  const double span_us = static_cast<double>(traj.t1_us - traj.t0_us);
  const int64_t steps = std::max<int64_t>(1, llround(std::ceil(span_us * 1e-6 * traj.sample_rate)));
  const int W = scene.width, H = scene.height;
  const int64_t n_px = static_cast<int64_t>(W) * H;

  // Event bursts at mask transitions are genuine steps of the signal and are
  // exempt from the sampling check; only mask-stable unoccluded segments,
  // whose signal is continuous, are tested against the 4*eta bound.
  std::vector<std::vector<detail::RawEvent>> per_pixel(n_px);
  std::vector<double> worst_step(n_px, 0.0);

  parallel_for(n_px, [&](int64_t idx) {
    const int px = static_cast<int>(idx % W);
    const int py = static_cast<int>(idx / W);
    auto& out = per_pixel[idx];

    auto eval = [&](double t_us, double& log_i, bool& masked) {
      const double cx = traj.cam_x(t_us);
      const double cy = traj.cam_y(t_us);
      const double u = scene.occluder_coord(cx, cy, px, py);
      if (scene.occluder.opaque(u)) {
        masked = true;
        log_i = detail::log_intensity(scene.occluder.intensity(u));
      } else {
        masked = false;
        log_i = detail::log_intensity(scene.target_intensity(cx, cy, px, py));
      }
    };

    double t_a = static_cast<double>(traj.t0_us);
    double l_a;
    bool m_a;
    eval(t_a, l_a, m_a);
    double ref = l_a;
    const double tol = 1e-9 * scene.eta;

    for (int64_t k = 1; k <= steps; ++k) {
      const double t_b = traj.t0_us + span_us * k / steps;
      double l_b;
      bool m_b;
      eval(t_b, l_b, m_b);

      if (!m_a && !m_b)
        worst_step[idx] = std::max(worst_step[idx], std::fabs(l_b - l_a));

      if (l_b != l_a) {
        const EventCategory cat = (!m_a && !m_b)  ? EventCategory::AA
                                  : (m_a && m_b)  ? EventCategory::OO
                                                  : EventCategory::OA;
        const double pol = l_b > l_a ? 1.0 : -1.0;
        double cross = ref + pol * scene.eta;
        while ((pol > 0 && cross > l_a && cross <= l_b + tol) ||
               (pol < 0 && cross < l_a && cross >= l_b - tol)) {
          const double frac = std::clamp((cross - l_a) / (l_b - l_a), 0.0, 1.0);
          const double t_ev = t_a + frac * (t_b - t_a);
          int64_t t_us = llround(t_ev);
          t_us = std::clamp(t_us, traj.t0_us, traj.t1_us);
          out.push_back({t_us, px, py, static_cast<int8_t>(pol > 0 ? 1 : -1), cat});
          ref = cross;
          cross = ref + pol * scene.eta;
        }
      }
      t_a = t_b;
      l_a = l_b;
      m_a = m_b;
    }

    // Homogeneous Poisson noise, independent substream per pixel.
    if (scene.noise_rate > 0.0) {
      Rng rng(mix_seed(seed, static_cast<uint64_t>(idx)));
      double t = traj.t0_us * 1e-6 + rng.exponential(scene.noise_rate);
      const double t_end = traj.t1_us * 1e-6;
      while (t < t_end) {
        out.push_back({llround(t * 1e6), px, py, static_cast<int8_t>(rng.coin() ? 1 : -1),
                       EventCategory::NOISE});
        t += rng.exponential(scene.noise_rate);
      }
    }
  });

  double worst = 0.0;
  int64_t worst_idx = -1;
  for (int64_t i = 0; i < n_px; ++i)
    if (worst_step[i] > worst) {
      worst = worst_step[i];
      worst_idx = i;
    }
  if (worst >= 4.0 * scene.eta)
    throw InvalidArgument(
        "simulate_events: sampling too coarse, per-step log-intensity change " +
        std::to_string(worst) + " >= 4*eta at pixel (" + std::to_string(worst_idx % W) + "," +
        std::to_string(worst_idx / W) + "); raise sample_rate");

  std::vector<detail::RawEvent> all;
  size_t total = 0;
  for (const auto& v : per_pixel) total += v.size();
  all.reserve(total);
  for (auto& v : per_pixel) {
    all.insert(all.end(), v.begin(), v.end());
    v.clear();
  }
  std::stable_sort(all.begin(), all.end(), [](const detail::RawEvent& a, const detail::RawEvent& b) {
    if (a.t != b.t) return a.t < b.t;
    if (a.y != b.y) return a.y < b.y;
    if (a.x != b.x) return a.x < b.x;
    return a.p < b.p;
  });

  LabeledEventStream labeled;
  labeled.stream.width = W;
  labeled.stream.height = H;
  labeled.stream.t_min = traj.t0_us;
  labeled.stream.t_max = traj.t1_us;
  labeled.stream.events.reserve(all.size());
  labeled.labels.reserve(all.size());
  for (const auto& r : all) {
    labeled.stream.events.push_back({r.t, r.x, r.y, r.p});
    labeled.labels.push_back(r.cat);
  }

  // Companion sample: metadata, 30 Hz occluded frames, occlusion-free frame at
  // the reference time. Frames are quantized to 8-bit levels up front so the
  // on-disk bundle reloads bit-equal.
  DatasetSample sample;
  sample.v = traj.vx;
  sample.fx = scene.fx;
  sample.height = H;
  sample.width = W;
  sample.depth = scene.depth_target_m;
  sample.events = labeled.stream;

  auto quantize = [](GrayImage img) {
    for (double& v : img.v) v = std::lround(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0;
    return img;
  };
  const int64_t frame_step = 33333;  // ~30 Hz
  for (int64_t t = traj.t0_us; t <= traj.t1_us; t += frame_step) {
    auto [img, mask] = render_view(scene, traj.cam_x(static_cast<double>(t)),
                                   traj.cam_y(static_cast<double>(t)));
    (void)mask;
    sample.occ_aps.push_back(quantize(std::move(img)));
    sample.occ_aps_ts.push_back(t);
  }
  auto [free_img, free_mask] =
      render_view(scene, traj.cam_x(static_cast<double>(traj.t_ref_us)),
                  traj.cam_y(static_cast<double>(traj.t_ref_us)), /*with_occluder=*/false);
  (void)free_mask;
  sample.occ_free_aps = quantize(std::move(free_img));
  sample.occ_free_aps_ts = traj.t_ref_us;

  return {std::move(labeled), std::move(sample)};
}

/// Writes the sample bundle; load_sample() recovers it field-for-field.
inline void export_sample(const DatasetSample& sample, const std::string& dir) {
  save_sample(sample, dir);
}

}  // namespace esai
