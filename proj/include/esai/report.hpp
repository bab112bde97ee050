#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "esai/config.hpp"
#include "esai/errors.hpp"
#include "esai/image.hpp"
#include "esai/io.hpp"

namespace esai {

namespace detail {

/// Line plot of (x, y) points into a fixed-size panel, black on white.
inline GrayImage plot_curve(std::vector<std::pair<double, double>> pts, int h = 160, int w = 220) {
  GrayImage img(h, w, 1.0, 0.0, 1.0);
  const int m = 18;  // margin
  for (int y = m; y < h - m; ++y) img.at(y, m) = 0.0;
  for (int x = m; x < w - m; ++x) img.at(h - m, x) = 0.0;
  if (pts.empty()) return img;
  std::sort(pts.begin(), pts.end());
  double x_lo = pts.front().first, x_hi = pts.back().first;
  double y_lo = pts[0].second, y_hi = pts[0].second;
  for (const auto& [x, y] : pts) {
    y_lo = std::min(y_lo, y);
    y_hi = std::max(y_hi, y);
  }
  if (x_hi == x_lo) x_hi = x_lo + 1.0;
  if (y_hi == y_lo) y_hi = y_lo + 1.0;
  auto px = [&](double x) {
    return m + static_cast<int>(std::lround((x - x_lo) / (x_hi - x_lo) * (w - 2 * m - 1)));
  };
  auto py = [&](double y) {
    return h - m - static_cast<int>(std::lround((y - y_lo) / (y_hi - y_lo) * (h - 2 * m - 1)));
  };
  auto draw_line = [&](int x0, int y0, int x1, int y1) {
    const int steps = std::max({std::abs(x1 - x0), std::abs(y1 - y0), 1});
    for (int s = 0; s <= steps; ++s) {
      const int x = x0 + (x1 - x0) * s / steps;
      const int y = y0 + (y1 - y0) * s / steps;
      if (x >= 0 && x < w && y >= 0 && y < h) img.at(y, x) = 0.0;
    }
  };
  for (size_t i = 0; i + 1 < pts.size(); ++i)
    draw_line(px(pts[i].first), py(pts[i].second), px(pts[i + 1].first), py(pts[i + 1].second));
  for (const auto& [x, y] : pts) {
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        const int xx = px(x) + dx, yy = py(y) + dy;
        if (xx >= 0 && xx < w && yy >= 0 && yy < h) img.at(yy, xx) = 0.0;
      }
  }
  return img;
}

inline void blit(GrayImage& dst, const GrayImage& src, int y0, int x0) {
  for (int y = 0; y < src.h; ++y)
    for (int x = 0; x < src.w; ++x) dst.at(y0 + y, x0 + x) = src.at(y, x);
}

}  // namespace detail

struct RunRecord {
  std::string name;
  std::map<std::string, double> values;
};

/// Collects <runs_dir>/<run>/metrics.txt files. Runs without a metrics file
/// are reported together as an error.
inline std::vector<RunRecord> collect_runs(const std::string& runs_dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(runs_dir)) throw DataError(runs_dir + ": not a directory");
  std::vector<std::string> subdirs;
  for (const auto& e : fs::directory_iterator(runs_dir))
    if (e.is_directory()) subdirs.push_back(e.path().filename().string());
  std::sort(subdirs.begin(), subdirs.end());
  if (subdirs.empty()) throw DataError(runs_dir + ": no completed runs (0 run directories found)");
  std::vector<RunRecord> runs;
  std::string missing;
  for (const std::string& name : subdirs) {
    const fs::path mpath = fs::path(runs_dir) / name / "metrics.txt";
    if (!fs::exists(mpath)) {
      missing += missing.empty() ? name : (", " + name);
      continue;
    }
    RunRecord rec;
    rec.name = name;
    const KeyValueFile kv = KeyValueFile::load(mpath.string());
    for (const auto& [k, v] : kv.all()) rec.values[k] = std::stod(v);
    runs.push_back(std::move(rec));
  }
  if (!missing.empty()) throw DataError(runs_dir + ": runs missing metrics.txt: " + missing);
  return runs;
}

/// Emits report.csv plus a PGM panel of psnr/ssim against the occlusion
/// density (r_o) and, when present, the occlusion-texture ratio (r_t).
inline void write_report(const std::string& runs_dir, const std::string& out_dir) {
  namespace fs = std::filesystem;
  const std::vector<RunRecord> runs = collect_runs(runs_dir);
  fs::create_directories(out_dir);

  std::vector<std::string> columns;
  for (const auto& r : runs)
    for (const auto& [k, v] : r.values)
      if (std::find(columns.begin(), columns.end(), k) == columns.end()) columns.push_back(k);
  std::sort(columns.begin(), columns.end());

  std::ofstream csv(fs::path(out_dir) / "report.csv", std::ios::trunc);
  if (!csv) throw DataError("cannot write report.csv");
  csv << "run";
  for (const auto& c : columns) csv << "," << c;
  csv << "\n";
  csv.precision(10);
  for (const auto& r : runs) {
    csv << r.name;
    for (const auto& c : columns) {
      csv << ",";
      const auto it = r.values.find(c);
      if (it != r.values.end()) csv << it->second;
    }
    csv << "\n";
  }
  csv.close();

  auto gather = [&](const std::string& xk, const std::string& yk) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& r : runs) {
      const auto xi = r.values.find(xk), yi = r.values.find(yk);
      if (xi != r.values.end() && yi != r.values.end()) pts.emplace_back(xi->second, yi->second);
    }
    return pts;
  };
  const GrayImage p00 = detail::plot_curve(gather("r_o", "psnr"));
  const GrayImage p01 = detail::plot_curve(gather("r_t", "psnr"));
  const GrayImage p10 = detail::plot_curve(gather("r_o", "ssim"));
  const GrayImage p11 = detail::plot_curve(gather("r_t", "ssim"));
  GrayImage panel(p00.h * 2, p00.w * 2, 1.0, 0.0, 1.0);
  detail::blit(panel, p00, 0, 0);
  detail::blit(panel, p01, 0, p00.w);
  detail::blit(panel, p10, p00.h, 0);
  detail::blit(panel, p11, p00.h, p00.w);
  write_pgm(panel, (fs::path(out_dir) / "report_panel.pgm").string());
}

}  // namespace esai
