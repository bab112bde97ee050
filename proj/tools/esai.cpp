// esai: command-line frontend for the event-based seeing-through toolkit.
//
// Subcommands: simulate, refocus, epi, acc, train, infer, eval, report.
// Exit codes: 0 success, 1 usage error, 2 data/format error, 3 numeric
// failure. Diagnostics go to stderr; artifacts only to the declared outputs.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "esai/esai.hpp"

namespace fs = std::filesystem;
using namespace esai;

namespace {

std::pair<double, double> parse_bounds(const std::string& s, const std::string& flag) {
  const size_t colon = s.find(':');
  if (colon == std::string::npos)
    throw InvalidArgument(flag + ": expected LO:HI, got '" + s + "'");
  try {
    return {std::stod(s.substr(0, colon)), std::stod(s.substr(colon + 1))};
  } catch (const std::logic_error&) {
    throw InvalidArgument(flag + ": expected LO:HI, got '" + s + "'");
  }
}

struct PsiOptions {
  std::string psi = "from-meta";  // from-meta | auto | PX,PY
  std::string bounds;             // LO:HI for auto, x axis
  std::string bounds_y = "0:0";
  int grid = 41;
  int iters = 30;
  std::string metric = "combined";
};

void add_psi_options(CLI::App* cmd, PsiOptions& opt) {
  cmd->add_option("--psi", opt.psi, "from-meta, auto, or explicit PX,PY (px/s)");
  cmd->add_option("--bounds", opt.bounds, "auto-refocus rate bounds LO:HI, px/s (x axis)");
  cmd->add_option("--bounds-y", opt.bounds_y, "auto-refocus bounds for the y axis (default 0:0)");
  cmd->add_option("--grid", opt.grid, "coarse grid points per axis");
  cmd->add_option("--iters", opt.iters, "golden-section refinement iterations");
  cmd->add_option("--metric", opt.metric, "focus metric: variance, density, combined");
}

FocusMetric parse_metric(const std::string& s) {
  if (s == "variance") return FocusMetric::variance;
  if (s == "density") return FocusMetric::density;
  if (s == "combined") return FocusMetric::combined;
  throw InvalidArgument("unknown focus metric '" + s + "'");
}

WarpParam resolve_psi(const PsiOptions& opt, const DatasetSample& sample) {
  const int64_t t_ref = (sample.events.t_min + sample.events.t_max) / 2;
  if (opt.psi == "from-meta")
    return compute_psi(sample.fx, sample.fx, sample.v, 0.0, sample.depth, t_ref);
  if (opt.psi == "auto") {
    if (opt.bounds.empty())
      throw InvalidArgument("--psi auto requires --bounds LO:HI");
    SearchConfig cfg;
    std::tie(cfg.x_lo, cfg.x_hi) = parse_bounds(opt.bounds, "--bounds");
    std::tie(cfg.y_lo, cfg.y_hi) = parse_bounds(opt.bounds_y, "--bounds-y");
    cfg.grid_points = opt.grid;
    cfg.refine_iters = opt.iters;
    cfg.metric = parse_metric(opt.metric);
    return auto_refocus(sample.events, cfg);
  }
  const auto [px, py] = parse_pair(opt.psi, "--psi");
  return {px, py, t_ref};
}

void write_psi_sidecar(const WarpParam& w, const std::string& out_path) {
  KeyValueFile kv;
  kv.set_double("psi_x", w.px_per_s_x);
  kv.set_double("psi_y", w.px_per_s_y);
  kv.set_int("t_ref_us", w.t_ref_us);
  kv.save(out_path);
}

WarpParam parse_psi_value(const std::string& s) {
  if (fs::exists(s)) {
    const KeyValueFile kv = KeyValueFile::load(s);
    return {kv.get_double("psi_x"), kv.get_double("psi_y"), kv.get_int("t_ref_us")};
  }
  const auto [px, py] = parse_pair(s, "psi");
  return {px, py, 0};
}

// ---------------------------------------------------------------------------

int cmd_simulate(const std::string& scene_path, const std::string& out_dir, int64_t seed_override,
                 const std::string& labels_out) {
  KeyValueFile cfg = KeyValueFile::load(scene_path);
  if (seed_override >= 0) cfg.set_int("seed", seed_override);
  const auto [scene, traj] = make_scene(cfg);
  const uint64_t seed = static_cast<uint64_t>(cfg.get_int_or("seed", 1));
  auto [labeled, sample] = simulate_events(scene, traj, seed);
  export_sample(sample, out_dir);
  if (!labels_out.empty()) {
    std::ofstream f(labels_out, std::ios::trunc);
    if (!f) throw DataError("cannot write " + labels_out);
    f << "index,label\n";
    static const char* names[] = {"AA", "OO", "OA", "NOISE"};
    for (size_t i = 0; i < labeled.labels.size(); ++i)
      f << i << "," << names[static_cast<int>(labeled.labels[i])] << "\n";
  }
  std::cerr << "simulate: " << labeled.stream.size() << " events -> " << out_dir << "\n";
  return 0;
}

int cmd_refocus(const std::string& sample_dir, const PsiOptions& psi_opt,
                const std::string& out_path) {
  const DatasetSample sample = load_sample(sample_dir);
  const WarpParam w = resolve_psi(psi_opt, sample);
  const SubpixelEventStream refocused = warp_events(sample.events, w);
  write_subpixel_bin(refocused, out_path);
  write_psi_sidecar(w, out_path + ".psi.txt");
  std::cerr << "refocus: rate (" << w.px_per_s_x << ", " << w.px_per_s_y << ") px/s, t_ref "
            << w.t_ref_us << " us -> " << out_path << "\n";
  return 0;
}

int cmd_acc(const std::string& in_path, const std::string& out_pgm, const std::string& out_f32,
            const std::string& voting) {
  const SubpixelEventStream s = read_any_events(in_path);
  if (voting != "nearest" && voting != "bilinear")
    throw InvalidArgument("--voting must be nearest or bilinear");
  const GrayImage counts = accumulate(s, s.height, s.width,
                                      voting == "nearest" ? Voting::nearest : Voting::bilinear);
  const GrayImage img = normalize_minmax(counts);
  write_pgm(img, out_pgm);
  if (!out_f32.empty()) write_f32_grid(counts, out_f32);
  return 0;
}

int cmd_epi(const std::string& in_path, int row, int bins, const std::string& mode,
            const std::string& out_pgm, const std::string& out_f32) {
  const SubpixelEventStream s = read_any_events(in_path);
  if (mode != "merged" && mode != "signed")
    throw InvalidArgument("--mode must be merged or signed");
  const EpiImage epi =
      epi_slice(s, row, bins, mode == "merged" ? EpiMode::merged : EpiMode::signed_sum);
  write_pgm_minmax(epi.data, out_pgm);
  if (!out_f32.empty()) write_f32_grid(epi.data, out_f32);
  return 0;
}

std::vector<std::string> sorted_sample_dirs(const std::string& parent) {
  std::vector<std::string> dirs;
  for (const auto& e : fs::directory_iterator(parent))
    if (e.is_directory() && fs::exists(e.path() / "meta.txt")) dirs.push_back(e.path().string());
  std::sort(dirs.begin(), dirs.end());
  if (dirs.empty()) throw DataError(parent + ": no sample directories found");
  return dirs;
}

std::pair<FrameStack, GrayImage> prepare_pair(const std::string& dir, int n) {
  const DatasetSample s = load_sample(dir);
  const int64_t t_ref = (s.events.t_min + s.events.t_max) / 2;
  const WarpParam w = compute_psi(s.fx, s.fx, s.v, 0.0, s.depth, t_ref);
  const SubpixelEventStream refocused = warp_events(s.events, w);
  FrameStack stack = stack_events(refocused, n, {s.events.t_min, s.events.t_max});
  return {std::move(stack), s.occ_free_aps};
}

int cmd_train(const std::string& data_dir, const std::string& val_dir,
              const std::string& cfg_path, const std::string& ckpt_out,
              const std::string& history_out) {
  TrainConfig cfg;
  if (!cfg_path.empty()) {
    const KeyValueFile kv = KeyValueFile::load(cfg_path);
    cfg.epochs = static_cast<int>(kv.get_int_or("epochs", cfg.epochs));
    cfg.batch_size = static_cast<int>(kv.get_int_or("batch_size", cfg.batch_size));
    cfg.learning_rate = kv.get_double_or("learning_rate", cfg.learning_rate);
    cfg.t_max = static_cast<int>(kv.get_int_or("t_max", cfg.t_max));
    cfg.seed = static_cast<uint64_t>(kv.get_int_or("seed", 1));
    cfg.n_intervals = static_cast<int>(kv.get_int_or("n", cfg.n_intervals));
    cfg.loss.beta_pix = kv.get_double_or("beta_pix", cfg.loss.beta_pix);
    cfg.loss.beta_tv = kv.get_double_or("beta_tv", cfg.loss.beta_tv);
  }
  std::vector<std::pair<FrameStack, GrayImage>> train_set, val_set;
  for (const auto& d : sorted_sample_dirs(data_dir))
    train_set.push_back(prepare_pair(d, cfg.n_intervals));
  if (!val_dir.empty())
    for (const auto& d : sorted_sample_dirs(val_dir))
      val_set.push_back(prepare_pair(d, cfg.n_intervals));

  const TrainResult res = train(train_set, cfg, val_set);
  save_checkpoint(res.enc, res.dec, ckpt_out);
  if (!history_out.empty()) write_history_csv(res.history, history_out);
  if (!res.history.empty())
    std::cerr << "train: final loss " << res.history.back().loss << ", psnr_val "
              << res.history.back().psnr_val << "\n";
  return 0;
}

int cmd_infer(const std::string& sample_dir, const std::string& ckpt_path,
              const PsiOptions& psi_opt, int n, const std::string& out_pgm) {
  const DatasetSample sample = load_sample(sample_dir);
  const auto [enc, dec] = load_checkpoint(ckpt_path);
  const WarpParam w = resolve_psi(psi_opt, sample);
  const GrayImage y = reconstruct_hybrid(sample.events, w, enc, dec, n);
  write_pgm(y, out_pgm);
  return 0;
}

int cmd_eval(const std::string& metric, const std::string& img_a, const std::string& img_b,
             double peak, const std::string& sample_dir, const std::string& est,
             const std::string& gt, const std::string& out_file, const std::string& key) {
  double value = 0.0;
  if (metric == "psnr" || metric == "ssim") {
    if (img_a.empty() || img_b.empty())
      throw InvalidArgument("--metric " + metric + " requires --a and --b images");
    const GrayImage a = read_pgm(img_a);
    const GrayImage b = read_pgm(img_b);
    value = metric == "psnr" ? psnr(a, b, peak) : ssim(a, b, peak);
  } else if (metric == "apse") {
    if (sample_dir.empty() || est.empty())
      throw InvalidArgument("--metric apse requires --sample and --est");
    const DatasetSample sample = load_sample(sample_dir);
    const int64_t t_ref = (sample.events.t_min + sample.events.t_max) / 2;
    WarpParam est_w = parse_psi_value(est);
    WarpParam gt_w;
    if (gt == "from-meta" || gt.empty()) {
      gt_w = compute_psi(sample.fx, sample.fx, sample.v, 0.0, sample.depth, t_ref);
    } else {
      gt_w = parse_psi_value(gt);
      gt_w.t_ref_us = t_ref;
    }
    est_w.t_ref_us = gt_w.t_ref_us;
    value = apse(est_w, gt_w, sample.events);
  } else {
    throw InvalidArgument("unknown metric '" + metric + "'");
  }
  const std::string name = key.empty() ? metric : key;
  std::cout << name << "=" << std::setprecision(10) << value << "\n";
  if (!out_file.empty()) {
    std::ofstream f(out_file, std::ios::app);
    if (!f) throw DataError("cannot write " + out_file);
    f << name << "=" << std::setprecision(10) << value << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"event-based synthetic aperture imaging toolkit"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "render a scene config into a dataset sample");
  std::string sim_scene, sim_out, sim_labels;
  int64_t sim_seed = -1;
  sim->add_option("--scene", sim_scene, "scene config file")->required();
  sim->add_option("--out", sim_out, "output sample directory")->required();
  sim->add_option("--seed", sim_seed, "override the config seed");
  sim->add_option("--labels", sim_labels, "also write per-event category labels (CSV)");

  // refocus
  auto* ref = app.add_subcommand("refocus", "warp a sample's events onto the target plane");
  std::string ref_sample, ref_out;
  PsiOptions ref_psi;
  ref->add_option("--sample", ref_sample, "sample directory")->required();
  add_psi_options(ref, ref_psi);
  ref->add_option("--out", ref_out, "output refocused stream (.esaf container)")->required();

  // acc
  auto* acc = app.add_subcommand("acc", "accumulate events into a normalized image");
  std::string acc_in, acc_out, acc_f32, acc_voting = "nearest";
  acc->add_option("--in", acc_in, "event container (ESAI or ESAF)")->required();
  acc->add_option("--out", acc_out, "output PGM")->required();
  acc->add_option("--f32", acc_f32, "also write raw counts as .f32 grid");
  acc->add_option("--voting", acc_voting, "nearest or bilinear");

  // epi
  auto* epi = app.add_subcommand("epi", "slice one pixel row into a time-column event image");
  std::string epi_in, epi_out, epi_f32, epi_mode = "merged";
  int epi_row = 0, epi_bins = 64;
  epi->add_option("--in", epi_in, "event container (ESAI or ESAF)")->required();
  epi->add_option("--row", epi_row, "pixel row")->required();
  epi->add_option("--bins", epi_bins, "time bins");
  epi->add_option("--mode", epi_mode, "merged or signed");
  epi->add_option("--out", epi_out, "output PGM (min-max scaled)")->required();
  epi->add_option("--f32", epi_f32, "also write raw grid");

  // train
  auto* trn = app.add_subcommand("train", "train the hybrid reconstruction network");
  std::string trn_data, trn_val, trn_cfg, trn_out, trn_hist;
  trn->add_option("--data", trn_data, "directory of sample directories")->required();
  trn->add_option("--val", trn_val, "validation samples directory");
  trn->add_option("--cfg", trn_cfg, "training config (key=value)");
  trn->add_option("--out", trn_out, "output checkpoint (.esnn)")->required();
  trn->add_option("--history", trn_hist, "per-epoch history CSV");

  // infer
  auto* inf = app.add_subcommand("infer", "reconstruct one sample with a trained checkpoint");
  std::string inf_sample, inf_ckpt, inf_out;
  PsiOptions inf_psi;
  int inf_n = 30;
  inf->add_option("--sample", inf_sample, "sample directory")->required();
  inf->add_option("--ckpt", inf_ckpt, "checkpoint path")->required();
  add_psi_options(inf, inf_psi);
  inf->add_option("--n", inf_n, "event-frame stack depth");
  inf->add_option("--out", inf_out, "output PGM")->required();

  // eval
  auto* evl = app.add_subcommand("eval", "compute psnr / ssim / apse");
  std::string evl_metric, evl_a, evl_b, evl_sample, evl_est, evl_gt = "from-meta", evl_out,
                          evl_key;
  double evl_peak = 1.0;
  evl->add_option("--metric", evl_metric, "psnr, ssim or apse")->required();
  evl->add_option("--a", evl_a, "first image (PGM)");
  evl->add_option("--b", evl_b, "second image (PGM)");
  evl->add_option("--peak", evl_peak, "peak value for psnr/ssim (default 1.0)");
  evl->add_option("--sample", evl_sample, "sample directory (apse)");
  evl->add_option("--est", evl_est, "estimated rate: PX,PY or psi sidecar path (apse)");
  evl->add_option("--gt-psi", evl_gt, "ground truth: from-meta, PX,PY or sidecar path");
  evl->add_option("--out", evl_out, "append 'key=value' to this file");
  evl->add_option("--key", evl_key, "key name for --out (default: metric name)");

  // report
  auto* rep = app.add_subcommand("report", "aggregate sweep runs into CSV + plot panel");
  std::string rep_runs, rep_out;
  rep->add_option("--runs", rep_runs, "directory of run directories with metrics.txt")->required();
  rep->add_option("--out", rep_out, "report output directory")->required();

  try {
    app.parse(argc, argv);
    if (sim->parsed()) return cmd_simulate(sim_scene, sim_out, sim_seed, sim_labels);
    if (ref->parsed()) return cmd_refocus(ref_sample, ref_psi, ref_out);
    if (acc->parsed()) return cmd_acc(acc_in, acc_out, acc_f32, acc_voting);
    if (epi->parsed()) return cmd_epi(epi_in, epi_row, epi_bins, epi_mode, epi_out, epi_f32);
    if (trn->parsed()) return cmd_train(trn_data, trn_val, trn_cfg, trn_out, trn_hist);
    if (inf->parsed()) return cmd_infer(inf_sample, inf_ckpt, inf_psi, inf_n, inf_out);
    if (evl->parsed())
      return cmd_eval(evl_metric, evl_a, evl_b, evl_peak, evl_sample, evl_est, evl_gt, evl_out,
                      evl_key);
    if (rep->parsed()) {
      write_report(rep_runs, rep_out);
      return 0;
    }
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  } catch (const InvalidArgument& e) {
    std::cerr << "esai: " << e.what() << "\n";
    return 1;
  } catch (const NumericError& e) {
    std::cerr << "esai: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "esai: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
