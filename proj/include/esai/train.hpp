#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "esai/errors.hpp"
#include "esai/losses.hpp"
#include "esai/metrics.hpp"
#include "esai/recon.hpp"
#include "esai/rng.hpp"

namespace esai {

struct TrainConfig {
  int epochs = 100;
  int batch_size = 4;
  double learning_rate = 5e-4;
  int t_max = 64;          // cosine-restart period, epochs
  uint64_t seed = 1;
  int n_intervals = 30;    // event-frame stack depth used by the pipeline
  LossWeights loss;
  LifConfig lif;           // shared by all spiking layers

  void validate() const {
    if (epochs < 0) throw InvalidArgument("TrainConfig: epochs must be >= 0");
    if (batch_size < 1) throw InvalidArgument("TrainConfig: batch size must be positive");
    if (!(learning_rate > 0.0)) throw InvalidArgument("TrainConfig: learning rate must be positive");
    if (t_max < 1) throw InvalidArgument("TrainConfig: cosine period must be positive");
    if (n_intervals < 1) throw InvalidArgument("TrainConfig: interval count must be positive");
    loss.validate();
    lif.validate();
  }
};

struct EpochStats {
  int epoch = 0;
  double loss = 0.0;
  double psnr_val = 0.0;
};

struct TrainResult {
  EncoderParams enc;
  DecoderParams dec;
  std::vector<EpochStats> history;
};

namespace detail {

/// First-order adaptive-moment optimizer state for one parameter block.
struct AdamState {
  std::vector<double> m, v;
  explicit AdamState(size_t n) : m(n, 0.0), v(n, 0.0) {}
};

inline void adam_step(std::vector<double>& theta, const std::vector<double>& grad,
                      AdamState& st, double lr, int64_t step) {
  constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(step));
  for (size_t i = 0; i < theta.size(); ++i) {
    st.m[i] = b1 * st.m[i] + (1.0 - b1) * grad[i];
    st.v[i] = b2 * st.v[i] + (1.0 - b2) * grad[i] * grad[i];
    theta[i] -= lr * (st.m[i] / bc1) / (std::sqrt(st.v[i] / bc2) + eps);
  }
}

/// Cosine schedule with warm restarts every t_max epochs.
inline double cosine_restart_lr(double lr0, int epoch, int t_max) {
  const int e = epoch % t_max;
  return 0.5 * lr0 * (1.0 + std::cos(M_PI * static_cast<double>(e) / t_max));
}

}  // namespace detail

/// Joint gradient of the hybrid network for one sample; accumulates into the
/// per-block gradient vectors and returns the loss.
inline double hybrid_sample_grad(const FrameStack& stack, const GrayImage& truth,
                                 const EncoderParams& enc, const DecoderParams& dec,
                                 const LossWeights& lw, EncoderGrads& ge, DecoderGrads& gd) {
  const EncoderOutput enc_out = snn_forward(stack, enc);
  const Tensor3 dec_in = assemble_decoder_input(enc_out);
  DecoderTrace tr;
  const GrayImage y = decoder_forward(dec_in, dec, &tr);
  const double loss = total_loss(y, truth, lw);
  const GrayImage dy = total_loss_grad(y, truth, lw);
  const Tensor3 d_in = decoder_backward(tr, dec, dy, gd);

  Tensor3 d_feat(32, d_in.h, d_in.w), d_skip(8, d_in.h, d_in.w);
  std::copy(d_in.plane(0), d_in.plane(32), d_feat.v.begin());
  std::copy(d_in.plane(32), d_in.plane(40), d_skip.v.begin());
  const EncoderGrads g = snn_backward(enc_out.trace, enc, d_feat, d_skip);
  for (size_t i = 0; i < g.g1.w.size(); ++i) ge.g1.w[i] += g.g1.w[i];
  for (size_t i = 0; i < g.g2.w.size(); ++i) ge.g2.w[i] += g.g2.w[i];
  for (size_t i = 0; i < g.g3.w.size(); ++i) ge.g3.w[i] += g.g3.w[i];
  return loss;
}

/// Mini-batch gradient descent with adaptive-moment updates and a cosine
/// restart schedule. Deterministic for a fixed config. History rows carry the
/// epoch's mean training loss and the mean PSNR over `val` (over the training
/// set when `val` is empty).
inline TrainResult train(const std::vector<std::pair<FrameStack, GrayImage>>& dataset,
                         const TrainConfig& cfg,
                         const std::vector<std::pair<FrameStack, GrayImage>>& val = {}) {
  cfg.validate();
  if (dataset.empty()) throw InvalidArgument("train: empty dataset");

  TrainResult res;
  Rng init_rng(mix_seed(cfg.seed, 0x1817));
  res.enc.lif1 = res.enc.lif2 = res.enc.lif3 = cfg.lif;
  res.enc.init_he(init_rng);
  res.dec.init_he(init_rng);

  detail::AdamState a_e1(res.enc.l1.w.size()), a_e2(res.enc.l2.w.size()),
      a_e3(res.enc.l3.w.size());
  detail::AdamState a_d1w(res.dec.c1.w.size()), a_d1b(res.dec.c1.b.size());
  detail::AdamState a_d2w(res.dec.c2.w.size()), a_d2b(res.dec.c2.b.size());
  detail::AdamState a_d3w(res.dec.c3.w.size()), a_d3b(res.dec.c3.b.size());

  std::vector<size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  Rng shuffle_rng(mix_seed(cfg.seed, 0x5875));
  int64_t step = 0;

  const auto& eval_set = val.empty() ? dataset : val;
  auto mean_psnr = [&]() {
    double sum = 0.0;
    for (const auto& [stack, truth] : eval_set) {
      const EncoderOutput eo = snn_forward(stack, res.enc);
      const GrayImage y = decoder_forward(assemble_decoder_input(eo), res.dec);
      sum += psnr(y, truth, 1.0);
    }
    return sum / static_cast<double>(eval_set.size());
  };

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    // Fisher-Yates with the dedicated stream keeps sample order reproducible.
    for (size_t i = order.size(); i > 1; --i) {
      const size_t j = static_cast<size_t>(shuffle_rng.next_u64() % i);
      std::swap(order[i - 1], order[j]);
    }
    const double lr = detail::cosine_restart_lr(cfg.learning_rate, epoch, cfg.t_max);

    double epoch_loss = 0.0;
    for (size_t base = 0; base < order.size(); base += cfg.batch_size) {
      const size_t take = std::min<size_t>(cfg.batch_size, order.size() - base);
      EncoderGrads ge;
      DecoderGrads gd;
      double batch_loss = 0.0;
      for (size_t i = 0; i < take; ++i) {
        const auto& [stack, truth] = dataset[order[base + i]];
        batch_loss +=
            hybrid_sample_grad(stack, truth, res.enc, res.dec, cfg.loss, ge, gd);
      }
      const double inv = 1.0 / static_cast<double>(take);
      auto scale = [&](std::vector<double>& g) {
        for (double& v : g) v *= inv;
      };
      scale(ge.g1.w);
      scale(ge.g2.w);
      scale(ge.g3.w);
      scale(gd.g1.w);
      scale(gd.g1.b);
      scale(gd.g2.w);
      scale(gd.g2.b);
      scale(gd.g3.w);
      scale(gd.g3.b);
      ++step;
      detail::adam_step(res.enc.l1.w, ge.g1.w, a_e1, lr, step);
      detail::adam_step(res.enc.l2.w, ge.g2.w, a_e2, lr, step);
      detail::adam_step(res.enc.l3.w, ge.g3.w, a_e3, lr, step);
      detail::adam_step(res.dec.c1.w, gd.g1.w, a_d1w, lr, step);
      detail::adam_step(res.dec.c1.b, gd.g1.b, a_d1b, lr, step);
      detail::adam_step(res.dec.c2.w, gd.g2.w, a_d2w, lr, step);
      detail::adam_step(res.dec.c2.b, gd.g2.b, a_d2b, lr, step);
      detail::adam_step(res.dec.c3.w, gd.g3.w, a_d3w, lr, step);
      detail::adam_step(res.dec.c3.b, gd.g3.b, a_d3b, lr, step);
      epoch_loss += batch_loss;
    }
    epoch_loss /= static_cast<double>(dataset.size());
    if (!std::isfinite(epoch_loss))
      throw NumericError("train: loss diverged at epoch " + std::to_string(epoch));
    res.history.push_back({epoch, epoch_loss, mean_psnr()});
  }
  return res;
}

inline void write_history_csv(const std::vector<EpochStats>& history, const std::string& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw DataError("cannot write " + path);
  f << "epoch,loss,psnr_val\n";
  f.precision(12);
  for (const auto& row : history) f << row.epoch << "," << row.loss << "," << row.psnr_val << "\n";
}

}  // namespace esai
