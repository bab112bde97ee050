#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numeric>

#include "esai/esai.hpp"

using namespace esai;

namespace {

/// Gradient-check error in units of the allowance rtol*|g| + atol; the
/// absolute floor keeps near-zero coordinates from amplifying finite-
/// difference roundoff into fake relative error.
double grad_excess(double fd, double an, double rtol, double atol = 1e-8) {
  return std::fabs(fd - an) / (atol + rtol * std::max(std::fabs(fd), std::fabs(an)));
}

/// Independent decoder reference: per-pixel loops, mirror padding by index
/// arithmetic, rectifier and logistic written out directly.
GrayImage naive_decoder(const Tensor3& in, const DecoderParams& p) {
  auto reflect = [](int i, int n) { return i < 0 ? -i : (i >= n ? 2 * n - 2 - i : i); };
  auto conv = [&](const Tensor3& src, const ConvLayer& L) {
    Tensor3 out(L.oc, src.h, src.w);
    for (int oc = 0; oc < L.oc; ++oc)
      for (int y = 0; y < src.h; ++y)
        for (int x = 0; x < src.w; ++x) {
          double acc = L.b[oc];
          for (int ic = 0; ic < L.ic; ++ic)
            for (int ky = 0; ky < L.k; ++ky)
              for (int kx = 0; kx < L.k; ++kx)
                acc += L.wt(oc, ic, ky, kx) *
                       src.at(ic, reflect(y + ky - 1, src.h), reflect(x + kx - 1, src.w));
          out.at(oc, y, x) = acc;
        }
    return out;
  };
  Tensor3 a1 = conv(in, p.c1);
  for (double& v : a1.v) v = std::max(0.0, v);
  Tensor3 a2 = conv(a1, p.c2);
  for (double& v : a2.v) v = std::max(0.0, v);
  const Tensor3 z = conv(a2, p.c3);
  GrayImage y(in.h, in.w);
  for (size_t i = 0; i < y.v.size(); ++i) y.v[i] = 1.0 / (1.0 + std::exp(-z.v[i]));
  return y;
}

Tensor3 random_input(int h, int w, uint64_t seed, double scale = 0.5) {
  Tensor3 in(DecoderParams::kInChannels, h, w);
  Rng rng(seed);
  for (double& v : in.v) v = rng.uniform(0.0, scale);
  return in;
}

DecoderParams random_decoder(uint64_t seed) {
  DecoderParams p;
  Rng rng(seed);
  p.init_he(rng);
  return p;
}

GrayImage random_image(int h, int w, uint64_t seed) {
  GrayImage img(h, w);
  Rng rng(seed);
  for (double& v : img.v) v = rng.uniform(0.0, 1.0);
  return img;
}

FrameStack random_stack(int n, int h, int w, uint64_t seed) {
  FrameStack st(n, h, w);
  st.t_edges.resize(n + 1);
  for (int k = 0; k <= n; ++k) st.t_edges[k] = k;
  Rng rng(seed);
  for (double& v : st.data) v = std::floor(rng.uniform(0.0, 4.0));
  return st;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](size_t i, size_t j) { return v[i] < v[j]; });
    std::vector<double> r(v.size());
    size_t i = 0;
    while (i < idx.size()) {
      size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      for (size_t k = i; k <= j; ++k) r[idx[k]] = (i + j) / 2.0;
      i = j + 1;
    }
    return r;
  };
  const auto ra = ranks(a), rb = ranks(b);
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    ma += ra[i];
    mb += rb[i];
  }
  ma /= n;
  mb /= n;
  double num = 0, va = 0, vb = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    num += (ra[i] - ma) * (rb[i] - mb);
    va += (ra[i] - ma) * (ra[i] - ma);
    vb += (rb[i] - mb) * (rb[i] - mb);
  }
  return num / std::sqrt(va * vb);
}

}  // namespace

TEST_CASE("decoder_forward") {
  SECTION("zero parameters give the constant logistic midpoint") {
    DecoderParams p;  // zero weights and biases
    const GrayImage y = decoder_forward(random_input(6, 7, 1), p);
    for (double v : y.v) REQUIRE(v == 0.5);
  }

  SECTION("deterministic across runs") {
    const DecoderParams p = random_decoder(4);
    const Tensor3 in = random_input(8, 8, 5);
    const GrayImage a = decoder_forward(in, p);
    const GrayImage b = decoder_forward(in, p);
    REQUIRE(a.v == b.v);
  }

  SECTION("matches an independent direct-convolution reference") {
    for (uint64_t seed = 0; seed < 4; ++seed) {
      const DecoderParams p = random_decoder(seed + 10);
      const Tensor3 in = random_input(8, 8, seed);
      const GrayImage got = decoder_forward(in, p);
      const GrayImage want = naive_decoder(in, p);
      for (size_t i = 0; i < got.v.size(); ++i)
        REQUIRE(got.v[i] == Catch::Approx(want.v[i]).margin(1e-6));
    }
  }

  SECTION("output stays inside (0,1)") {
    const GrayImage y = decoder_forward(random_input(8, 8, 3, 2.0), random_decoder(3));
    for (double v : y.v) {
      REQUIRE(v > 0.0);
      REQUIRE(v < 1.0);
    }
  }

  SECTION("channel mismatch is rejected") {
    REQUIRE_THROWS_AS(decoder_forward(Tensor3(5, 8, 8), random_decoder(1)), InvalidArgument);
  }
}

TEST_CASE("pixel loss") {
  const GrayImage a = random_image(6, 5, 2);

  SECTION("identical images cost nothing") { REQUIRE(loss_pixel(a, a) == 0.0); }

  SECTION("all-zero versus all-one costs one") {
    REQUIRE(loss_pixel(GrayImage(4, 4, 0.0), GrayImage(4, 4, 1.0)) == 1.0);
  }

  SECTION("random pair equals the brute-force mean absolute difference") {
    const GrayImage b = random_image(6, 5, 3);
    double want = 0.0;
    for (size_t i = 0; i < a.v.size(); ++i) want += std::fabs(a.v[i] - b.v[i]);
    want /= static_cast<double>(a.v.size());
    REQUIRE(loss_pixel(a, b) == Catch::Approx(want).epsilon(1e-12));
  }

  SECTION("shape mismatch is rejected") {
    REQUIRE_THROWS_AS(loss_pixel(a, GrayImage(5, 6)), InvalidArgument);
  }
}

TEST_CASE("total-variance loss") {
  SECTION("constant image is flat") { REQUIRE(loss_tv(GrayImage(5, 7, 0.37)) == 0.0); }

  SECTION("1x2 image {0,1} has a single unit difference") {
    GrayImage img(1, 2);
    img.v = {0.0, 1.0};
    REQUIRE(loss_tv(img) == 1.0);
  }

  SECTION("checkerboard maximizes over all 4x4 binary images") {
    auto tv_of = [](uint32_t bits) {
      GrayImage img(4, 4);
      for (int i = 0; i < 16; ++i) img.v[i] = (bits >> i) & 1u;
      return loss_tv(img);
    };
    double best = -1.0;
    for (uint32_t bits = 0; bits < 65536; ++bits) best = std::max(best, tv_of(bits));
    uint32_t checker = 0;
    for (int y = 0; y < 4; ++y)
      for (int x = 0; x < 4; ++x)
        if ((x + y) % 2) checker |= 1u << (y * 4 + x);
    REQUIRE(tv_of(checker) == best);
    REQUIRE(best == 1.0);
  }
}

TEST_CASE("total loss") {
  const GrayImage y = random_image(8, 8, 5);
  const GrayImage t = random_image(8, 8, 6);

  SECTION("matching constants cost nothing") {
    const GrayImage c(4, 4, 0.25);
    REQUIRE(total_loss(c, c, LossWeights{}) == 0.0);
  }

  SECTION("paper default weights combine the two terms") {
    LossWeights w;  // beta_pix 32, beta_tv 2e-4
    REQUIRE(total_loss(y, t, w) ==
            Catch::Approx(32.0 * loss_pixel(y, t) + 2e-4 * loss_tv(y)).epsilon(1e-12));
  }

  SECTION("doubling the weights doubles the loss") {
    LossWeights w1{0.0, 8.0, 1e-3};
    LossWeights w2{0.0, 16.0, 2e-3};
    REQUIRE(total_loss(y, t, w2) == Catch::Approx(2.0 * total_loss(y, t, w1)).epsilon(1e-12));
  }

  SECTION("the perceptual slot must stay zero") {
    LossWeights w;
    w.beta_per = 0.5;
    REQUIRE_THROWS_AS(total_loss(y, t, w), InvalidArgument);
  }
}

TEST_CASE("decoder and loss gradients match finite differences") {
  const int h = 8, w = 8;
  for (uint64_t seed : {21ull, 22ull}) {
    const DecoderParams p = random_decoder(seed);
    const Tensor3 in = random_input(h, w, seed + 100);
    const GrayImage truth = random_image(h, w, seed + 200);
    LossWeights lw{0.0, 32.0, 2e-4};

    DecoderTrace tr;
    const GrayImage y = decoder_forward(in, p, &tr);
    DecoderGrads g;
    const Tensor3 d_in = decoder_backward(tr, p, total_loss_grad(y, truth, lw), g);

    auto loss_of = [&](const DecoderParams& pp) {
      return total_loss(decoder_forward(in, pp), truth, lw);
    };
    const double eps = 1e-5;
    double worst = 0.0;
    auto sweep = [&](ConvLayer DecoderParams::* layer, bool bias, int stride) {
      const ConvLayer& L = p.*layer;
      ConvLayer DecoderGrads::* gl =
          layer == &DecoderParams::c1
              ? &DecoderGrads::g1
              : (layer == &DecoderParams::c2 ? &DecoderGrads::g2 : &DecoderGrads::g3);
      const std::vector<double>& gvec = bias ? (g.*gl).b : (g.*gl).w;
      const size_t n = bias ? L.b.size() : L.w.size();
      for (size_t i = 0; i < n; i += stride) {
        DecoderParams pp = p;
        std::vector<double>& tv = bias ? (pp.*layer).b : (pp.*layer).w;
        tv[i] += eps;
        const double up = loss_of(pp);
        tv[i] -= 2 * eps;
        const double dn = loss_of(pp);
        worst = std::max(worst, grad_excess((up - dn) / (2 * eps), gvec[i], 1e-4));
      }
    };
    // full bias sweep, strided weight sweep covering all layers
    sweep(&DecoderParams::c1, true, 1);
    sweep(&DecoderParams::c2, true, 1);
    sweep(&DecoderParams::c3, true, 1);
    sweep(&DecoderParams::c1, false, 17);
    sweep(&DecoderParams::c2, false, 5);
    sweep(&DecoderParams::c3, false, 1);
    INFO("worst error in units of the 1e-4 allowance: " << worst);
    REQUIRE(worst <= 1.0);

    // the input gradient drives the encoder chain: spot-check it too
    Rng pick(seed + 7);
    for (int k = 0; k < 60; ++k) {
      const size_t i = pick.next_u64() % in.v.size();
      Tensor3 ii = in;
      ii.v[i] += eps;
      const double up = total_loss(decoder_forward(ii, p), truth, lw);
      ii.v[i] -= 2 * eps;
      const double dn = total_loss(decoder_forward(ii, p), truth, lw);
      REQUIRE(grad_excess((up - dn) / (2 * eps), d_in.v[i], 1e-4) <= 1.0);
    }
  }
}

TEST_CASE("end-to-end gradient through the spiking encoder") {
  // relaxed-forward differencing target on a 4x4 input
  const int n = 4, h = 4, w = 4;
  const FrameStack stack = random_stack(n, h, w, 31);
  EncoderParams enc;
  Rng er(31);
  enc.init_he(er);
  const DecoderParams dec = random_decoder(32);
  const GrayImage truth = random_image(h, w, 33);
  const LossWeights lw{0.0, 32.0, 2e-4};

  const EncoderOutput base = snn_forward(stack, enc, SpikeMode::relaxed);
  DecoderTrace tr;
  const GrayImage y = decoder_forward(assemble_decoder_input(base), dec, &tr);
  DecoderGrads gd;
  const Tensor3 d_in = decoder_backward(tr, dec, total_loss_grad(y, truth, lw), gd);
  Tensor3 d_feat(32, h, w), d_skip(8, h, w);
  std::copy(d_in.plane(0), d_in.plane(32), d_feat.v.begin());
  std::copy(d_in.plane(32), d_in.plane(40), d_skip.v.begin());
  const EncoderGrads ge = snn_backward(base.trace, enc, d_feat, d_skip);

  // finite differences re-run the relaxed forward with the reset gates frozen
  // at the base point, matching the constant-gate treatment in the backward
  auto frozen_forward = [&](const EncoderParams& pp) {
    const auto& btr = base.trace;
    Tensor3 u1(8, h, w), o1(8, h, w), u2(16, h, w), o2(16, h, w), u3(32, h, w), o3(32, h, w);
    Tensor3 feat(32, h, w), skip(8, h, w), raw(2, h, w);
    for (int t = 0; t < n; ++t) {
      Tensor3 x(2, h, w);
      std::copy(stack.frame(t, 0), stack.frame(t, 0) + 2 * h * w, x.v.begin());
      auto upd = [&](const Tensor3& cur, Tensor3& u, Tensor3& o, const LifConfig& cfg,
                     const std::vector<Tensor3>& base_o) {
        for (size_t i = 0; i < u.v.size(); ++i) {
          const double gate = t > 0 ? (1.0 - base_o[t - 1].v[i]) : 1.0;
          u.v[i] = cfg.alpha * u.v[i] * gate + cur.v[i];
          o.v[i] = surrogate_ramp(u.v[i], cfg);
        }
      };
      upd(conv2d_zero(x, pp.l1), u1, o1, pp.lif1, btr.o1);
      upd(conv2d_zero(o1, pp.l2), u2, o2, pp.lif2, btr.o2);
      Tensor3 z(24, h, w);
      std::copy(o1.v.begin(), o1.v.end(), z.v.begin());
      std::copy(o2.v.begin(), o2.v.end(), z.v.begin() + 8 * h * w);
      upd(conv2d_zero(z, pp.l3), u3, o3, pp.lif3, btr.o3);
      for (size_t i = 0; i < feat.v.size(); ++i) feat.v[i] += o3.v[i];
      for (size_t i = 0; i < skip.v.size(); ++i) skip.v[i] += o1.v[i];
      for (size_t i = 0; i < raw.v.size(); ++i) raw.v[i] += x.v[i];
    }
    for (double& v : feat.v) v /= n;
    for (double& v : skip.v) v /= n;
    for (double& v : raw.v) v /= n;
    Tensor3 in(DecoderParams::kInChannels, h, w);
    double* dst = in.v.data();
    dst = std::copy(feat.v.begin(), feat.v.end(), dst);
    dst = std::copy(skip.v.begin(), skip.v.end(), dst);
    std::copy(raw.v.begin(), raw.v.end(), dst);
    return total_loss(decoder_forward(in, dec), truth, lw);
  };

  const double eps = 1e-5;
  Rng pick(34);
  double worst = 0.0;
  auto check = [&](int layer, int count) {
    for (int k = 0; k < count; ++k) {
      EncoderParams pp = enc;
      std::vector<double>* wv = layer == 0 ? &pp.l1.w : (layer == 1 ? &pp.l2.w : &pp.l3.w);
      const std::vector<double>* gv =
          layer == 0 ? &ge.g1.w : (layer == 1 ? &ge.g2.w : &ge.g3.w);
      const size_t i = pick.next_u64() % wv->size();
      (*wv)[i] += eps;
      const double up = frozen_forward(pp);
      (*wv)[i] -= 2 * eps;
      const double dn = frozen_forward(pp);
      worst = std::max(worst, grad_excess((up - dn) / (2 * eps), (*gv)[i], 1e-3));
    }
  };
  check(0, 16);
  check(1, 30);
  check(2, 60);
  INFO("worst error in units of the 1e-3 allowance: " << worst);
  REQUIRE(worst <= 1.0);
}

TEST_CASE("training") {
  SECTION("zero epochs returns the seeded initialization unchanged") {
    std::vector<std::pair<FrameStack, GrayImage>> data;
    data.emplace_back(random_stack(3, 8, 8, 1), random_image(8, 8, 2));
    TrainConfig cfg;
    cfg.epochs = 0;
    cfg.seed = 42;
    const TrainResult r = train(data, cfg);
    EncoderParams enc_want;
    Rng rng(mix_seed(42, 0x1817));
    enc_want.init_he(rng);
    DecoderParams dec_want;
    dec_want.init_he(rng);
    REQUIRE(r.enc.l3.w == enc_want.l3.w);
    REQUIRE(r.dec.c2.w == dec_want.c2.w);
    REQUIRE(r.history.empty());
  }

  SECTION("same seed twice gives identical parameters; a different seed differs") {
    std::vector<std::pair<FrameStack, GrayImage>> data;
    for (uint64_t i = 0; i < 3; ++i)
      data.emplace_back(random_stack(3, 8, 8, i), random_image(8, 8, 50 + i));
    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.batch_size = 2;
    cfg.seed = 7;
    cfg.n_intervals = 3;
    const TrainResult a = train(data, cfg);
    const TrainResult b = train(data, cfg);
    REQUIRE(a.enc.l1.w == b.enc.l1.w);
    REQUIRE(a.enc.l3.w == b.enc.l3.w);
    REQUIRE(a.dec.c3.w == b.dec.c3.w);
    REQUIRE(a.dec.c3.b == b.dec.c3.b);
    for (size_t i = 0; i < a.history.size(); ++i)
      REQUIRE(a.history[i].loss == b.history[i].loss);
    cfg.seed = 8;
    const TrainResult c = train(data, cfg);
    REQUIRE(a.enc.l1.w != c.enc.l1.w);
  }

  SECTION("empty dataset and divergent losses are rejected") {
    TrainConfig cfg;
    REQUIRE_THROWS_AS(train({}, cfg), InvalidArgument);
  }

  SECTION("overfits a single small synthetic sample") {
    // one 32x32 sample, 500 steps; pixel loss must drop below 0.05
    SceneSpec scene;
    scene.width = 32;
    scene.height = 32;
    scene.fx = scene.fy = 120.0;
    scene.ppx = scene.ppy = 15.5;
    scene.eta = 0.2;
    scene.depth_target_m = 0.6;
    scene.depth_occluder_m = 0.15;
    Trajectory traj;
    traj.vx = 0.22;
    traj.t0_us = 0;
    traj.t1_us = 600000;
    traj.t_ref_us = 300000;
    scene.target_texture = make_noise_texture(96, 96, 20, 0.08, 1.0, 61);
    fit_texture_window(scene, traj);
    const auto [ox, oy] = swept_window(scene, traj, scene.depth_occluder_m);
    scene.occluder = make_fence_occluder(0.85, 6, 0, ox.second - ox.first, 0.4, 61);
    scene.occluder.phase_m += ox.first;
    auto [labeled, sample] = simulate_events(scene, traj, 61);

    const WarpParam psi = compute_psi(scene.fx, scene.fy, traj.vx, 0.0, scene.depth_target_m,
                                      (labeled.stream.t_min + labeled.stream.t_max) / 2);
    const SubpixelEventStream refocused = warp_events(labeled.stream, psi);
    FrameStack stack =
        stack_events(refocused, 5, {labeled.stream.t_min, labeled.stream.t_max});

    std::vector<std::pair<FrameStack, GrayImage>> data;
    data.emplace_back(std::move(stack), sample.occ_free_aps);

    TrainConfig cfg;
    cfg.epochs = 500;
    cfg.batch_size = 1;
    cfg.seed = 3;
    cfg.n_intervals = 5;
    cfg.learning_rate = 2e-4;
    cfg.t_max = 512;  // single cosine arc; restarts would bump the loss curve
    const TrainResult r = train(data, cfg);

    const EncoderOutput eo = snn_forward(data[0].first, r.enc);
    const GrayImage y = decoder_forward(assemble_decoder_input(eo), r.dec);
    const double final_pixel_loss = loss_pixel(y, sample.occ_free_aps);
    INFO("final pixel loss " << final_pixel_loss);
    REQUIRE(final_pixel_loss < 0.05);

    // Smoothed training-loss monotonicity. Adaptive-moment updates jitter on
    // the late plateau by up to ~1% of the loss for every configuration we
    // measured, so the 10-epoch moving average is required to be
    // non-increasing up to a 2% allowance, and the curve as a whole must
    // descend by an order of magnitude.
    auto ma10 = [&](size_t e) {
      double s = 0.0;
      for (size_t i = e; i < e + 10; ++i) s += r.history[i].loss;
      return s / 10.0;
    };
    for (size_t e = 0; e + 20 <= r.history.size(); e += 10)
      REQUIRE(ma10(e + 10) <= 1.02 * ma10(e));
    REQUIRE(ma10(r.history.size() - 10) < 0.1 * ma10(0));
  }
}

TEST_CASE("image quality metrics") {
  SECTION("psnr caps at 99 dB for identical images") {
    const GrayImage a = random_image(12, 12, 9);
    REQUIRE(psnr(a, a, 1.0) == 99.0);
  }

  SECTION("full-scale difference is 0 dB") {
    REQUIRE(psnr(GrayImage(8, 8, 0.0), GrayImage(8, 8, 255.0), 255.0) == 0.0);
  }

  SECTION("half the pixels off by peak gives 10*log10(2)") {
    GrayImage a(2, 4, 0.0), b(2, 4, 0.0);
    for (int x = 0; x < 4; ++x) b.at(0, x) = 255.0;
    REQUIRE(psnr(a, b, 255.0) == Catch::Approx(10.0 * std::log10(2.0)).margin(1e-9));
  }

  SECTION("psnr is symmetric and decreases with noise amplitude") {
    const GrayImage a = random_image(16, 16, 11);
    GrayImage noisy = a;
    Rng rng(12);
    std::vector<double> noise(a.v.size());
    for (double& v : noise) v = rng.normal();
    double prev = 1e30;
    for (double amp : {0.01, 0.05, 0.2, 0.5}) {
      for (size_t i = 0; i < a.v.size(); ++i) noisy.v[i] = a.v[i] + amp * noise[i];
      const double fwd = psnr(a, noisy, 1.0);
      REQUIRE(fwd == psnr(noisy, a, 1.0));
      REQUIRE(fwd < prev);
      prev = fwd;
    }
  }

  SECTION("ssim is 1 on identical images and symmetric") {
    const GrayImage a = random_image(16, 20, 13);
    REQUIRE(ssim(a, a) == Catch::Approx(1.0).margin(1e-12));
    const GrayImage b = random_image(16, 20, 14);
    REQUIRE(ssim(a, b) == Catch::Approx(ssim(b, a)).margin(1e-12));
    REQUIRE(ssim(a, b) < 1.0);
  }

  SECTION("shape and size preconditions") {
    const GrayImage a = random_image(16, 16, 1);
    REQUIRE_THROWS_AS(psnr(a, random_image(8, 8, 2), 1.0), InvalidArgument);
    REQUIRE_THROWS_AS(psnr(a, a, 0.0), InvalidArgument);
    REQUIRE_THROWS_AS(ssim(a, random_image(8, 8, 2)), InvalidArgument);
    REQUIRE_THROWS_AS(ssim(random_image(8, 8, 1), random_image(8, 8, 1)), InvalidArgument);
  }
}

TEST_CASE("reconstruction entry points") {
  SECTION("accumulation baseline maps empty streams to zeros") {
    SubpixelEventStream s;
    s.width = 8;
    s.height = 8;
    const GrayImage img = reconstruct_acc(s, 8, 8);
    for (double v : img.v) REQUIRE(v == 0.0);
  }

  SECTION("counts 0/2/4 normalize to 0/0.5/1") {
    SubpixelEventStream s;
    s.width = 3;
    s.height = 1;
    for (int k = 0; k < 2; ++k) s.events.push_back({k, 1.0, 0.0, 1});
    for (int k = 0; k < 4; ++k) s.events.push_back({k, 2.0, 0.0, -1});
    const GrayImage img = reconstruct_acc(s, 1, 3);
    REQUIRE(img.v[0] == 0.0);
    REQUIRE(img.v[1] == 0.5);
    REQUIRE(img.v[2] == 1.0);
  }

  SECTION("refocused accumulation ranks with the scene's occluder contrast") {
    SceneSpec scene;
    scene.width = 96;
    scene.height = 64;
    scene.fx = scene.fy = 320.0;
    scene.ppx = 47.5;
    scene.ppy = 31.5;
    scene.eta = 0.2;
    scene.depth_target_m = 0.6;
    scene.depth_occluder_m = 0.15;
    Trajectory traj;
    traj.vx = 0.06;
    traj.t0_us = 0;
    traj.t1_us = 600000;
    traj.t_ref_us = 300000;
    scene.target_texture = make_noise_texture(128, 128, 24, 0.08, 1.0, 71);
    fit_texture_window(scene, traj);
    const auto [ox, oy] = swept_window(scene, traj, scene.depth_occluder_m);
    scene.occluder = make_fence_occluder(0.88, 7, 0, ox.second - ox.first, 0.0, 71);
    scene.occluder.phase_m += ox.first;
    auto [labeled, sample] = simulate_events(scene, traj, 71);

    const int64_t t_ref = (labeled.stream.t_min + labeled.stream.t_max) / 2;
    const WarpParam psi = compute_psi(320, 320, traj.vx, 0.0, 0.6, t_ref);
    const GrayImage acc = reconstruct_acc(warp_events(labeled.stream, psi), 64, 96);

    // oracle: |log target - log occluder| per pixel at the reference view
    const double cam_x = traj.cam_x(static_cast<double>(t_ref));
    std::vector<double> contrast, counts;
    for (int y = 0; y < 64; ++y)
      for (int x = 0; x < 96; ++x) {
        const double ia = scene.target_intensity(cam_x, 0.0, x, y);
        const double io = scene.occluder.base_intensity;
        contrast.push_back(std::fabs(std::log(std::max(ia, 1.0 / 255)) -
                                     std::log(std::max(io, 1.0 / 255))));
        counts.push_back(acc.at(y, x));
      }
    const double rho = spearman(contrast, counts);
    INFO("rank correlation " << rho);
    REQUIRE(rho > 0.8);
  }

  SECTION("hybrid with an untrained zero decoder is flat 0.5") {
    EventStream s;
    s.width = 16;
    s.height = 16;
    s.t_min = 0;
    s.t_max = 1000;
    s.events.push_back({500, 8, 8, 1});
    EncoderParams enc;
    Rng rng(5);
    enc.init_he(rng);
    DecoderParams dec;  // zero
    const GrayImage y = reconstruct_hybrid(s, {0, 0, 500}, enc, dec, 4);
    for (double v : y.v) REQUIRE(v == 0.5);
  }
}

TEST_CASE("checkpoint container round trips") {
  EncoderParams enc;
  Rng rng(91);
  enc.init_he(rng);
  enc.lif2.alpha = 0.75;
  DecoderParams dec;
  dec.init_he(rng);
  const std::string path =
      (std::filesystem::temp_directory_path() / "esai_ckpt_test.esnn").string();
  save_checkpoint(enc, dec, path);
  const auto [enc2, dec2] = load_checkpoint(path);
  for (size_t i = 0; i < enc.l3.w.size(); ++i)
    REQUIRE(enc2.l3.w[i] == static_cast<double>(static_cast<float>(enc.l3.w[i])));
  for (size_t i = 0; i < dec.c1.b.size(); ++i)
    REQUIRE(dec2.c1.b[i] == static_cast<double>(static_cast<float>(dec.c1.b[i])));
  REQUIRE(enc2.lif2.alpha == static_cast<double>(static_cast<float>(0.75)));

  // history CSV emission
  const std::string hist =
      (std::filesystem::temp_directory_path() / "esai_hist_test.csv").string();
  write_history_csv({{0, 1.5, 10.0}, {1, 1.25, 11.0}}, hist);
  std::ifstream f(hist);
  std::string line;
  std::getline(f, line);
  REQUIRE(line == "epoch,loss,psnr_val");
  std::getline(f, line);
  REQUIRE(line.substr(0, 2) == "0,");
}
