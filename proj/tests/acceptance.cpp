// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Run a subset with --only 1,2,5.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdarg>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "lumi/checkpoint.hpp"
#include "lumi/image_io.hpp"
#include "lumi/losses.hpp"
#include "lumi/metrics.hpp"
#include "lumi/pdm.hpp"
#include "lumi/prior.hpp"
#include "lumi/render.hpp"
#include "lumi/synth.hpp"
#include "lumi/trainer.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace lumi;
namespace fs = std::filesystem;

namespace {

struct Criterion {
  int id;
  std::string summary;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list args;
  va_start(args, f);
  std::vsnprintf(buf, sizeof buf, f, args);
  va_end(args);
  return buf;
}

// ---------------------------------------------------------------------------
// 1. Prior invariance: P is stable under global illumination scaling and
//    exactly zero on constant images.
Criterion criterion_prior_invariance() {
  Criterion c{1, "prior invariance under illumination scaling"};
  Timer timer;
  double worst = 0.0;
  bool zero_ok = true;

  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(1000 + seed);
    const Image img = testutil::textured_image<float>(48, 48, 3, rng, 0.15f, 0.95f);
    const Image base = extract_prior(img);
    for (float scale : {0.2f, 0.5f, 0.8f}) {
      Image scaled = img;
      for (float& v : scaled.data) v *= scale;
      const Image p = extract_prior(scaled);
      double mean_diff = 0.0;
      for (std::size_t i = 0; i < p.data.size(); ++i)
        mean_diff += std::abs(double(p.data[i]) - double(base.data[i]));
      worst = std::max(worst, mean_diff / double(p.data.size()));
    }
  }
  Image flat(32, 32, 3);
  for (int ch = 0; ch < 3; ++ch)
    std::fill(flat.plane(ch).begin(), flat.plane(ch).end(), 0.2f + 0.25f * float(ch));
  for (float v : extract_prior(flat).data) zero_ok = zero_ok && v == 0.0f;

  c.seconds = timer.seconds();
  c.passed = worst <= 1e-2 && zero_ok && c.seconds < 10.0;
  c.detail = fmt("worst mean |P(cI)-P(I)| = %.2e (<= 1e-2), P(const)==0 %s, %.1fs (< 10s)",
                 worst, zero_ok ? "exact" : "VIOLATED", c.seconds);
  return c;
}

// ---------------------------------------------------------------------------
// 2. Rasterizer oracle equivalence on 200 random scenes.
Criterion criterion_rasterizer_oracle() {
  Criterion c{2, "tiled rasterizer vs brute-force compositing oracle"};
  Timer timer;
  double worst = 0.0;

  RenderSettings settings;
  settings.exact = true;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Rng rng(2000 + seed);
    const int n = 1 + int(rng.below(32));
    const int w = 4 + int(rng.below(13)), h = 4 + int(rng.below(13));
    const auto cloud = testutil::random_cloud<float>(n, int(rng.below(4)), rng);
    const auto cam = testutil::test_camera<float>(w, h, &rng);
    const std::array<float, 3> bg = {float(rng.uniform()), float(rng.uniform()),
                                     float(rng.uniform())};
    const RenderOutput out = render(cloud, cam, bg, settings);
    const auto want = oracle::brute_force_render(cloud, cam, {bg[0], bg[1], bg[2]}, {});
    auto cmp = [&worst](const Image& a, const ImageD& b) {
      for (std::size_t i = 0; i < a.data.size(); ++i)
        worst = std::max(worst, std::abs(double(a.data[i]) - b.data[i]));
    };
    cmp(out.color, want.color);
    cmp(out.structure, want.structure);
    cmp(out.depth, want.depth);
    cmp(out.illum, want.illum);
    cmp(out.noise, want.noise);
  }
  c.seconds = timer.seconds();
  c.passed = worst <= 1e-5 && c.seconds < 60.0;
  c.detail = fmt("max abs channel diff = %.2e (<= 1e-5) over 200 scenes, %.1fs (< 60s)", worst,
                 c.seconds);
  return c;
}

// ---------------------------------------------------------------------------
// 3. Differentiability: finite differences vs analytic gradients for every
//    Gaussian parameter class, every PDM weight, and every loss adjoint.
Criterion criterion_differentiability() {
  Criterion c{3, "finite-difference gradient checks"};
  Timer timer;
  int failures = 0, checks = 0;

  auto fd_close = [&](double analytic, double fd) {
    ++checks;
    if (!testutil::close(analytic, fd, 1e-3, 1e-6)) ++failures;
  };

  // -- Rasterizer parameters, 40 trials.
  RenderSettingsT<double> settings;
  settings.exact = true;
  for (std::uint64_t trial = 0; trial < 40; ++trial) {
    Rng rng(3000 + trial);
    auto cloud = testutil::random_cloud<double>(2 + int(rng.below(4)), int(rng.below(4)), rng);
    const auto cam = testutil::test_camera<double>(6, 6, &rng);
    const std::array<double, 3> bg = {rng.uniform(), rng.uniform(), rng.uniform()};
    RenderAdjointsT<double> adj;
    adj.color = testutil::random_image<double>(6, 6, 3, rng, -1.0, 1.0);
    adj.structure = testutil::random_image<double>(6, 6, 1, rng, -1.0, 1.0);
    adj.depth = testutil::random_image<double>(6, 6, 1, rng, -1.0, 1.0);
    adj.illum = testutil::random_image<double>(6, 6, 3, rng, -1.0, 1.0);
    adj.noise = testutil::random_image<double>(6, 6, 3, rng, -1.0, 1.0);

    auto loss_of = [&] {
      const auto out = render(cloud, cam, bg, settings);
      double total = 0.0;
      auto dot = [&total](const ImageT<double>& a, const ImageT<double>& b) {
        for (std::size_t i = 0; i < a.data.size(); ++i) total += a.data[i] * b.data[i];
      };
      dot(out.color, adj.color);
      dot(out.structure, adj.structure);
      dot(out.depth, adj.depth);
      dot(out.illum, adj.illum);
      dot(out.noise, adj.noise);
      return total;
    };
    const auto out = render(cloud, cam, bg, settings);
    const auto grads = render_backward(cloud, cam, bg, out, adj, settings);

    const int active = (cloud.sh_degree + 1) * (cloud.sh_degree + 1);
    std::vector<std::pair<std::vector<double>*, const std::vector<double>*>> groups = {
        {&cloud.positions, &grads.positions},       {&cloud.rotations, &grads.rotations},
        {&cloud.log_scales, &grads.log_scales},     {&cloud.opacity_logits, &grads.opacity_logits},
        {&cloud.sh_coeffs, &grads.sh_coeffs},       {&cloud.structure_logits, &grads.structure_logits},
        {&cloud.illum_raw, &grads.illum_raw},       {&cloud.depth_logits, &grads.depth_logits},
        {&cloud.noise_raw, &grads.noise_raw}};
    const double h = 1e-5;
    for (auto& [params, analytic] : groups) {
      const bool is_sh = params == &cloud.sh_coeffs;
      for (std::size_t k = 0; k < params->size(); k += 2) {
        if (is_sh && int((k / 3) % 16) >= active) continue;
        const double saved = (*params)[k];
        (*params)[k] = saved + h;
        const double up = loss_of();
        (*params)[k] = saved - h;
        const double down = loss_of();
        (*params)[k] = saved;
        fd_close((*analytic)[k], (up - down) / (2 * h));
      }
    }
  }

  // -- PDM weights and image adjoints, 30 trials.
  for (std::uint64_t trial = 0; trial < 30; ++trial) {
    Rng rng(3100 + trial);
    const ImageD r0 = testutil::random_image<double>(6, 5, 3, rng);
    const ImageD noise = testutil::random_image<double>(6, 5, 3, rng, -0.4, 0.4);
    PdmWeightsT<double> w = PdmWeightsT<double>::zeros();
    for (auto* arr : {&w.w1, &w.b1, &w.w2, &w.b2, &w.w3, &w.b3})
      for (double& v : *arr) v = 0.25 * rng.normal();
    const ImageD weight_img = testutil::random_image<double>(6, 5, 3, rng, -1.0, 1.0);

    auto loss_of = [&] {
      const auto trace = pdm_forward(r0, noise, w);
      double total = 0.0;
      for (std::size_t i = 0; i < weight_img.data.size(); ++i)
        total += weight_img.data[i] * trace.output().data[i];
      return total;
    };
    const auto trace = pdm_forward(r0, noise, w);
    std::vector<ImageD> adj(3);
    adj[2] = weight_img;
    const auto grads = pdm_backward(trace, w, adj);

    const double h = 1e-6;
    std::vector<std::pair<std::vector<double>*, const std::vector<double>*>> groups = {
        {&w.w1, &grads.weights.w1}, {&w.b1, &grads.weights.b1}, {&w.w2, &grads.weights.w2},
        {&w.b2, &grads.weights.b2}, {&w.w3, &grads.weights.w3}, {&w.b3, &grads.weights.b3}};
    for (auto& [params, analytic] : groups) {
      const std::size_t stride = 1 + params->size() / 24;
      for (std::size_t k = 0; k < params->size(); k += stride) {
        const double saved = (*params)[k];
        (*params)[k] = saved + h;
        const double up = loss_of();
        (*params)[k] = saved - h;
        const double down = loss_of();
        (*params)[k] = saved;
        fd_close((*analytic)[k], (up - down) / (2 * h));
      }
    }
  }

  // -- Loss adjoints, 30 trials across all loss families.
  for (std::uint64_t trial = 0; trial < 30; ++trial) {
    Rng rng(3200 + trial);
    ImageD r = testutil::random_image<double>(7, 6, 3, rng, 0.15, 1.0);
    const ImageD input = testutil::random_image<double>(7, 6, 3, rng, 0.1, 0.9);
    const ImageD illum = testutil::random_image<double>(7, 6, 3, rng, 0.5, 1.5);
    const ImageD rk = testutil::random_image<double>(7, 6, 3, rng, 0.15, 1.0);
    ImageD dr = testutil::random_image<double>(7, 6, 1, rng);
    const ImageD d_target = testutil::random_image<double>(7, 6, 1, rng);

    const auto exp_res = exposure_loss(r, input, 0.5);
    const auto de_res = denoise_loss(r, rk);
    const auto rec_res = reconstruction_loss(r, illum, input);
    const auto depth_res = depth_loss(dr, d_target, 4, trial);

    const double h = 1e-6;
    for (std::size_t k = 0; k < r.data.size(); k += 5) {
      const double saved = r.data[k];
      auto probe = [&](auto&& fn, double analytic) {
        r.data[k] = saved + h;
        const double up = fn();
        r.data[k] = saved - h;
        const double down = fn();
        r.data[k] = saved;
        fd_close(analytic, (up - down) / (2 * h));
      };
      probe([&] { return exposure_loss(r, input, 0.5).value; }, exp_res.grad.data[k]);
      probe([&] { return denoise_loss(r, rk).value; }, de_res.grad_r.data[k]);
      probe([&] { return reconstruction_loss(r, illum, input).value; }, rec_res.grad_r.data[k]);
    }
    for (std::size_t k = 0; k < dr.data.size(); k += 5) {
      const double saved = dr.data[k];
      dr.data[k] = saved + h;
      const auto up = depth_loss(dr, d_target, 4, trial);
      dr.data[k] = saved - h;
      const auto down = depth_loss(dr, d_target, 4, trial);
      dr.data[k] = saved;
      fd_close(depth_res.grad.data[k],
               ((up.global_term + up.local_term) - (down.global_term + down.local_term)) /
                   (2 * h));
    }
  }

  c.seconds = timer.seconds();
  c.passed = failures == 0 && c.seconds < 300.0;
  c.detail = fmt("%d/%d finite-difference comparisons within 1e-3 rel / 1e-6 abs, %.1fs (< 5min)",
                 checks - failures, checks, c.seconds);
  return c;
}

// ---------------------------------------------------------------------------
// 4. Loss-formula fidelity against independent scalar oracles.
Criterion criterion_loss_fidelity() {
  Criterion c{4, "loss values vs scalar oracles and Eq-weighting recomputation"};
  Timer timer;
  double worst = 0.0;
  auto track = [&worst](double got, double want) {
    worst = std::max(worst, std::abs(got - want));
  };

  Rng rng(4000);
  for (int trial = 0; trial < 10; ++trial) {
    const ImageD r = testutil::random_image<double>(12, 10, 3, rng, 0.1, 1.0);
    const ImageD input = testutil::random_image<double>(12, 10, 3, rng, 0.1, 0.9);
    const ImageD illum = testutil::random_image<double>(12, 10, 3, rng, 0.4, 1.6);
    const ImageD rk = testutil::random_image<double>(12, 10, 3, rng, 0.1, 1.0);

    // Exposure: scalar L1 against the clamped modulated target.
    const double theta = 0.5;
    const double mean = input.mean();
    double exp_want = 0.0;
    for (std::size_t i = 0; i < r.data.size(); ++i)
      exp_want += std::abs(r.data[i] - std::clamp(theta / mean * input.data[i], 0.0, 1.0));
    exp_want /= double(r.data.size());
    track(exposure_loss(r, input, theta).value, exp_want);

    // PCC: textbook two-pass.
    const ImageD x = testutil::random_image<double>(16, 16, 1, rng);
    const ImageD y = testutil::random_image<double>(16, 16, 1, rng);
    std::vector<double> xv(x.data.begin(), x.data.end()), yv(y.data.begin(), y.data.end());
    track(pcc(x, y), oracle::two_pass_pcc(xv, yv));

    // TV + MSE.
    double mse = 0.0, tv = 0.0;
    for (std::size_t i = 0; i < r.data.size(); ++i)
      mse += (r.data[i] - rk.data[i]) * (r.data[i] - rk.data[i]);
    mse /= double(r.data.size());
    for (int ch = 0; ch < 3; ++ch)
      for (int yy = 0; yy < r.height; ++yy)
        for (int xx = 0; xx < r.width; ++xx) {
          if (xx + 1 < r.width) tv += std::abs(r.at(xx + 1, yy, ch) - r.at(xx, yy, ch));
          if (yy + 1 < r.height) tv += std::abs(r.at(xx, yy + 1, ch) - r.at(xx, yy, ch));
        }
    tv /= double(r.data.size());
    track(denoise_loss(r, rk).value, mse + tv);

    // SSIM via the direct per-window oracle, inside the reconstruction loss.
    ImageD out_img(r.width, r.height, 3);
    for (std::size_t i = 0; i < out_img.data.size(); ++i)
      out_img.data[i] = r.data[i] * illum.data[i];
    double l1 = 0.0;
    for (std::size_t i = 0; i < out_img.data.size(); ++i)
      l1 += std::abs(out_img.data[i] - input.data[i]);
    l1 /= double(out_img.data.size());
    const double ssim_want = oracle::windowed_ssim(out_img, input);
    const auto rec = reconstruction_loss(r, illum, input);
    track(rec.l1_term, l1);
    track(rec.ssim_term, 1.0 - ssim_want);
    track(rec.value, 0.8 * l1 + 0.2 * (1.0 - ssim_want));  // lambda = 0.2 pinned
  }

  // Eq-weighting recomputation: total = exp + 0.1 prior + 0.1 depth + de + rec.
  LossBundleT<double> bundle;
  bundle.exposure = 0.37;
  bundle.prior = 0.11;
  bundle.depth_global = 0.21;
  bundle.depth_local = 0.33;
  bundle.denoise = 0.07;
  bundle.rec_l1 = 0.19;
  bundle.rec_ssim = 0.23;
  bundle.total = bundle.recompute_total();
  const double want_total =
      0.37 + 0.1 * 0.11 + 0.1 * (0.21 + 0.33) + 0.07 + (0.8 * 0.19 + 0.2 * 0.23);
  track(bundle.total, want_total);

  c.seconds = timer.seconds();
  c.passed = worst <= 1e-5;
  c.detail = fmt("max |value - oracle| = %.2e (<= 1e-5), %.1fs", worst, c.seconds);
  return c;
}

// ---------------------------------------------------------------------------
// Shared end-to-end machinery for criteria 5 and 6.

struct RunMetrics {
  double psnr_out_vs_input = 0.0;   // (a)
  double mean_r = 0.0;              // (b)
  double l1_prior = 0.0;            // (c)
  double psnr_r_vs_clean = 0.0;     // (d), numerator
  double psnr_baseline = 0.0;       // (d), baseline
  double seconds = 0.0;
};

TrainConfig desk_config() {
  TrainConfig cfg;
  cfg.iterations = 3000;
  cfg.densify_until = 1500;
  // The library default threshold (a full-scene 3DGS convention) floods this
  // 64x64 desk scene with tens of thousands of primitives; a coarser cut
  // keeps the cloud in the low thousands with the same fit quality.
  cfg.densify_grad_threshold = 1.2e-3f;
  cfg.lr_structure = 1.5e-2f;
  cfg.seed = 7;
  cfg.threads = 2;
  cfg.checkpoint_interval = 0;
  return cfg;
}

RunMetrics run_desk_training(const SceneDataset& dataset, const TrainConfig& cfg,
                             const std::vector<Image>& references) {
  Timer timer;
  Trainer trainer(dataset, cfg);
  for (int i = 0; i < cfg.iterations; ++i) trainer.step();

  RunMetrics m;
  m.seconds = timer.seconds();
  const auto& views = trainer.views();
  const RenderSettings settings = cfg.render_settings();

  double psnr_a = 0.0, mean_r = 0.0, l1_p = 0.0, psnr_clean = 0.0, psnr_base = 0.0;
  for (std::size_t v = 0; v < views.size(); ++v) {
    const RenderOutput out =
        render(trainer.cloud(), views[v].camera, trainer.background(), settings);
    Image final_r = out.color;
    if (cfg.use_pdm) {
      const PdmTrace trace =
          pdm_forward(out.color, out.noise, trainer.pdm_weights(), cfg.pdm_stages);
      final_r = trace.output();
    }
    Image i_out(final_r.width, final_r.height, 3);
    for (std::size_t i = 0; i < i_out.data.size(); ++i)
      i_out.data[i] = final_r.data[i] * out.illum.data[i];

    psnr_a += double(psnr(i_out, views[v].input));
    mean_r += double(final_r.mean());
    l1_p += double(prior_loss(out.structure, views[v].prior).value);
    psnr_clean += double(psnr(final_r, references[v]));

    Image modulated = views[v].input;
    const float mod = cfg.theta / views[v].input.mean();
    for (float& val : modulated.data) val = std::clamp(mod * val, 0.0f, 1.0f);
    psnr_base += double(psnr(modulated, references[v]));
  }
  const double n = double(views.size());
  m.psnr_out_vs_input = psnr_a / n;
  m.mean_r = mean_r / n;
  m.l1_prior = l1_p / n;
  m.psnr_r_vs_clean = psnr_clean / n;
  m.psnr_baseline = psnr_base / n;
  return m;
}

struct DeskScene {
  SceneDataset dataset;
  std::vector<Image> references;
};

DeskScene build_desk_scene() {
  SynthSpec spec;
  spec.n_gaussians = 300;
  spec.n_views = 8;
  spec.resolution = 64;
  spec.degrade_gamma = 2.5f;
  spec.noise_sigma = 0.02f;
  spec.seed = 42;
  const std::string dir = testutil::temp_dir("acceptance_scene");
  const SynthResult synth = synth_dataset(spec, dir);
  DeskScene scene;
  scene.dataset = SceneDataset::load(synth.manifest_path);
  for (const auto& path : scene.dataset.reference_paths)
    scene.references.push_back(load_image(path));
  return scene;
}

Criterion criterion_end_to_end(const DeskScene& scene, RunMetrics& full_metrics) {
  Criterion c{5, "end-to-end desk-scale training"};
  Timer timer;
  full_metrics = run_desk_training(scene.dataset, desk_config(), scene.references);
  c.seconds = timer.seconds();

  const bool a = full_metrics.psnr_out_vs_input >= 30.0;
  const bool b = std::abs(full_metrics.mean_r - 0.5) <= 0.05;
  const bool cc = full_metrics.l1_prior <= 0.05;
  const bool d = full_metrics.psnr_r_vs_clean >= full_metrics.psnr_baseline + 5.0;
  const bool t = full_metrics.seconds < 900.0;
  c.passed = a && b && cc && d && t;
  c.detail = fmt(
      "(a) PSNR(I_out,I_in)=%.2f dB (>=30 %s); (b) |mean(R)-theta|=%.3f (<=0.05 %s); "
      "(c) L1(Pr,P)=%.4f (<=0.05 %s); (d) PSNR(R,clean)=%.2f vs baseline %.2f (+%.2f dB, >=5 "
      "%s); %.0fs (<15min %s)",
      full_metrics.psnr_out_vs_input, a ? "ok" : "FAIL", std::abs(full_metrics.mean_r - 0.5),
      b ? "ok" : "FAIL", full_metrics.l1_prior, cc ? "ok" : "FAIL",
      full_metrics.psnr_r_vs_clean, full_metrics.psnr_baseline,
      full_metrics.psnr_r_vs_clean - full_metrics.psnr_baseline, d ? "ok" : "FAIL",
      full_metrics.seconds, t ? "ok" : "FAIL");
  return c;
}

Criterion criterion_ablations(const DeskScene& scene, const RunMetrics& full_metrics) {
  Criterion c{6, "ablation direction check"};
  Timer timer;

  TrainConfig no_prior = desk_config();
  no_prior.use_prior = false;
  TrainConfig no_pdm = desk_config();
  no_pdm.use_pdm = false;
  no_pdm.use_denoise = false;
  TrainConfig no_depth = desk_config();
  no_depth.use_depth = false;

  const RunMetrics m_prior = run_desk_training(scene.dataset, no_prior, scene.references);
  const RunMetrics m_pdm = run_desk_training(scene.dataset, no_pdm, scene.references);
  const RunMetrics m_depth = run_desk_training(scene.dataset, no_depth, scene.references);

  const double full = full_metrics.psnr_r_vs_clean;
  const bool drop_prior = m_prior.psnr_r_vs_clean < full;
  const bool drop_pdm = m_pdm.psnr_r_vs_clean < full;
  const bool drop_depth = m_depth.psnr_r_vs_clean < full;
  c.seconds = timer.seconds();
  c.passed = drop_prior && drop_pdm && drop_depth;
  c.detail = fmt(
      "PSNR(R,clean): full=%.2f, -prior=%.2f (%s), -pdm=%.2f (%s), -depth=%.2f (%s); %.0fs",
      full, m_prior.psnr_r_vs_clean, drop_prior ? "drop ok" : "NO DROP",
      m_pdm.psnr_r_vs_clean, drop_pdm ? "drop ok" : "NO DROP", m_depth.psnr_r_vs_clean,
      drop_depth ? "drop ok" : "NO DROP", c.seconds);
  return c;
}

// ---------------------------------------------------------------------------
// 7. Determinism & persistence.
Criterion criterion_determinism() {
  Criterion c{7, "fixed-seed determinism and checkpoint persistence"};
  Timer timer;

  SynthSpec spec;
  spec.n_gaussians = 60;
  spec.n_views = 3;
  spec.resolution = 32;
  spec.seed = 5;
  const std::string dir = testutil::temp_dir("acceptance_determinism");
  const SynthResult synth = synth_dataset(spec, dir);
  const SceneDataset dataset = SceneDataset::load(synth.manifest_path);

  TrainConfig cfg;
  cfg.iterations = 120;
  cfg.densify_until = 100;
  cfg.seed = 3;
  cfg.threads = 2;
  cfg.checkpoint_interval = 0;

  auto run = [&](const std::string& out) {
    Trainer trainer(dataset, cfg);
    return trainer.train(out);
  };
  const std::string ck_a = run(dir + "/run_a");
  const std::string ck_b = run(dir + "/run_b");

  auto file_bytes = [](const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), {});
  };
  const bool checkpoints_identical = file_bytes(ck_a) == file_bytes(ck_b);

  // Round trip: save(load(ck)) is byte-identical and renders bit-identically.
  const Checkpoint ck = load_checkpoint(ck_a);
  const std::string ck_c = dir + "/roundtrip.ckpt";
  save_checkpoint(ck_c, ck.cloud, ck.pdm, ck.step);
  const bool roundtrip_identical = file_bytes(ck_a) == file_bytes(ck_c);

  const Checkpoint ck2 = load_checkpoint(ck_c);
  const RenderOutput img_a = render(ck.cloud, dataset.views[0].camera, dataset.background);
  const RenderOutput img_b = render(ck2.cloud, dataset.views[0].camera, dataset.background);
  const bool renders_identical = img_a.color.data == img_b.color.data &&
                                 img_a.structure.data == img_b.structure.data &&
                                 img_a.illum.data == img_b.illum.data;

  c.seconds = timer.seconds();
  c.passed = checkpoints_identical && roundtrip_identical && renders_identical;
  c.detail = fmt("checkpoints %s, round-trip %s, renders %s; %.0fs",
                 checkpoints_identical ? "bit-identical" : "DIFFER",
                 roundtrip_identical ? "bit-identical" : "DIFFER",
                 renders_identical ? "bit-identical" : "DIFFER", c.seconds);
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) {
      const std::string list = argv[++i];
      std::size_t pos = 0;
      while (pos < list.size()) {
        only.push_back(std::atoi(list.c_str() + pos));
        pos = list.find(',', pos);
        if (pos == std::string::npos) break;
        ++pos;
      }
    }
  }
  auto wanted = [&only](int id) {
    return only.empty() || std::find(only.begin(), only.end(), id) != only.end();
  };

  std::vector<Criterion> results;
  if (wanted(1)) results.push_back(criterion_prior_invariance());
  if (wanted(2)) results.push_back(criterion_rasterizer_oracle());
  if (wanted(3)) results.push_back(criterion_differentiability());
  if (wanted(4)) results.push_back(criterion_loss_fidelity());

  if (wanted(5) || wanted(6)) {
    const DeskScene scene = build_desk_scene();
    RunMetrics full_metrics;
    if (wanted(5)) {
      results.push_back(criterion_end_to_end(scene, full_metrics));
    } else {
      full_metrics = run_desk_training(scene.dataset, desk_config(), scene.references);
    }
    if (wanted(6)) results.push_back(criterion_ablations(scene, full_metrics));
  }
  if (wanted(7)) results.push_back(criterion_determinism());

  bool all_passed = true;
  for (const Criterion& c : results) {
    std::printf("[%s] criterion %d: %s — %s\n", c.passed ? "PASS" : "FAIL", c.id,
                c.summary.c_str(), c.detail.c_str());
    all_passed = all_passed && c.passed;
  }
  std::printf("%s: %zu/%zu criteria passed\n", all_passed ? "ACCEPTANCE PASSED" : "ACCEPTANCE FAILED",
              std::size_t(std::count_if(results.begin(), results.end(),
                                        [](const Criterion& c) { return c.passed; })),
              results.size());
  return all_passed ? 0 : 1;
}
