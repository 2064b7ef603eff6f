#include "lumi/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include <Eigen/Geometry>
#include <nlohmann/json.hpp>

#include "lumi/activations.hpp"
#include "lumi/errors.hpp"
#include "lumi/image_io.hpp"
#include "lumi/prior.hpp"
#include "lumi/random.hpp"
#include "lumi/sh.hpp"
#include "lumi/render.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace lumi {

void SynthSpec::validate() const {
  if (n_views < 2) throw DataError("synth: need at least 2 views");
  if (n_gaussians < 4) throw DataError("synth: need at least 4 primitives");
  if (resolution < 16) throw DataError("synth: resolution must be >= 16");
  if (!(degrade_gamma > 0.0f)) throw DataError("synth: gamma must be > 0");
  if (noise_sigma < 0.0f) throw DataError("synth: noise sigma must be >= 0");
}

SynthSpec synth_spec_from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw IoError(path + ": " + e.what());
  }
  SynthSpec s;
  s.n_gaussians = j.value("n_gaussians", s.n_gaussians);
  s.n_views = j.value("n_views", s.n_views);
  s.resolution = j.value("resolution", s.resolution);
  s.degrade_gamma = j.value("gamma", s.degrade_gamma);
  s.noise_sigma = j.value("noise_sigma", s.noise_sigma);
  s.seed = j.value("seed", s.seed);
  s.base_tone = j.value("base_tone", s.base_tone);
  s.tone_jitter = j.value("tone_jitter", s.tone_jitter);
  s.feature_fraction = j.value("feature_fraction", s.feature_fraction);
  s.feature_contrast = j.value("feature_contrast", s.feature_contrast);
  s.prior_sigma = j.value("prior_sigma", s.prior_sigma);
  s.init_point_fraction = j.value("init_point_fraction", s.init_point_fraction);
  s.init_point_noise = j.value("init_point_noise", s.init_point_noise);
  s.validate();
  return s;
}

namespace {

Camera ring_camera(int view, int n_views, int resolution) {
  // Cameras on a shallow arc at distance 4, all aimed at the world origin
  // where the scene sits.
  Camera cam;
  cam.width = cam.height = resolution;
  cam.fx = cam.fy = 1.2f * float(resolution);
  cam.cx = cam.cy = 0.5f * float(resolution);
  cam.near_clip = 0.1f;
  cam.far_clip = 20.0f;

  const float span = 0.7f;  // radians across the arc
  const float angle = (n_views == 1 ? 0.0f : (float(view) / float(n_views - 1) - 0.5f)) * span;
  const float elevation = 0.12f * std::sin(2.4f * float(view));
  const Eigen::Vector3f pos(4.0f * std::sin(angle), 4.0f * std::sin(elevation),
                            -4.0f * std::cos(angle) * std::cos(elevation));

  const Eigen::Vector3f forward = (-pos).normalized();  // toward the origin
  Eigen::Vector3f up(0.0f, 1.0f, 0.0f);
  const Eigen::Vector3f right = up.cross(forward).normalized();
  up = forward.cross(right);
  Eigen::Matrix3f r_wc;
  r_wc.row(0) = right;
  r_wc.row(1) = up;
  r_wc.row(2) = forward;
  cam.rotation = r_wc;
  cam.translation = -r_wc * pos;
  return cam;
}

GaussianCloud sample_ground_truth(const SynthSpec& spec, Rng& rng) {
  const int n_features = std::max(1, int(std::lround(spec.feature_fraction * spec.n_gaussians)));
  const int n_backdrop = spec.n_gaussians - n_features;
  const int grid = std::max(2, int(std::lround(std::sqrt(double(n_backdrop)))));

  GaussianCloud gt;
  gt.resize(spec.n_gaussians);
  gt.sh_degree = 0;

  // Backdrop: a jittered grid on the z=0 plane, wide enough that every ring
  // camera sees backdrop (not background) across the whole frame.
  const float half = 2.6f;
  const float spacing = 2.0f * half / float(grid - 1);
  int row = 0;
  for (int gy = 0; gy < grid && row < n_backdrop; ++gy)
    for (int gx = 0; gx < grid && row < n_backdrop; ++gx, ++row) {
      gt.positions[3 * row + 0] = -half + spacing * gx + float(rng.uniform(-0.1, 0.1)) * spacing;
      gt.positions[3 * row + 1] = -half + spacing * gy + float(rng.uniform(-0.1, 0.1)) * spacing;
      gt.positions[3 * row + 2] = float(rng.uniform(-0.05, 0.05));
      gt.rotations[4 * row] = 1.0f;
      const float s = spacing * 0.75f;
      gt.log_scales[3 * row + 0] = std::log(s);
      gt.log_scales[3 * row + 1] = std::log(s);
      gt.log_scales[3 * row + 2] = std::log(0.02f);
      gt.opacity_logits[row] = logit(0.95f);
      for (int c = 0; c < 3; ++c) {
        const float tone =
            spec.base_tone + spec.tone_jitter * float(2.0 * rng.uniform() - 1.0);
        gt.sh_coeffs[(std::size_t(row) * GaussianCloud::kShCoeffCount) * 3 + c] =
            (tone - 0.5f) / kSh0;
      }
      gt.structure_logits[row] = logit(0.5f);
      gt.depth_logits[row] = logit(0.5f);
    }
  // Any leftover rows (grid rounding) join the features.
  const int feature_begin = row;

  for (int i = feature_begin; i < spec.n_gaussians; ++i) {
    gt.positions[3 * i + 0] = float(rng.uniform(-1.1, 1.1));
    gt.positions[3 * i + 1] = float(rng.uniform(-1.1, 1.1));
    gt.positions[3 * i + 2] = float(rng.uniform(-0.9, -0.25));
    gt.rotations[4 * i] = 1.0f;
    const float s = float(rng.uniform(0.04, 0.10));
    for (int k = 0; k < 3; ++k) gt.log_scales[3 * i + k] = std::log(s * (k == 2 ? 0.5f : 1.0f));
    gt.opacity_logits[i] = logit(0.9f);

    // Color contrast orthogonal to the gray axis keeps the mean tone stable
    // while giving the spectral prior strong chroma edges.
    Eigen::Vector3f dir(float(rng.normal()), float(rng.normal()), float(rng.normal()));
    dir -= Eigen::Vector3f::Constant(dir.sum() / 3.0f);
    if (dir.norm() < 1e-4f) dir = Eigen::Vector3f(1.0f, -1.0f, 0.0f);
    dir.normalize();
    for (int c = 0; c < 3; ++c) {
      const float tone =
          std::clamp(spec.base_tone + spec.feature_contrast * dir[c], 0.05f, 0.95f);
      gt.sh_coeffs[(std::size_t(i) * GaussianCloud::kShCoeffCount) * 3 + c] =
          (tone - 0.5f) / kSh0;
    }
    gt.structure_logits[i] = logit(0.5f);
    gt.depth_logits[i] = logit(0.5f);
  }
  return gt;
}

}  // namespace

SynthResult synth_dataset(const SynthSpec& spec, const std::string& out_dir) {
  spec.validate();
  fs::create_directories(out_dir);
  for (const char* sub : {"views", "references", "priors", "depths"})
    fs::create_directories(fs::path(out_dir) / sub);

  Rng scene_rng(mix_seed(spec.seed, 0x5ce7e), 2);
  SynthResult result;
  result.ground_truth = sample_ground_truth(spec, scene_rng);

  RenderSettings settings;
  settings.threads = 1;

  SceneDataset ds;
  ds.root = out_dir;
  ds.background = {0.0f, 0.0f, 0.0f};

  char name[64];
  for (int v = 0; v < spec.n_views; ++v) {
    const Camera cam = ring_camera(v, spec.n_views, spec.resolution);
    result.cameras.push_back(cam);

    Image clean = render(result.ground_truth, cam, ds.background, settings).color;
    clean.clamp(0.0f, 1.0f);

    // Degradation: per-channel gamma curve plus i.i.d. Gaussian noise.
    Image degraded = clean;
    Rng noise_rng(mix_seed(spec.seed, 0xA01 + std::uint64_t(v)), 3);
    for (float& value : degraded.data) {
      value = std::pow(value, spec.degrade_gamma);
      if (spec.noise_sigma > 0.0f) value += spec.noise_sigma * float(noise_rng.normal());
      value = std::clamp(value, 0.0f, 1.0f);
    }

    std::snprintf(name, sizeof name, "views/view_%03d.png", v);
    const std::string view_path = (fs::path(out_dir) / name).string();
    save_image(degraded, view_path);
    std::snprintf(name, sizeof name, "references/ref_%03d.png", v);
    const std::string ref_path = (fs::path(out_dir) / name).string();
    save_image(clean, ref_path);

    // The prior comes from the degraded input exactly as in training, and the
    // depth target from the ground-truth geometry.
    const Image reloaded = load_image(view_path);  // quantized like the trainer will see it
    std::snprintf(name, sizeof name, "priors/prior_%03d.pfm", v);
    const std::string prior_path = (fs::path(out_dir) / name).string();
    PriorConfig prior_cfg;
    prior_cfg.sigma = spec.prior_sigma;
    save_image(extract_prior(reloaded, prior_cfg), prior_path);
    std::snprintf(name, sizeof name, "depths/depth_%03d.pfm", v);
    const std::string depth_path = (fs::path(out_dir) / name).string();
    save_image(synthesize_depth_target(result.ground_truth, cam, settings), depth_path);

    SceneView view;
    view.camera = cam;
    view.image_path = view_path;
    view.prior_path = prior_path;
    view.depth_path = depth_path;
    ds.views.push_back(std::move(view));
    ds.reference_paths.push_back(ref_path);
  }

  // Sparse noisy init points: a subsample of the true centers, perturbed, with
  // colors as a degraded camera would observe them.
  {
    Rng pts_rng(mix_seed(spec.seed, 0xB0B), 4);
    PointCloud pc;
    const int n = result.ground_truth.size();
    const int n_features = std::max(1, int(std::lround(spec.feature_fraction * spec.n_gaussians)));
    const int feature_begin = n - n_features;
    for (int i = 0; i < n; ++i) {
      // Feature primitives are small and dark in the degraded views; a sparse
      // estimator misses most of them, so they are heavily under-sampled here.
      const double keep = i >= feature_begin ? 0.1 * spec.init_point_fraction
                                             : spec.init_point_fraction;
      if (pts_rng.uniform() > keep) continue;
      for (int k = 0; k < 3; ++k)
        pc.positions.push_back(result.ground_truth.positions[3 * i + k] +
                               spec.init_point_noise * float(pts_rng.normal()));
      for (int c = 0; c < 3; ++c) {
        const float tone = std::clamp(
            kSh0 * result.ground_truth
                        .sh_coeffs[(std::size_t(i) * GaussianCloud::kShCoeffCount) * 3 + c] +
                0.5f,
            0.0f, 1.0f);
        pc.colors.push_back(std::pow(tone, spec.degrade_gamma));
      }
    }
    if (pc.size() < 4)  // pathological subsample; keep every center instead
      for (int i = 0; i < n; ++i) {
        for (int k = 0; k < 3; ++k)
          pc.positions.push_back(result.ground_truth.positions[3 * i + k]);
        pc.colors.insert(pc.colors.end(), {0.3f, 0.3f, 0.3f});
      }
    save_ply(pc, (fs::path(out_dir) / "points.ply").string());
    ds.init_points = std::move(pc);
  }

  result.manifest_path = (fs::path(out_dir) / "scene.json").string();
  ds.save_manifest(result.manifest_path);
  return result;
}

}  // namespace lumi
