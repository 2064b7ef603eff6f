#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "lumi/adam.hpp"
#include "lumi/dataset.hpp"
#include "lumi/gaussian_cloud.hpp"
#include "lumi/image.hpp"
#include "lumi/losses.hpp"
#include "lumi/pdm.hpp"
#include "lumi/prior.hpp"
#include "lumi/render.hpp"

namespace lumi {

struct TrainConfig {
  int iterations = 15000;
  int densify_until = 5000;
  int densify_interval = 100;
  int sh_degree_step = 1000;  // +1 band every N steps
  int sh_start_degree = 1;
  int sh_max_degree = 3;

  // Per-group learning rates; positions decay exponentially to the final value.
  float lr_position = 1.6e-4f;
  float lr_position_final = 1.6e-6f;
  float lr_sh = 2.5e-3f;
  float lr_opacity = 5e-2f;
  float lr_scale = 5e-3f;
  float lr_rotation = 1e-3f;
  float lr_structure = 5e-3f;
  float lr_depth = 5e-3f;
  float lr_illum = 5e-3f;
  float lr_noise = 1e-3f;
  float lr_pdm = 1e-3f;

  float theta = 0.5f;  // exposure target (0.45 suits over-exposed scenes)

  // Loss/component toggles (ablations and gradient-flow audits).
  bool use_exposure = true;
  bool use_prior = true;
  bool use_depth = true;
  bool use_denoise = true;
  bool use_rec = true;
  bool use_pdm = true;

  int pdm_stages = 3;
  int pdm_warmup = 0;  // steps before the PDM participates

  std::uint64_t seed = 0;
  int threads = 1;
  int tile_size = 16;
  float contrib_threshold = 1.0f / 255.0f;
  float transmittance_stop = 1e-4f;

  float densify_grad_threshold = 1.6e-4f;  // mean positional gradient norm, world units
  float prune_opacity = 0.005f;
  float clone_scale_fraction = 0.01f;  // of scene extent
  float split_scale_shrink = 1.6f;

  int depth_patch_size = 0;  // 0 = auto: 128 for frames >= 256 px, else 32
  PriorConfig prior_config;  // used when a view carries no precomputed prior

  int checkpoint_interval = 1000;
  bool verbose = false;

  RenderSettings render_settings() const {
    RenderSettings s;
    s.tile_size = tile_size;
    s.contrib_threshold = contrib_threshold;
    s.transmittance_stop = transmittance_stop;
    s.threads = threads;
    return s;
  }
  int resolved_depth_patch(int width, int height) const {
    if (depth_patch_size > 0) return depth_patch_size;
    return std::min(width, height) >= 256 ? 128 : 32;
  }
  void validate() const;  // throws DataError on inconsistent settings
};

TrainConfig train_config_from_json_file(const std::string& path);
std::string train_config_to_json(const TrainConfig& cfg);

struct TrainView {
  Camera camera;
  Image input;  // I_in
  Image prior;  // P target
  Image depth;  // D target
};

/// Everything one optimization step produces before the parameter update;
/// exposed separately so tests can audit gradient flow per loss term.
struct StepEvaluation {
  LossBundle losses;
  RenderOutput render;
  PdmTrace pdm;       // stages empty when the PDM is inactive
  Image final_image;  // R: PDM output, or the raw render when inactive
  GradientBundle cloud_grads;
  PdmGrads pdm_grads;
  int depth_degenerate_patches = 0;
};

/// Optimizer moments per parameter group; shapes track the cloud arrays across
/// densify/prune edits (new rows start at zero, removed rows are dropped).
struct AdamState {
  AdamMoments positions, rotations, log_scales, opacity, sh, structure, illum, depth, noise,
      pdm;
  std::int64_t step = 0;

  void resize_like(const GaussianCloud& cloud, std::size_t pdm_parameters);
  bool shapes_match(const GaussianCloud& cloud) const;
};

class Trainer {
 public:
  Trainer(const SceneDataset& dataset, TrainConfig cfg);

  /// Loss + gradient evaluation with no side effects.
  static StepEvaluation evaluate(const GaussianCloud& cloud, const PdmWeights& pdm,
                                 const TrainView& view, const TrainConfig& cfg,
                                 const std::array<float, 3>& background,
                                 std::uint64_t step_index);

  /// One optimization step: forward, backward, Adam update, quaternion
  /// renormalization, densification bookkeeping. Throws NumericsError with a
  /// per-term diagnostic on a non-finite loss.
  LossBundle step();

  /// Applies adaptive density control from the accumulated positional-gradient
  /// statistics; returns {cloned, split, pruned}.
  std::array<int, 3> densify_and_prune();

  /// Full schedule: per-step JSON-lines metric log, periodic checkpoints, and
  /// a final checkpoint. Returns the final checkpoint path.
  std::string train(const std::string& out_dir,
                    const std::function<void(int, const LossBundle&)>& on_step = {});

  const GaussianCloud& cloud() const { return cloud_; }
  /// Direct parameter access for tests and tooling; the trainer otherwise owns
  /// the cloud exclusively during optimization.
  GaussianCloud& cloud_mutable() { return cloud_; }
  const PdmWeights& pdm_weights() const { return pdm_; }
  const std::vector<TrainView>& views() const { return views_; }
  const std::array<float, 3>& background() const { return background_; }
  const TrainConfig& config() const { return cfg_; }
  int current_step() const { return step_; }
  float scene_extent() const { return scene_extent_; }

 private:
  void apply_adam(const GradientBundle& cloud_grads, const PdmGrads& pdm_grads);
  int pick_view(int step);

  TrainConfig cfg_;
  GaussianCloud cloud_;
  PdmWeights pdm_;
  std::vector<TrainView> views_;
  std::array<float, 3> background_{0.f, 0.f, 0.f};
  float scene_extent_ = 1.0f;
  int step_ = 0;

  AdamState state_;
  std::vector<float> densify_grad_accum_;
  std::vector<int> densify_count_;
  std::vector<int> view_order_;
  int view_order_epoch_ = -1;

 public:
  const AdamState& adam_state() const { return state_; }
};

}  // namespace lumi
