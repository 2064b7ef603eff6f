#include "lumi/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "lumi/activations.hpp"
#include "lumi/checkpoint.hpp"
#include "lumi/errors.hpp"
#include "lumi/image_io.hpp"
#include "lumi/random.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace lumi {

// ---------------------------------------------------------------------------
// Adam

void AdamMoments::remap(const std::vector<std::uint8_t>& keep, int stride,
                        std::size_t appended) {
  std::vector<float> nm, nv;
  nm.reserve(m.size());
  nv.reserve(v.size());
  for (std::size_t row = 0; row < keep.size(); ++row) {
    if (!keep[row]) continue;
    for (int k = 0; k < stride; ++k) {
      nm.push_back(m[row * stride + k]);
      nv.push_back(v[row * stride + k]);
    }
  }
  nm.resize(nm.size() + appended * stride, 0.0f);
  nv.resize(nv.size() + appended * stride, 0.0f);
  m = std::move(nm);
  v = std::move(nv);
}

void adam_step(std::span<float> params, std::span<const float> grads, AdamMoments& moments,
               float lr, const AdamParams& hp, std::int64_t t) {
  const double bc1 = 1.0 - std::pow(double(hp.beta1), double(t));
  const double bc2 = 1.0 - std::pow(double(hp.beta2), double(t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const float g = grads[i];
    moments.m[i] = hp.beta1 * moments.m[i] + (1.0f - hp.beta1) * g;
    moments.v[i] = hp.beta2 * moments.v[i] + (1.0f - hp.beta2) * g * g;
    const float mhat = float(moments.m[i] / bc1);
    const float vhat = float(moments.v[i] / bc2);
    params[i] -= lr * mhat / (std::sqrt(vhat) + hp.eps);
  }
}

void AdamState::resize_like(const GaussianCloud& cloud, std::size_t pdm_parameters) {
  positions.resize(cloud.positions.size());
  rotations.resize(cloud.rotations.size());
  log_scales.resize(cloud.log_scales.size());
  opacity.resize(cloud.opacity_logits.size());
  sh.resize(cloud.sh_coeffs.size());
  structure.resize(cloud.structure_logits.size());
  illum.resize(cloud.illum_raw.size());
  depth.resize(cloud.depth_logits.size());
  noise.resize(cloud.noise_raw.size());
  pdm.resize(pdm_parameters);
}

bool AdamState::shapes_match(const GaussianCloud& cloud) const {
  return positions.m.size() == cloud.positions.size() &&
         rotations.m.size() == cloud.rotations.size() &&
         log_scales.m.size() == cloud.log_scales.size() &&
         opacity.m.size() == cloud.opacity_logits.size() &&
         sh.m.size() == cloud.sh_coeffs.size() &&
         structure.m.size() == cloud.structure_logits.size() &&
         illum.m.size() == cloud.illum_raw.size() &&
         depth.m.size() == cloud.depth_logits.size() &&
         noise.m.size() == cloud.noise_raw.size();
}

// ---------------------------------------------------------------------------
// Config

void TrainConfig::validate() const {
  // A zero rate freezes its parameter group (the no-op-update contract);
  // negative or non-finite rates are configuration errors.
  auto rate = [](float v, const char* name) {
    if (!(v >= 0.0f) || !std::isfinite(v))
      throw DataError(std::string("train config: ") + name + " must be a finite rate >= 0");
  };
  rate(lr_position, "lr_position");
  rate(lr_position_final, "lr_position_final");
  rate(lr_sh, "lr_sh");
  rate(lr_opacity, "lr_opacity");
  rate(lr_scale, "lr_scale");
  rate(lr_rotation, "lr_rotation");
  rate(lr_structure, "lr_structure");
  rate(lr_depth, "lr_depth");
  rate(lr_illum, "lr_illum");
  rate(lr_noise, "lr_noise");
  rate(lr_pdm, "lr_pdm");
  if (iterations < 0) throw DataError("train config: iterations must be >= 0");
  if (densify_until > iterations)
    throw DataError("train config: densify_until must be <= iterations");
  if (pdm_stages < 2) throw DataError("train config: pdm_stages must be >= 2");
  if (sh_start_degree < 0 || sh_max_degree > GaussianCloud::kMaxShDegree ||
      sh_start_degree > sh_max_degree)
    throw DataError("train config: invalid SH degree schedule");
  if (!prior_config.valid()) throw DataError("train config: invalid prior settings");
}

namespace {

// Field table shared by the JSON reader and writer.
template <typename Cfg, typename Fn>
void for_each_config_field(Cfg& cfg, Fn&& fn) {
  fn("iterations", cfg.iterations);
  fn("densify_until", cfg.densify_until);
  fn("densify_interval", cfg.densify_interval);
  fn("sh_degree_step", cfg.sh_degree_step);
  fn("sh_start_degree", cfg.sh_start_degree);
  fn("sh_max_degree", cfg.sh_max_degree);
  fn("lr_position", cfg.lr_position);
  fn("lr_position_final", cfg.lr_position_final);
  fn("lr_sh", cfg.lr_sh);
  fn("lr_opacity", cfg.lr_opacity);
  fn("lr_scale", cfg.lr_scale);
  fn("lr_rotation", cfg.lr_rotation);
  fn("lr_structure", cfg.lr_structure);
  fn("lr_depth", cfg.lr_depth);
  fn("lr_illum", cfg.lr_illum);
  fn("lr_noise", cfg.lr_noise);
  fn("lr_pdm", cfg.lr_pdm);
  fn("theta", cfg.theta);
  fn("use_exposure", cfg.use_exposure);
  fn("use_prior", cfg.use_prior);
  fn("use_depth", cfg.use_depth);
  fn("use_denoise", cfg.use_denoise);
  fn("use_rec", cfg.use_rec);
  fn("use_pdm", cfg.use_pdm);
  fn("pdm_stages", cfg.pdm_stages);
  fn("pdm_warmup", cfg.pdm_warmup);
  fn("seed", cfg.seed);
  fn("threads", cfg.threads);
  fn("tile_size", cfg.tile_size);
  fn("contrib_threshold", cfg.contrib_threshold);
  fn("transmittance_stop", cfg.transmittance_stop);
  fn("densify_grad_threshold", cfg.densify_grad_threshold);
  fn("prune_opacity", cfg.prune_opacity);
  fn("clone_scale_fraction", cfg.clone_scale_fraction);
  fn("split_scale_shrink", cfg.split_scale_shrink);
  fn("depth_patch_size", cfg.depth_patch_size);
  fn("prior_sigma", cfg.prior_config.sigma);
  fn("prior_beta", cfg.prior_config.beta);
  fn("prior_gamma", cfg.prior_config.gamma);
  fn("checkpoint_interval", cfg.checkpoint_interval);
  fn("verbose", cfg.verbose);
}

}  // namespace

TrainConfig train_config_from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw IoError(path + ": " + e.what());
  }
  TrainConfig cfg;
  std::size_t recognized = 0;
  for_each_config_field(cfg, [&](const char* name, auto& field) {
    if (j.contains(name)) {
      field = j.at(name).get<std::decay_t<decltype(field)>>();
      ++recognized;
    }
  });
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for_each_config_field(cfg, [&](const char* name, auto&) { known = known || key == name; });
    if (!known) throw DataError("train config: unknown key \"" + key + "\"");
  }
  (void)recognized;
  cfg.validate();
  return cfg;
}

std::string train_config_to_json(const TrainConfig& cfg) {
  json j;
  for_each_config_field(const_cast<TrainConfig&>(cfg),
                        [&](const char* name, auto& field) { j[name] = field; });
  return j.dump(2);
}

// ---------------------------------------------------------------------------
// Trainer

Trainer::Trainer(const SceneDataset& dataset, TrainConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  background_ = dataset.background;

  cloud_ = init_cloud(dataset.init_points.positions, dataset.init_points.colors);
  cloud_.sh_degree = std::min(cfg_.sh_start_degree, cfg_.sh_max_degree);

  // Scene extent: max distance from the centroid of the init points.
  {
    Eigen::Vector3f centroid = Eigen::Vector3f::Zero();
    const int n = cloud_.size();
    for (int i = 0; i < n; ++i) centroid += cloud_.position(i);
    centroid /= float(n);
    float extent = 0.0f;
    for (int i = 0; i < n; ++i)
      extent = std::max(extent, (cloud_.position(i) - centroid).norm());
    scene_extent_ = std::max(extent, 1e-3f);
  }

  pdm_ = PdmWeights::he_init(mix_seed(cfg_.seed, 0x9d7));

  views_.reserve(dataset.views.size());
  for (const auto& v : dataset.views) {
    TrainView tv;
    tv.camera = v.camera;
    tv.input = load_image(v.image_path);
    if (tv.input.channels != 3)
      throw DataError("trainer: training views must be RGB: " + v.image_path);
    if (tv.input.width != v.camera.width || tv.input.height != v.camera.height)
      throw DataError("trainer: image size does not match camera: " + v.image_path);
    tv.prior = v.prior_path.empty() ? extract_prior(tv.input, cfg_.prior_config)
                                    : load_image(v.prior_path);
    // Missing depth targets fall back to the init-cloud synthesis; the target
    // stays fixed for the whole run.
    tv.depth = v.depth_path.empty()
                   ? synthesize_depth_target(cloud_, v.camera, cfg_.render_settings())
                   : load_image(v.depth_path);
    if (tv.prior.channels != 1 || tv.depth.channels != 1)
      throw DataError("trainer: priors and depths must be single-channel");
    if (!tv.prior.same_shape(Image(tv.input.width, tv.input.height, 1)) ||
        !tv.depth.same_shape(tv.prior))
      throw DataError("trainer: prior/depth shape mismatch for " + v.image_path);
    views_.push_back(std::move(tv));
  }

  state_.resize_like(cloud_, pdm_.parameter_count());
  densify_grad_accum_.assign(cloud_.size(), 0.0f);
  densify_count_.assign(cloud_.size(), 0);
}

StepEvaluation Trainer::evaluate(const GaussianCloud& cloud, const PdmWeights& pdm,
                                 const TrainView& view, const TrainConfig& cfg,
                                 const std::array<float, 3>& background,
                                 std::uint64_t step_index) {
  StepEvaluation ev;
  const RenderSettings settings = cfg.render_settings();
  ev.render = render(cloud, view.camera, background, settings);

  const bool pdm_active = cfg.use_pdm && std::int64_t(step_index) >= cfg.pdm_warmup;
  if (pdm_active) {
    ev.pdm = pdm_forward(ev.render.color, ev.render.noise, pdm, cfg.pdm_stages);
    ev.final_image = ev.pdm.output();
  } else {
    ev.final_image = ev.render.color;
  }

  RenderAdjoints adj;
  ImageT<float> grad_r(ev.final_image.width, ev.final_image.height, 3);
  std::vector<Image> grad_restored;
  if (pdm_active) grad_restored.assign(cfg.pdm_stages, Image());

  if (cfg.use_exposure) {
    auto exp = exposure_loss(ev.final_image, view.input, cfg.theta);
    ev.losses.exposure = exp.value;
    for (std::size_t i = 0; i < grad_r.data.size(); ++i) grad_r.data[i] += exp.grad.data[i];
  }
  if (cfg.use_prior) {
    auto pr = prior_loss(ev.render.structure, view.prior);
    ev.losses.prior = pr.value;
    adj.structure = std::move(pr.grad);
    for (float& v : adj.structure.data) v *= float(kStructureLossWeight);
  }
  if (cfg.use_depth) {
    const int patch = cfg.resolved_depth_patch(view.input.width, view.input.height);
    auto dl = depth_loss(ev.render.depth, view.depth, patch, mix_seed(cfg.seed, step_index));
    ev.losses.depth_global = dl.global_term;
    ev.losses.depth_local = dl.local_term;
    ev.depth_degenerate_patches = dl.degenerate_patches;
    adj.depth = std::move(dl.grad);
    for (float& v : adj.depth.data) v *= float(kStructureLossWeight);
  }
  if (cfg.use_denoise && pdm_active) {
    // R_K is read as the penultimate stage output; R itself is the last one.
    const Image& r_k = ev.pdm.stages[cfg.pdm_stages - 2].restored;
    auto de = denoise_loss(ev.final_image, r_k);
    ev.losses.denoise = de.value;
    for (std::size_t i = 0; i < grad_r.data.size(); ++i) grad_r.data[i] += de.grad_r.data[i];
    grad_restored[cfg.pdm_stages - 2] = std::move(de.grad_rk);
  }
  if (cfg.use_rec) {
    auto rec = reconstruction_loss(ev.final_image, ev.render.illum, view.input);
    ev.losses.rec_l1 = rec.l1_term;
    ev.losses.rec_ssim = rec.ssim_term;
    for (std::size_t i = 0; i < grad_r.data.size(); ++i) grad_r.data[i] += rec.grad_r.data[i];
    adj.illum = std::move(rec.grad_illum);
  }
  ev.losses.total = ev.losses.recompute_total();

  if (pdm_active) {
    grad_restored[cfg.pdm_stages - 1] = std::move(grad_r);
    ev.pdm_grads = pdm_backward(ev.pdm, pdm, grad_restored);
    adj.color = std::move(ev.pdm_grads.r0);
    adj.noise = std::move(ev.pdm_grads.noise_gs);
  } else {
    ev.pdm_grads.weights = PdmWeights::zeros();
    adj.color = std::move(grad_r);
  }

  ev.cloud_grads = render_backward(cloud, view.camera, background, ev.render, adj, settings);
  return ev;
}

int Trainer::pick_view(int step) {
  const int n_views = static_cast<int>(views_.size());
  const int epoch = step / n_views;
  if (epoch != view_order_epoch_) {
    view_order_.resize(n_views);
    for (int i = 0; i < n_views; ++i) view_order_[i] = i;
    Rng rng(mix_seed(cfg_.seed, 0xE90C + std::uint64_t(epoch)), 1);
    rng.shuffle(view_order_);
    view_order_epoch_ = epoch;
  }
  return view_order_[step % n_views];
}

LossBundle Trainer::step() {
  cloud_.sh_degree = std::min(cfg_.sh_start_degree + step_ / cfg_.sh_degree_step,
                              cfg_.sh_max_degree);

  const TrainView& view = views_[pick_view(step_)];
  StepEvaluation ev = evaluate(cloud_, pdm_, view, cfg_, background_, step_);

  if (!std::isfinite(ev.losses.total)) {
    std::ostringstream msg;
    msg << "non-finite loss at step " << step_ << ": exp=" << ev.losses.exposure
        << " prior=" << ev.losses.prior << " depth=" << ev.losses.depth_global << "+"
        << ev.losses.depth_local << " de=" << ev.losses.denoise
        << " rec=" << ev.losses.reconstruction();
    throw NumericsError(msg.str());
  }

  apply_adam(ev.cloud_grads, ev.pdm_grads);
  cloud_.renormalize_rotations();

  // Densification statistics: mean positional gradient norm per visible step.
  for (int i = 0; i < cloud_.size(); ++i) {
    const float gx = ev.cloud_grads.positions[3 * i];
    const float gy = ev.cloud_grads.positions[3 * i + 1];
    const float gz = ev.cloud_grads.positions[3 * i + 2];
    const float norm = std::sqrt(gx * gx + gy * gy + gz * gz);
    if (norm > 0.0f) {
      densify_grad_accum_[i] += norm;
      densify_count_[i] += 1;
    }
  }

  ++step_;
  if (step_ < cfg_.densify_until && cfg_.densify_interval > 0 &&
      step_ % cfg_.densify_interval == 0)
    densify_and_prune();

  return ev.losses;
}

void Trainer::apply_adam(const GradientBundle& g, const PdmGrads& pg) {
  const AdamParams hp;
  const std::int64_t t = ++state_.step;

  // Exponential decay of the position rate toward lr_position_final.
  float lr_pos = cfg_.lr_position;
  if (cfg_.iterations > 0 && cfg_.lr_position > 0.0f && cfg_.lr_position_final > 0.0f) {
    const double frac = std::clamp(double(step_) / double(cfg_.iterations), 0.0, 1.0);
    lr_pos = float(cfg_.lr_position *
                   std::pow(double(cfg_.lr_position_final) / double(cfg_.lr_position), frac));
  }

  adam_step(cloud_.positions, g.positions, state_.positions, lr_pos, hp, t);
  adam_step(cloud_.rotations, g.rotations, state_.rotations, cfg_.lr_rotation, hp, t);
  adam_step(cloud_.log_scales, g.log_scales, state_.log_scales, cfg_.lr_scale, hp, t);
  adam_step(cloud_.opacity_logits, g.opacity_logits, state_.opacity, cfg_.lr_opacity, hp, t);
  adam_step(cloud_.sh_coeffs, g.sh_coeffs, state_.sh, cfg_.lr_sh, hp, t);
  adam_step(cloud_.structure_logits, g.structure_logits, state_.structure, cfg_.lr_structure,
            hp, t);
  adam_step(cloud_.illum_raw, g.illum_raw, state_.illum, cfg_.lr_illum, hp, t);
  adam_step(cloud_.depth_logits, g.depth_logits, state_.depth, cfg_.lr_depth, hp, t);
  adam_step(cloud_.noise_raw, g.noise_raw, state_.noise, cfg_.lr_noise, hp, t);

  if (cfg_.use_pdm) {
    std::vector<float> flat_params, flat_grads;
    flat_params.reserve(pdm_.parameter_count());
    for (const auto* arr : {&pdm_.w1, &pdm_.b1, &pdm_.w2, &pdm_.b2, &pdm_.w3, &pdm_.b3})
      flat_params.insert(flat_params.end(), arr->begin(), arr->end());
    for (const auto* arr : {&pg.weights.w1, &pg.weights.b1, &pg.weights.w2, &pg.weights.b2,
                            &pg.weights.w3, &pg.weights.b3})
      flat_grads.insert(flat_grads.end(), arr->begin(), arr->end());
    adam_step(flat_params, flat_grads, state_.pdm, cfg_.lr_pdm, hp, t);
    std::size_t off = 0;
    for (auto* arr : {&pdm_.w1, &pdm_.b1, &pdm_.w2, &pdm_.b2, &pdm_.w3, &pdm_.b3}) {
      std::copy(flat_params.begin() + off, flat_params.begin() + off + arr->size(),
                arr->begin());
      off += arr->size();
    }
  }
}

std::array<int, 3> Trainer::densify_and_prune() {
  const int n = cloud_.size();
  if (n == 0) return {0, 0, 0};

  const float scale_bound = scene_extent_ * cfg_.clone_scale_fraction;
  Rng rng(mix_seed(cfg_.seed, 0xDE45), std::uint64_t(step_));

  std::vector<std::uint8_t> keep(n, 1);
  struct NewPrim {
    int source;
    Eigen::Vector3f position;
    float log_scale_delta;  // applied to all three axes
  };
  std::vector<NewPrim> additions;
  int cloned = 0, split = 0, pruned = 0;

  auto sample_offset = [&rng](const GaussianCloud& c, int i) {
    const Eigen::Vector3f s = c.scale(i);
    const Eigen::Vector3f n3(float(rng.normal()), float(rng.normal()), float(rng.normal()));
    return (c.rotation_matrix(i) * (s.cwiseProduct(n3))).eval();
  };

  for (int i = 0; i < n; ++i) {
    const float mean_grad =
        densify_count_[i] > 0 ? densify_grad_accum_[i] / float(densify_count_[i]) : 0.0f;
    if (mean_grad <= cfg_.densify_grad_threshold) continue;
    const float max_scale = cloud_.scale(i).maxCoeff();
    if (max_scale < scale_bound) {
      // Clone: keep the original, add a copy offset by noise drawn from the
      // primitive's own footprint.
      additions.push_back({i, cloud_.position(i) + sample_offset(cloud_, i), 0.0f});
      ++cloned;
    } else {
      // Split: replace with two samples at reduced scale.
      const float shrink = -std::log(cfg_.split_scale_shrink);
      additions.push_back({i, cloud_.position(i) + sample_offset(cloud_, i), shrink});
      additions.push_back({i, cloud_.position(i) + sample_offset(cloud_, i), shrink});
      keep[i] = 0;
      ++split;
    }
  }

  for (int i = 0; i < n; ++i) {
    if (!keep[i]) continue;
    if (sigmoid(cloud_.opacity_logits[i]) < cfg_.prune_opacity) {
      keep[i] = 0;
      ++pruned;
    }
  }

  if (cloned + split + pruned == 0) {
    std::fill(densify_grad_accum_.begin(), densify_grad_accum_.end(), 0.0f);
    std::fill(densify_count_.begin(), densify_count_.end(), 0);
    return {0, 0, 0};
  }

  GaussianCloud next;
  next.sh_degree = cloud_.sh_degree;
  const int kept = int(std::count(keep.begin(), keep.end(), std::uint8_t(1)));
  next.resize(kept + int(additions.size()));

  auto copy_row = [this, &next](int dst, int src, const NewPrim* add) {
    for (int k = 0; k < 3; ++k)
      next.positions[3 * dst + k] = add ? add->position[k] : cloud_.positions[3 * src + k];
    for (int k = 0; k < 4; ++k) next.rotations[4 * dst + k] = cloud_.rotations[4 * src + k];
    for (int k = 0; k < 3; ++k)
      next.log_scales[3 * dst + k] =
          cloud_.log_scales[3 * src + k] + (add ? add->log_scale_delta : 0.0f);
    next.opacity_logits[dst] = cloud_.opacity_logits[src];
    constexpr int shn = GaussianCloud::kShCoeffCount * 3;
    std::copy_n(cloud_.sh_coeffs.begin() + std::size_t(src) * shn, shn,
                next.sh_coeffs.begin() + std::size_t(dst) * shn);
    next.structure_logits[dst] = cloud_.structure_logits[src];
    for (int k = 0; k < 3; ++k) next.illum_raw[3 * dst + k] = cloud_.illum_raw[3 * src + k];
    next.depth_logits[dst] = cloud_.depth_logits[src];
    for (int k = 0; k < 3; ++k) next.noise_raw[3 * dst + k] = cloud_.noise_raw[3 * src + k];
  };

  int dst = 0;
  for (int i = 0; i < n; ++i)
    if (keep[i]) copy_row(dst++, i, nullptr);
  for (const NewPrim& add : additions) copy_row(dst++, add.source, &add);

  cloud_ = std::move(next);

  const std::size_t appended = additions.size();
  state_.positions.remap(keep, 3, appended);
  state_.rotations.remap(keep, 4, appended);
  state_.log_scales.remap(keep, 3, appended);
  state_.opacity.remap(keep, 1, appended);
  state_.sh.remap(keep, GaussianCloud::kShCoeffCount * 3, appended);
  state_.structure.remap(keep, 1, appended);
  state_.illum.remap(keep, 3, appended);
  state_.depth.remap(keep, 1, appended);
  state_.noise.remap(keep, 3, appended);

  densify_grad_accum_.assign(cloud_.size(), 0.0f);
  densify_count_.assign(cloud_.size(), 0);

  // Structural audit: the optimizer state must track every cloud array.
  if (!state_.shapes_match(cloud_))
    throw NumericsError("densify_and_prune: optimizer state out of sync with the cloud");
  if (cloud_.empty())
    std::fprintf(stderr, "warning: density control pruned every primitive at step %d\n",
                 step_);
  return {cloned, split, pruned};
}

std::string Trainer::train(const std::string& out_dir,
                           const std::function<void(int, const LossBundle&)>& on_step) {
  fs::create_directories(out_dir);
  fs::create_directories(fs::path(out_dir) / "checkpoints");

  {
    std::ofstream cfg_out(fs::path(out_dir) / "train_config.resolved.json");
    cfg_out << train_config_to_json(cfg_) << '\n';
  }
  std::ofstream log(fs::path(out_dir) / "metrics.jsonl");
  if (!log) throw IoError("cannot write metric log in " + out_dir);

  const auto checkpoint_path = [&](const std::string& tag) {
    return (fs::path(out_dir) / "checkpoints" / ("step_" + tag + ".ckpt")).string();
  };

  for (int i = 0; i < cfg_.iterations; ++i) {
    const LossBundle losses = step();
    json line{{"step", step_},
              {"exp", losses.exposure},
              {"prior", losses.prior},
              {"depth", losses.depth_global + losses.depth_local},
              {"de", losses.denoise},
              {"rec", losses.reconstruction()},
              {"total", losses.total},
              {"n_gaussians", cloud_.size()}};
    log << line.dump() << '\n';
    if (on_step) on_step(step_, losses);
    if (cfg_.checkpoint_interval > 0 && step_ % cfg_.checkpoint_interval == 0) {
      char tag[16];
      std::snprintf(tag, sizeof tag, "%06d", step_);
      save_checkpoint(checkpoint_path(tag), cloud_, pdm_, std::uint64_t(step_));
    }
  }

  const std::string final_path = (fs::path(out_dir) / "checkpoint_final.ckpt").string();
  save_checkpoint(final_path, cloud_, pdm_, std::uint64_t(step_));
  return final_path;
}

}  // namespace lumi
