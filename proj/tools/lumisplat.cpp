// lumisplat: reference-free multi-channel Gaussian-splatting pipeline.
//
// Subcommands: extract-prior, synth, train, render, eval. Exit codes:
//   0 success, 1 usage error, 2 data/file error, 3 numerical failure.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "lumi/checkpoint.hpp"
#include "lumi/dataset.hpp"
#include "lumi/errors.hpp"
#include "lumi/image_io.hpp"
#include "lumi/metrics.hpp"
#include "lumi/pdm.hpp"
#include "lumi/prior.hpp"
#include "lumi/render.hpp"
#include "lumi/synth.hpp"
#include "lumi/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct GlobalFlags {
  std::uint64_t seed = 0;
  bool seed_given = false;
  int threads = 0;  // 0 = logical cores
  bool verbose = false;
  bool json_output = false;

  int resolved_threads() const {
    if (threads > 0) return threads;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : int(hw);
  }
};

void emit(const GlobalFlags& flags, const json& machine, const std::string& human) {
  if (flags.json_output)
    std::printf("%s\n", machine.dump().c_str());
  else
    std::printf("%s\n", human.c_str());
}

int run_extract_prior(const GlobalFlags& flags, const std::string& input,
                      const std::string& output, const lumi::PriorConfig& cfg,
                      const std::string& preview) {
  const lumi::Image img = lumi::load_image(input);
  const lumi::Image prior = lumi::extract_prior(img, cfg);
  lumi::save_image(prior, output);
  if (!preview.empty()) lumi::save_image(prior, preview);
  emit(flags, json{{"output", output}}, "prior written to " + output);
  return 0;
}

int run_synth(const GlobalFlags& flags, const std::string& spec_path, const std::string& out) {
  lumi::SynthSpec spec;
  if (!spec_path.empty()) spec = lumi::synth_spec_from_json_file(spec_path);
  if (flags.seed_given) spec.seed = flags.seed;
  const lumi::SynthResult result = lumi::synth_dataset(spec, out);

  json resolved{{"n_gaussians", spec.n_gaussians},
                {"n_views", spec.n_views},
                {"resolution", spec.resolution},
                {"gamma", spec.degrade_gamma},
                {"noise_sigma", spec.noise_sigma},
                {"seed", spec.seed},
                {"base_tone", spec.base_tone},
                {"tone_jitter", spec.tone_jitter},
                {"feature_fraction", spec.feature_fraction},
                {"feature_contrast", spec.feature_contrast},
                {"init_point_fraction", spec.init_point_fraction},
                {"init_point_noise", spec.init_point_noise}};
  std::ofstream(fs::path(out) / "synth_spec.resolved.json") << resolved.dump(2) << '\n';

  emit(flags, json{{"manifest", result.manifest_path}},
       "scene written to " + result.manifest_path);
  return 0;
}

int run_train(const GlobalFlags& flags, const std::string& scene, const std::string& config,
              const std::string& out) {
  lumi::TrainConfig cfg;
  if (!config.empty()) cfg = lumi::train_config_from_json_file(config);
  if (flags.seed_given) cfg.seed = flags.seed;
  cfg.threads = flags.resolved_threads();
  cfg.verbose = cfg.verbose || flags.verbose;

  const lumi::SceneDataset dataset = lumi::SceneDataset::load(scene);
  lumi::Trainer trainer(dataset, cfg);
  float last_total = 0.0f;
  const std::string final_path =
      trainer.train(out, [&](int step, const lumi::LossBundle& losses) {
        last_total = losses.total;
        if (flags.verbose && step % 100 == 0)
          std::fprintf(stderr, "step %d total %.5f (N=%d)\n", step, losses.total,
                       trainer.cloud().size());
      });
  emit(flags,
       json{{"checkpoint", final_path},
            {"steps", trainer.current_step()},
            {"n_gaussians", trainer.cloud().size()},
            {"final_total", last_total}},
       "training finished: " + final_path);
  return 0;
}

int run_render(const GlobalFlags& flags, const std::string& checkpoint,
               const std::string& camera_path, const std::string& prefix) {
  const lumi::Checkpoint ck = lumi::load_checkpoint(checkpoint);
  const lumi::Camera cam = lumi::camera_from_json_file(camera_path);
  lumi::RenderSettings settings;
  settings.threads = flags.resolved_threads();
  const lumi::RenderOutput out = lumi::render(ck.cloud, cam, {0.f, 0.f, 0.f}, settings);

  // Bounded maps as PNG previews, unbounded ones as PFM floats.
  lumi::save_image(out.color, prefix + "_r0.png");
  lumi::save_image(out.structure, prefix + "_pr.png");
  lumi::save_image(out.depth, prefix + "_dr.png");
  lumi::save_image(out.illum, prefix + "_lr.pfm");
  lumi::save_image(out.noise, prefix + "_ngs.pfm");

  const lumi::RenderStats stats = lumi::render_stats(out);
  emit(flags,
       json{{"prefix", prefix},
            {"contributors_mean", stats.contributors_mean},
            {"contributors_max", stats.contributors_max},
            {"culled", stats.culled},
            {"skipped", stats.skipped}},
       "rendered " + prefix + "_{r0,pr,dr}.png and _{lr,ngs}.pfm");
  return 0;
}

int run_eval(const std::string& render_path, const std::string& ref_path) {
  const lumi::Image a = lumi::load_image(render_path);
  const lumi::Image b = lumi::load_image(ref_path);
  const json line{{"psnr", lumi::psnr(a, b)}, {"ssim", lumi::ssim(a, b)}};
  std::printf("%s\n", line.dump().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"reference-free multi-channel Gaussian splatting"};
  app.require_subcommand(1);

  GlobalFlags flags;
  app.add_flag("--verbose", flags.verbose, "progress logging on stderr");
  app.add_flag("--json", flags.json_output, "machine-readable stdout");
  app.add_option("--threads", flags.threads, "tile worker cap (default: logical cores)");
  auto* seed_opt = app.add_option("--seed", flags.seed, "override the configured RNG seed");

  std::string input, output, preview, spec_path, out_dir, scene, config, checkpoint,
      camera_path, prefix, render_path, ref_path;
  lumi::PriorConfig prior_cfg;

  auto* extract = app.add_subcommand("extract-prior", "illumination-invariant structure map");
  extract->add_option("--input", input, "input PNG")->required();
  extract->add_option("--output", output, "output PFM")->required();
  extract->add_option("--sigma", prior_cfg.sigma, "derivative scale");
  extract->add_option("--beta", prior_cfg.beta, "spectral-slope weight");
  extract->add_option("--gamma", prior_cfg.gamma, "spectral-curvature weight");
  extract->add_option("--preview", preview, "optional PNG preview");

  auto* synth = app.add_subcommand("synth", "generate a synthetic training scene");
  synth->add_option("--spec", spec_path, "JSON spec (defaults when omitted)");
  synth->add_option("--out", out_dir, "output directory")->required();

  auto* train = app.add_subcommand("train", "reference-free optimization");
  train->add_option("--scene", scene, "scene manifest JSON")->required();
  train->add_option("--config", config, "train config JSON");
  train->add_option("--out", out_dir, "output directory")->required();

  auto* render_cmd = app.add_subcommand("render", "render all channels from a checkpoint");
  render_cmd->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  render_cmd->add_option("--camera", camera_path, "camera JSON")->required();
  render_cmd->add_option("--out-prefix", prefix, "output path prefix")->required();

  auto* eval_cmd = app.add_subcommand("eval", "PSNR/SSIM between two images");
  eval_cmd->add_option("--render", render_path, "rendered image")->required();
  eval_cmd->add_option("--ref", ref_path, "reference image")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  flags.seed_given = seed_opt->count() > 0;

  try {
    if (extract->parsed()) return run_extract_prior(flags, input, output, prior_cfg, preview);
    if (synth->parsed()) return run_synth(flags, spec_path, out_dir);
    if (train->parsed()) return run_train(flags, scene, config, out_dir);
    if (render_cmd->parsed()) return run_render(flags, checkpoint, camera_path, prefix);
    if (eval_cmd->parsed()) return run_eval(render_path, ref_path);
  } catch (const lumi::NumericsError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 3;
  } catch (const lumi::IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const lumi::DataError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 1;
}
