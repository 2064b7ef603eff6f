#pragma once

#include <cstdint>
#include <string>

#include "lumi/dataset.hpp"
#include "lumi/gaussian_cloud.hpp"

namespace lumi {

/// Desk-scale synthetic scene: a ground-truth cloud is sampled and rendered to
/// clean reference views (held out), inputs are degraded by a gamma curve plus
/// Gaussian noise, and sparse noisy init points simulate an SfM estimate.
struct SynthSpec {
  int n_gaussians = 300;
  int n_views = 8;
  int resolution = 64;
  float degrade_gamma = 2.5f;
  float noise_sigma = 0.02f;
  std::uint64_t seed = 0;

  // Scene composition: a near-flat backdrop carries a faint tone texture;
  // a sparse set of smaller foreground primitives carries the color contrast
  // the structure prior keys on.
  float base_tone = 0.5f;
  float tone_jitter = 0.02f;
  float feature_fraction = 0.08f;
  float feature_contrast = 0.30f;
  float prior_sigma = 1.8f;  // derivative scale used for the emitted P targets
  // Deliberately poor "SfM" initialization: adverse illumination yields few,
  // noisy points, which is what the structure and depth guidance compensate.
  float init_point_fraction = 0.3f;
  float init_point_noise = 0.12f;

  void validate() const;  // throws DataError (e.g. fewer than 2 views)
};

SynthSpec synth_spec_from_json_file(const std::string& path);

struct SynthResult {
  std::string manifest_path;
  GaussianCloud ground_truth;
  std::vector<Camera> cameras;
};

/// Writes the dataset directory (degraded views, clean references, priors,
/// depth targets, PLY points, JSON manifest); byte-identical for a fixed seed.
SynthResult synth_dataset(const SynthSpec& spec, const std::string& out_dir);

}  // namespace lumi
