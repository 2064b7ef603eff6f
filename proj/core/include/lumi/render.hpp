#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "lumi/camera.hpp"
#include "lumi/gaussian_cloud.hpp"
#include "lumi/image.hpp"

namespace lumi {

/// The five composited channel families share one set of alpha weights per
/// pixel (single global depth sort, one traversal).
inline constexpr int kRenderChannels = 11;  // rgb(3) + structure + depth + illum(3) + noise(3)

template <typename T>
struct RenderSettingsT {
  int tile_size = 16;
  T contrib_threshold = T(1) / T(255);  // contributions with alpha below are skipped
  T transmittance_stop = T(1e-4);       // compositing stops before T would drop below
  bool exact = false;  // oracle-comparison mode: thresholds off, wide footprints
  int threads = 1;     // tile workers; results are identical for any value
};

using RenderSettings = RenderSettingsT<float>;

/// Per-pixel compositing record retained for the backward pass: CSR lists of
/// contributing primitive indices in front-to-back order, plus the final
/// transmittance.
template <typename T>
struct RenderAuxT {
  std::vector<std::uint32_t> offsets;       // pixel_count + 1
  std::vector<std::uint32_t> contributors;  // primitive indices
  std::vector<T> final_transmittance;       // per pixel
  int culled = 0;   // z outside [near, far]
  int skipped = 0;  // non-invertible 2D covariance
  std::uint64_t fingerprint = 0;
};

template <typename T>
struct RenderOutputT {
  ImageT<T> color;      // R0, composites the background
  ImageT<T> structure;  // Pr in [0,1]
  ImageT<T> depth;      // Dr in [0,1]
  ImageT<T> illum;      // Lr >= 0
  ImageT<T> noise;      // Ngs, unbounded
  RenderAuxT<T> aux;
};

using RenderOutput = RenderOutputT<float>;

/// Adjoint images for the backward pass; an empty image means a zero adjoint.
template <typename T>
struct RenderAdjointsT {
  ImageT<T> color, structure, depth, illum, noise;
};

using RenderAdjoints = RenderAdjointsT<float>;

/// Per-parameter gradients mirroring GaussianCloud array shapes. Culled and
/// skipped primitives hold zeros.
template <typename T>
struct GradientBundleT {
  std::vector<T> positions, rotations, log_scales, opacity_logits, sh_coeffs,
      structure_logits, illum_raw, depth_logits, noise_raw;

  void resize_like(const GaussianCloudT<T>& cloud) {
    const int n = cloud.size();
    positions.assign(std::size_t(n) * 3, T(0));
    rotations.assign(std::size_t(n) * 4, T(0));
    log_scales.assign(std::size_t(n) * 3, T(0));
    opacity_logits.assign(n, T(0));
    sh_coeffs.assign(std::size_t(n) * GaussianCloudT<T>::kShCoeffCount * 3, T(0));
    structure_logits.assign(n, T(0));
    illum_raw.assign(std::size_t(n) * 3, T(0));
    depth_logits.assign(n, T(0));
    noise_raw.assign(std::size_t(n) * 3, T(0));
  }

  void accumulate(const GradientBundleT& o, T weight = T(1)) {
    auto axpy = [weight](std::vector<T>& dst, const std::vector<T>& src) {
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += weight * src[i];
    };
    axpy(positions, o.positions);
    axpy(rotations, o.rotations);
    axpy(log_scales, o.log_scales);
    axpy(opacity_logits, o.opacity_logits);
    axpy(sh_coeffs, o.sh_coeffs);
    axpy(structure_logits, o.structure_logits);
    axpy(illum_raw, o.illum_raw);
    axpy(depth_logits, o.depth_logits);
    axpy(noise_raw, o.noise_raw);
  }

  bool all_finite() const;
};

using GradientBundle = GradientBundleT<float>;

struct RenderStats {
  double contributors_mean = 0.0;
  std::uint32_t contributors_max = 0;
  int culled = 0;
  int skipped = 0;
};

/// Tile-based forward rasterization of all five channels (front-to-back alpha
/// compositing). Attribute channels composite against a zero background; only
/// the color channel receives bg weighted by the final transmittance.
template <typename T>
RenderOutputT<T> render(const GaussianCloudT<T>& cloud, const CameraT<T>& cam,
                        const std::array<T, 3>& background,
                        const RenderSettingsT<T>& settings = {});

/// Analytic backward pass through compositing weights, the 2D Gaussian
/// falloff, the EWA projection and all parameter activations. Requires the aux
/// retained by the matching render call; throws DataError on an aux/camera
/// mismatch. Deterministic for any thread count (fixed tile reduction order).
template <typename T>
GradientBundleT<T> render_backward(const GaussianCloudT<T>& cloud, const CameraT<T>& cam,
                                   const std::array<T, 3>& background,
                                   const RenderOutputT<T>& output,
                                   const RenderAdjointsT<T>& adjoints,
                                   const RenderSettingsT<T>& settings = {});

template <typename T>
RenderStats render_stats(const RenderOutputT<T>& output);

extern template struct GradientBundleT<float>;
extern template struct GradientBundleT<double>;
extern template RenderOutputT<float> render<float>(const GaussianCloudT<float>&,
                                                   const CameraT<float>&,
                                                   const std::array<float, 3>&,
                                                   const RenderSettingsT<float>&);
extern template RenderOutputT<double> render<double>(const GaussianCloudT<double>&,
                                                     const CameraT<double>&,
                                                     const std::array<double, 3>&,
                                                     const RenderSettingsT<double>&);
extern template GradientBundleT<float> render_backward<float>(
    const GaussianCloudT<float>&, const CameraT<float>&, const std::array<float, 3>&,
    const RenderOutputT<float>&, const RenderAdjointsT<float>&, const RenderSettingsT<float>&);
extern template GradientBundleT<double> render_backward<double>(
    const GaussianCloudT<double>&, const CameraT<double>&, const std::array<double, 3>&,
    const RenderOutputT<double>&, const RenderAdjointsT<double>&,
    const RenderSettingsT<double>&);
extern template RenderStats render_stats<float>(const RenderOutputT<float>&);
extern template RenderStats render_stats<double>(const RenderOutputT<double>&);

}  // namespace lumi
