#pragma once

#include "lumi/camera.hpp"
#include "lumi/gaussian_cloud.hpp"
#include "lumi/image.hpp"
#include "lumi/render.hpp"

namespace lumi {

/// Spectral intensity, slope and curvature planes obtained from RGB by a fixed
/// linear transform (Gaussian color model).
template <typename T>
struct SpectralTripleT {
  ImageT<T> e, e_lambda, e_lambdalambda;
};

using SpectralTriple = SpectralTripleT<float>;

template <typename T>
struct PriorConfigT {
  T beta = T(1);
  T gamma = T(1);
  T sigma = T(1);
  T epsilon = T(1e-4);              // denominator guard for dark pixels
  T normalize_percentile = T(99);   // percentile used to scale the map into [0,1]

  bool valid() const {
    return beta >= T(0) && gamma >= T(0) && sigma > T(0) && epsilon > T(0) &&
           normalize_percentile > T(0) && normalize_percentile <= T(100);
  }
};

using PriorConfig = PriorConfigT<float>;

/// Per pixel: (E, E_lambda, E_lambdalambda)^T = M (R, G, B)^T with the fixed
/// camera-sensitivity matrix. Throws DataError unless the input has 3 channels.
template <typename T>
SpectralTripleT<T> rgb_to_spectral(const ImageT<T>& img);

/// Illumination-invariant structure map: Gaussian-derivative x/y gradients of
/// the three spectral planes, each divided by E + epsilon, combined as
/// sqrt(|dP|^2 + beta |dPl|^2 + gamma |dPll|^2), then scaled by the
/// normalize_percentile value (floored at epsilon) and clamped to [0,1].
/// A constant image yields an exactly zero map.
template <typename T>
ImageT<T> extract_prior(const ImageT<T>& img, const PriorConfigT<T>& cfg = {});

/// Desk-scale stand-in for an external monocular depth target: composites each
/// primitive's camera-space z through the rasterizer's shared alpha weights and
/// normalizes the result to [0,1] by min/max (an all-equal map normalizes to
/// zero). Throws DataError on an empty cloud.
Image synthesize_depth_target(const GaussianCloud& cloud, const Camera& cam,
                              const RenderSettings& settings = {});

extern template SpectralTripleT<float> rgb_to_spectral<float>(const ImageT<float>&);
extern template SpectralTripleT<double> rgb_to_spectral<double>(const ImageT<double>&);
extern template ImageT<float> extract_prior<float>(const ImageT<float>&,
                                                   const PriorConfigT<float>&);
extern template ImageT<double> extract_prior<double>(const ImageT<double>&,
                                                     const PriorConfigT<double>&);

}  // namespace lumi
