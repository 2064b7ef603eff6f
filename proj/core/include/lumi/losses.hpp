#pragma once

#include <cstdint>
#include <vector>

#include "lumi/image.hpp"

namespace lumi {

/// Fixed loss-assembly weights: total = exposure + 0.1*prior
/// + 0.1*(depth_global + depth_local) + denoise + reconstruction, with the
/// reconstruction internally mixing L1 and (1 - SSIM) by lambda = 0.2.
inline constexpr double kStructureLossWeight = 0.1;
inline constexpr double kReconstructionLambda = 0.2;

template <typename T>
struct LossBundleT {
  T exposure = 0, prior = 0, depth_global = 0, depth_local = 0, denoise = 0;
  T rec_l1 = 0, rec_ssim = 0;  // rec_ssim stores the (1 - SSIM) term
  T total = 0;

  T reconstruction() const {
    return (T(1) - T(kReconstructionLambda)) * rec_l1 + T(kReconstructionLambda) * rec_ssim;
  }
  T recompute_total() const {
    return exposure + T(kStructureLossWeight) * prior +
           T(kStructureLossWeight) * (depth_global + depth_local) + denoise + reconstruction();
  }
};

using LossBundle = LossBundleT<float>;

template <typename T>
struct ValueGradT {
  T value = 0;
  ImageT<T> grad;
};

/// L1 pull toward the input rescaled to mean intensity theta:
/// target = clamp(theta / mean(input) * input, 0, 1). Throws DataError when
/// the input mean is not positive.
template <typename T>
ValueGradT<T> exposure_loss(const ImageT<T>& rendered, const ImageT<T>& input, T theta);

/// Mean absolute error against the extracted structure prior.
template <typename T>
ValueGradT<T> prior_loss(const ImageT<T>& rendered_prior, const ImageT<T>& target_prior);

/// Pearson correlation over all values; constant inputs (std <= 1e-8) fall
/// back to 0 (degenerate rule, callers may count occurrences via depth_loss).
template <typename T>
T pcc(const ImageT<T>& x, const ImageT<T>& y);

struct PatchRect {
  int x0, y0, x1, y1;  // half-open
  bool operator==(const PatchRect&) const = default;
};

/// Row-major partition into patch_size^2 tiles (edge tiles partial), from
/// which ceil(n/2) patches are drawn without replacement by the seeded rng.
/// Sorted for deterministic accumulation; exposed so tests can enumerate the
/// same selection against an independent per-patch oracle.
std::vector<PatchRect> select_depth_patches(int width, int height, int patch_size,
                                            std::uint64_t seed);

template <typename T>
struct DepthLossResultT {
  T global_term = 0;  // 1 - PCC over the full map
  T local_term = 0;   // mean of 1 - PCC over the selected patches
  ImageT<T> grad;     // analytic adjoint on the rendered depth
  int degenerate_patches = 0;
};

/// Global plus patch-local depth correlation loss. Images smaller than one
/// patch use the single full-image patch.
template <typename T>
DepthLossResultT<T> depth_loss(const ImageT<T>& rendered_depth, const ImageT<T>& target_depth,
                               int patch_size, std::uint64_t seed);

template <typename T>
struct DenoiseLossResultT {
  T value = 0;
  ImageT<T> grad_r, grad_rk;
};

/// MSE(R, R_K) plus anisotropic TV on R (forward differences, normalized by
/// the full value count).
template <typename T>
DenoiseLossResultT<T> denoise_loss(const ImageT<T>& r, const ImageT<T>& r_k);

template <typename T>
struct ReconstructionLossResultT {
  T value = 0;
  T l1_term = 0;
  T ssim_term = 0;  // 1 - SSIM
  ImageT<T> grad_r, grad_illum;
};

/// Decomposition consistency: I_out = R (.) L_r must reproduce the input,
/// (1-lambda) L1 + lambda (1 - SSIM), adjoints chained through the product.
template <typename T>
ReconstructionLossResultT<T> reconstruction_loss(const ImageT<T>& r, const ImageT<T>& illum,
                                                 const ImageT<T>& input,
                                                 T lambda = T(kReconstructionLambda));

extern template struct LossBundleT<float>;
extern template struct LossBundleT<double>;
extern template ValueGradT<float> exposure_loss<float>(const ImageT<float>&,
                                                       const ImageT<float>&, float);
extern template ValueGradT<double> exposure_loss<double>(const ImageT<double>&,
                                                         const ImageT<double>&, double);
extern template ValueGradT<float> prior_loss<float>(const ImageT<float>&, const ImageT<float>&);
extern template ValueGradT<double> prior_loss<double>(const ImageT<double>&,
                                                      const ImageT<double>&);
extern template float pcc<float>(const ImageT<float>&, const ImageT<float>&);
extern template double pcc<double>(const ImageT<double>&, const ImageT<double>&);
extern template DepthLossResultT<float> depth_loss<float>(const ImageT<float>&,
                                                          const ImageT<float>&, int,
                                                          std::uint64_t);
extern template DepthLossResultT<double> depth_loss<double>(const ImageT<double>&,
                                                            const ImageT<double>&, int,
                                                            std::uint64_t);
extern template DenoiseLossResultT<float> denoise_loss<float>(const ImageT<float>&,
                                                              const ImageT<float>&);
extern template DenoiseLossResultT<double> denoise_loss<double>(const ImageT<double>&,
                                                                const ImageT<double>&);
extern template ReconstructionLossResultT<float> reconstruction_loss<float>(
    const ImageT<float>&, const ImageT<float>&, const ImageT<float>&, float);
extern template ReconstructionLossResultT<double> reconstruction_loss<double>(
    const ImageT<double>&, const ImageT<double>&, const ImageT<double>&, double);

}  // namespace lumi
