#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace lumi {

/// Columnar store of N anisotropic Gaussian primitives.
///
/// Raw parameter encodings (decode on use):
///   opacity   = sigmoid(opacity_logits)        in (0,1)
///   scale     = exp(log_scales)                per axis, > 0
///   rotation  = normalize(rotations)           unit quaternion (w,x,y,z)
///   structure = sigmoid(structure_logits)      in (0,1), 1 value
///   illum     = exp(illum_raw)                 > 0, 3 values
///   depth     = sigmoid(depth_logits)          in (0,1), 1 value
///   noise     = noise_raw                      unbounded, 3 values
///
/// SH storage is always allocated at the maximum degree (16 coefficients per
/// channel); sh_degree gates how many bands evaluation uses, so growing the
/// active degree never reshapes arrays.
///
/// The depth attribute is a view-independent scalar per primitive. Camera-space
/// z would be the physically view-dependent alternative; it is deliberately not
/// used here.
template <typename T>
struct GaussianCloudT {
  static constexpr int kShCoeffCount = 16;  // (3+1)^2
  static constexpr int kMaxShDegree = 3;

  std::vector<T> positions;         // N*3
  std::vector<T> rotations;         // N*4, (w,x,y,z)
  std::vector<T> log_scales;        // N*3
  std::vector<T> opacity_logits;    // N
  std::vector<T> sh_coeffs;         // N*16*3, layout [i][coeff][channel]
  std::vector<T> structure_logits;  // N
  std::vector<T> illum_raw;         // N*3
  std::vector<T> depth_logits;      // N
  std::vector<T> noise_raw;         // N*3
  int sh_degree = 0;

  int size() const { return static_cast<int>(opacity_logits.size()); }
  bool empty() const { return opacity_logits.empty(); }

  void resize(int n) {
    positions.resize(std::size_t(n) * 3, T(0));
    rotations.resize(std::size_t(n) * 4, T(0));
    log_scales.resize(std::size_t(n) * 3, T(0));
    opacity_logits.resize(n, T(0));
    sh_coeffs.resize(std::size_t(n) * kShCoeffCount * 3, T(0));
    structure_logits.resize(n, T(0));
    illum_raw.resize(std::size_t(n) * 3, T(0));
    depth_logits.resize(n, T(0));
    noise_raw.resize(std::size_t(n) * 3, T(0));
  }

  Eigen::Matrix<T, 3, 1> position(int i) const {
    return {positions[3 * i + 0], positions[3 * i + 1], positions[3 * i + 2]};
  }
  Eigen::Matrix<T, 4, 1> quaternion(int i) const {
    return {rotations[4 * i + 0], rotations[4 * i + 1], rotations[4 * i + 2],
            rotations[4 * i + 3]};
  }
  Eigen::Matrix<T, 3, 1> scale(int i) const {
    using std::exp;
    return {exp(log_scales[3 * i + 0]), exp(log_scales[3 * i + 1]), exp(log_scales[3 * i + 2])};
  }
  std::span<const T> sh(int i) const {
    return {sh_coeffs.data() + std::size_t(i) * kShCoeffCount * 3,
            std::size_t(kShCoeffCount) * 3};
  }

  /// Rotation matrix of the (normalized) quaternion of primitive i.
  Eigen::Matrix<T, 3, 3> rotation_matrix(int i) const;

  /// Decoded world-space covariance R S S^T R^T (positive semi-definite by
  /// construction).
  Eigen::Matrix<T, 3, 3> covariance(int i) const;

  void renormalize_rotations();

  bool all_finite() const {
    for (const auto* arr : {&positions, &rotations, &log_scales, &opacity_logits, &sh_coeffs,
                            &structure_logits, &illum_raw, &depth_logits, &noise_raw})
      for (T v : *arr)
        if (!std::isfinite(v)) return false;
    return true;
  }

  template <typename U>
  GaussianCloudT<U> cast() const {
    GaussianCloudT<U> out;
    auto conv = [](const std::vector<T>& a, std::vector<U>& b) {
      b.resize(a.size());
      for (std::size_t k = 0; k < a.size(); ++k) b[k] = static_cast<U>(a[k]);
    };
    conv(positions, out.positions);
    conv(rotations, out.rotations);
    conv(log_scales, out.log_scales);
    conv(opacity_logits, out.opacity_logits);
    conv(sh_coeffs, out.sh_coeffs);
    conv(structure_logits, out.structure_logits);
    conv(illum_raw, out.illum_raw);
    conv(depth_logits, out.depth_logits);
    conv(noise_raw, out.noise_raw);
    out.sh_degree = sh_degree;
    return out;
  }
};

using GaussianCloud = GaussianCloudT<float>;
using GaussianCloudD = GaussianCloudT<double>;

/// Unit-quaternion rotation matrix (w,x,y,z convention).
template <typename T>
Eigen::Matrix<T, 3, 3> quaternion_to_matrix(const Eigen::Matrix<T, 4, 1>& q);

/// Initializes a cloud from sparse points: isotropic scales from the mean
/// distance to the 3 nearest neighbors (0.1 world units for a single point),
/// identity rotations, opacity logit(0.1), SH degree-0 terms from colors,
/// structure/depth logits at logit(0.5), illumination at log(1), zero noise.
/// Throws DataError on an empty point set.
GaussianCloud init_cloud(std::span<const float> points, std::span<const float> colors);

extern template struct GaussianCloudT<float>;
extern template struct GaussianCloudT<double>;
extern template Eigen::Matrix<float, 3, 3> quaternion_to_matrix<float>(
    const Eigen::Matrix<float, 4, 1>&);
extern template Eigen::Matrix<double, 3, 3> quaternion_to_matrix<double>(
    const Eigen::Matrix<double, 4, 1>&);

}  // namespace lumi
