#include "lumi/gaussian_cloud.hpp"

#include <algorithm>
#include <cmath>

#include "lumi/activations.hpp"
#include "lumi/errors.hpp"
#include "lumi/sh.hpp"

namespace lumi {

template <typename T>
Eigen::Matrix<T, 3, 3> quaternion_to_matrix(const Eigen::Matrix<T, 4, 1>& q) {
  const T w = q[0], x = q[1], y = q[2], z = q[3];
  Eigen::Matrix<T, 3, 3> r;
  r << T(1) - T(2) * (y * y + z * z), T(2) * (x * y - w * z), T(2) * (x * z + w * y),
      T(2) * (x * y + w * z), T(1) - T(2) * (x * x + z * z), T(2) * (y * z - w * x),
      T(2) * (x * z - w * y), T(2) * (y * z + w * x), T(1) - T(2) * (x * x + y * y);
  return r;
}

template <typename T>
Eigen::Matrix<T, 3, 3> GaussianCloudT<T>::rotation_matrix(int i) const {
  Eigen::Matrix<T, 4, 1> q = quaternion(i);
  const T n = q.norm();
  if (n > T(0)) q /= n;
  return quaternion_to_matrix(q);
}

template <typename T>
Eigen::Matrix<T, 3, 3> GaussianCloudT<T>::covariance(int i) const {
  const Eigen::Matrix<T, 3, 3> r = rotation_matrix(i);
  const Eigen::Matrix<T, 3, 1> s = scale(i);
  const Eigen::Matrix<T, 3, 3> m = r * s.asDiagonal();
  return m * m.transpose();
}

template <typename T>
void GaussianCloudT<T>::renormalize_rotations() {
  for (int i = 0; i < size(); ++i) {
    T* q = rotations.data() + 4 * i;
    const T n = std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
    if (n > T(0))
      for (int k = 0; k < 4; ++k) q[k] /= n;
    else
      q[0] = T(1), q[1] = q[2] = q[3] = T(0);
  }
}

GaussianCloud init_cloud(std::span<const float> points, std::span<const float> colors) {
  if (points.empty() || points.size() % 3 != 0)
    throw DataError("init_cloud: empty or malformed point set");
  if (colors.size() != points.size())
    throw DataError("init_cloud: colors must match points");

  const int n = static_cast<int>(points.size() / 3);
  GaussianCloud cloud;
  cloud.resize(n);
  cloud.sh_degree = 0;

  // Isotropic scale: mean distance to the 3 nearest neighbors (brute force;
  // init-time only). Single point gets the documented 0.1 fallback.
  std::vector<float> nn_scale(n, 0.1f);
  if (n > 1) {
    std::vector<float> d2(n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const float dx = points[3 * i] - points[3 * j];
        const float dy = points[3 * i + 1] - points[3 * j + 1];
        const float dz = points[3 * i + 2] - points[3 * j + 2];
        d2[j] = dx * dx + dy * dy + dz * dz;
      }
      d2[i] = std::numeric_limits<float>::max();
      const int k = std::min(3, n - 1);
      std::partial_sort(d2.begin(), d2.begin() + k, d2.end());
      float mean = 0.0f;
      for (int m = 0; m < k; ++m) mean += std::sqrt(d2[m]);
      nn_scale[i] = std::max(mean / k, 1e-7f);
    }
  }

  const float opacity_logit = logit(0.1f);
  const float attr_logit = logit(0.5f);
  for (int i = 0; i < n; ++i) {
    for (int a = 0; a < 3; ++a) cloud.positions[3 * i + a] = points[3 * i + a];
    cloud.rotations[4 * i + 0] = 1.0f;
    const float ls = std::log(nn_scale[i]);
    for (int a = 0; a < 3; ++a) cloud.log_scales[3 * i + a] = ls;
    cloud.opacity_logits[i] = opacity_logit;
    for (int c = 0; c < 3; ++c)
      cloud.sh_coeffs[(std::size_t(i) * GaussianCloud::kShCoeffCount + 0) * 3 + c] =
          (colors[3 * i + c] - 0.5f) / kSh0;
    cloud.structure_logits[i] = attr_logit;
    for (int a = 0; a < 3; ++a) cloud.illum_raw[3 * i + a] = 0.0f;  // log(1)
    cloud.depth_logits[i] = attr_logit;
  }
  return cloud;
}

template struct GaussianCloudT<float>;
template struct GaussianCloudT<double>;
template Eigen::Matrix<float, 3, 3> quaternion_to_matrix<float>(const Eigen::Matrix<float, 4, 1>&);
template Eigen::Matrix<double, 3, 3> quaternion_to_matrix<double>(
    const Eigen::Matrix<double, 4, 1>&);

}  // namespace lumi
