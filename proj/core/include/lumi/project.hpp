#pragma once

#include <vector>

#include "lumi/camera.hpp"
#include "lumi/gaussian_cloud.hpp"

namespace lumi {

/// Screen-space footprint of one primitive after EWA projection.
template <typename T>
struct ProjectedSplatT {
  Eigen::Matrix<T, 2, 1> mean2d = Eigen::Matrix<T, 2, 1>::Zero();
  T depth = T(0);                                              // camera-space z
  Eigen::Matrix<T, 2, 2> cov2d = Eigen::Matrix<T, 2, 2>::Zero();  // includes +0.3 dilation
  bool culled = false;                                         // z outside [near, far]
};

using ProjectedSplat = ProjectedSplatT<float>;

/// Projects every primitive: camera-space transform, perspective Jacobian J,
/// cov2d = J W Sigma W^T J^T with +0.3 added to both diagonal entries
/// (low-pass dilation). Primitives with z outside [near, far] carry the culled
/// flag; no other errors are possible.
template <typename T>
std::vector<ProjectedSplatT<T>> project(const GaussianCloudT<T>& cloud, const CameraT<T>& cam);

extern template std::vector<ProjectedSplatT<float>> project<float>(const GaussianCloudT<float>&,
                                                                   const CameraT<float>&);
extern template std::vector<ProjectedSplatT<double>> project<double>(
    const GaussianCloudT<double>&, const CameraT<double>&);

}  // namespace lumi
