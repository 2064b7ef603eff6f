#pragma once

#include <Eigen/Core>

namespace lumi {

/// Pinhole camera with a world-to-camera rigid pose. Pixel (x, y) is sampled
/// at the continuous point (x + 0.5, y + 0.5).
template <typename T>
struct CameraT {
  Eigen::Matrix<T, 3, 3> rotation = Eigen::Matrix<T, 3, 3>::Identity();  // world-to-camera
  Eigen::Matrix<T, 3, 1> translation = Eigen::Matrix<T, 3, 1>::Zero();
  T fx = T(1), fy = T(1), cx = T(0), cy = T(0);
  int width = 0, height = 0;
  T near_clip = T(0.01), far_clip = T(100);

  Eigen::Matrix<T, 3, 1> position() const { return -rotation.transpose() * translation; }

  Eigen::Matrix<T, 3, 1> to_camera(const Eigen::Matrix<T, 3, 1>& world) const {
    return rotation * world + translation;
  }

  bool orthonormal(T tol = T(1e-5)) const {
    return (rotation * rotation.transpose() - Eigen::Matrix<T, 3, 3>::Identity())
               .cwiseAbs()
               .maxCoeff() < tol;
  }

  template <typename U>
  CameraT<U> cast() const {
    CameraT<U> out;
    out.rotation = rotation.template cast<U>();
    out.translation = translation.template cast<U>();
    out.fx = U(fx); out.fy = U(fy); out.cx = U(cx); out.cy = U(cy);
    out.width = width; out.height = height;
    out.near_clip = U(near_clip); out.far_clip = U(far_clip);
    return out;
  }
};

using Camera = CameraT<float>;
using CameraD = CameraT<double>;

}  // namespace lumi
