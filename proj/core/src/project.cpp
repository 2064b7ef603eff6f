#include "lumi/project.hpp"

namespace lumi {

template <typename T>
std::vector<ProjectedSplatT<T>> project(const GaussianCloudT<T>& cloud, const CameraT<T>& cam) {
  const int n = cloud.size();
  std::vector<ProjectedSplatT<T>> out(n);

  for (int i = 0; i < n; ++i) {
    ProjectedSplatT<T>& s = out[i];
    const Eigen::Matrix<T, 3, 1> t = cam.to_camera(cloud.position(i));
    const T z = t[2];
    s.depth = z;
    if (!(z >= cam.near_clip && z <= cam.far_clip)) {
      s.culled = true;
      continue;
    }

    s.mean2d[0] = cam.fx * t[0] / z + cam.cx;
    s.mean2d[1] = cam.fy * t[1] / z + cam.cy;

    const T inv_z = T(1) / z;
    const T inv_z2 = inv_z * inv_z;
    Eigen::Matrix<T, 2, 3> jac;
    jac << cam.fx * inv_z, T(0), -cam.fx * t[0] * inv_z2,
           T(0), cam.fy * inv_z, -cam.fy * t[1] * inv_z2;

    const Eigen::Matrix<T, 2, 3> m = jac * cam.rotation;
    s.cov2d = m * cloud.covariance(i) * m.transpose();
    s.cov2d(0, 0) += T(0.3);
    s.cov2d(1, 1) += T(0.3);
  }
  return out;
}

template std::vector<ProjectedSplatT<float>> project<float>(const GaussianCloudT<float>&,
                                                            const CameraT<float>&);
template std::vector<ProjectedSplatT<double>> project<double>(const GaussianCloudT<double>&,
                                                              const CameraT<double>&);

}  // namespace lumi
