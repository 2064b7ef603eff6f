#include "lumi/sh.hpp"

namespace lumi {

namespace {
constexpr double kC1 = 0.4886025119029199;
constexpr double kC2[5] = {1.0925484305920792, -1.0925484305920792, 0.31539156525252005,
                           -1.0925484305920792, 0.5462742152960396};
constexpr double kC3[7] = {-0.5900435899266435, 2.890611442640554, -0.4570457994644658,
                           0.3731763325901154, -0.4570457994644658, 1.445305721320277,
                           -0.5900435899266435};
}  // namespace

template <typename T>
void sh_basis(int degree, const Eigen::Matrix<T, 3, 1>& dir, ShBasis<T>& out, bool with_grad) {
  using V = Eigen::Matrix<T, 3, 1>;
  const T x = dir[0], y = dir[1], z = dir[2];

  out.value[0] = T(kSh0);
  if (with_grad) out.ddir[0].setZero();
  if (degree < 1) return;

  const T c1 = T(kC1);
  out.value[1] = -c1 * y;
  out.value[2] = c1 * z;
  out.value[3] = -c1 * x;
  if (with_grad) {
    out.ddir[1] = V(T(0), -c1, T(0));
    out.ddir[2] = V(T(0), T(0), c1);
    out.ddir[3] = V(-c1, T(0), T(0));
  }
  if (degree < 2) return;

  const T xx = x * x, yy = y * y, zz = z * z;
  const T xy = x * y, yz = y * z, xz = x * z;
  out.value[4] = T(kC2[0]) * xy;
  out.value[5] = T(kC2[1]) * yz;
  out.value[6] = T(kC2[2]) * (T(2) * zz - xx - yy);
  out.value[7] = T(kC2[3]) * xz;
  out.value[8] = T(kC2[4]) * (xx - yy);
  if (with_grad) {
    out.ddir[4] = T(kC2[0]) * V(y, x, T(0));
    out.ddir[5] = T(kC2[1]) * V(T(0), z, y);
    out.ddir[6] = T(kC2[2]) * V(-T(2) * x, -T(2) * y, T(4) * z);
    out.ddir[7] = T(kC2[3]) * V(z, T(0), x);
    out.ddir[8] = T(kC2[4]) * V(T(2) * x, -T(2) * y, T(0));
  }
  if (degree < 3) return;

  out.value[9] = T(kC3[0]) * y * (T(3) * xx - yy);
  out.value[10] = T(kC3[1]) * xy * z;
  out.value[11] = T(kC3[2]) * y * (T(4) * zz - xx - yy);
  out.value[12] = T(kC3[3]) * z * (T(2) * zz - T(3) * xx - T(3) * yy);
  out.value[13] = T(kC3[4]) * x * (T(4) * zz - xx - yy);
  out.value[14] = T(kC3[5]) * z * (xx - yy);
  out.value[15] = T(kC3[6]) * x * (xx - T(3) * yy);
  if (with_grad) {
    out.ddir[9] = T(kC3[0]) * V(T(6) * xy, T(3) * xx - T(3) * yy, T(0));
    out.ddir[10] = T(kC3[1]) * V(yz, xz, xy);
    out.ddir[11] = T(kC3[2]) * V(-T(2) * xy, T(4) * zz - xx - T(3) * yy, T(8) * yz);
    out.ddir[12] = T(kC3[3]) * V(-T(6) * xz, -T(6) * yz, T(6) * zz - T(3) * xx - T(3) * yy);
    out.ddir[13] = T(kC3[4]) * V(T(4) * zz - T(3) * xx - yy, -T(2) * xy, T(8) * xz);
    out.ddir[14] = T(kC3[5]) * V(T(2) * xz, -T(2) * yz, xx - yy);
    out.ddir[15] = T(kC3[6]) * V(T(3) * xx - T(3) * yy, -T(6) * xy, T(0));
  }
}

template void sh_basis<float>(int, const Eigen::Matrix<float, 3, 1>&, ShBasis<float>&, bool);
template void sh_basis<double>(int, const Eigen::Matrix<double, 3, 1>&, ShBasis<double>&, bool);

}  // namespace lumi
