#pragma once

#include <Eigen/Core>
#include <array>

namespace lumi {

inline constexpr float kSh0 = 0.28209479177387814f;

/// Real spherical-harmonics basis (bands 0..3) evaluated along a unit
/// direction, with the band constants folded in, so a channel value is
/// 0.5 + sum_b basis[b] * coeff[b].
template <typename T>
struct ShBasis {
  std::array<T, 16> value{};
  // Per-basis gradient w.r.t. the (unit) direction; filled by sh_basis_grad.
  std::array<Eigen::Matrix<T, 3, 1>, 16> ddir{};
};

template <typename T>
int sh_coeffs_for_degree(int degree) {
  return (degree + 1) * (degree + 1);
}

template <typename T>
void sh_basis(int degree, const Eigen::Matrix<T, 3, 1>& dir, ShBasis<T>& out,
              bool with_grad);

extern template void sh_basis<float>(int, const Eigen::Matrix<float, 3, 1>&, ShBasis<float>&,
                                     bool);
extern template void sh_basis<double>(int, const Eigen::Matrix<double, 3, 1>&,
                                      ShBasis<double>&, bool);

}  // namespace lumi
