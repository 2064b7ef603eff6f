#pragma once

#include "lumi/image.hpp"

namespace lumi {

enum class KernelParity { kNone, kEven, kOdd };

/// Odd-length 1-D filter taps, tap index k maps to spatial offset k - radius.
/// Smoothing kernels sum to 1, derivative kernels sum to 0 (exactly, by
/// mirrored construction).
template <typename T>
struct Kernel1DT {
  std::vector<T> taps;
  KernelParity parity = KernelParity::kNone;

  int radius() const { return static_cast<int>(taps.size()) / 2; }

  static Kernel1DT identity() { return {{T(1)}, KernelParity::kEven}; }
};

using Kernel1D = Kernel1DT<float>;
using Kernel1Dd = Kernel1DT<double>;

/// Sampled Gaussian (order 0) or its first derivative (order 1), truncated at
/// radius ceil(3*sigma). Order 0 is normalized to sum 1; order 1 is scaled so
/// that correlating the ramp g(x)=x yields exactly 1.
/// Throws DataError for sigma <= 0 or order outside {0,1}.
template <typename T>
Kernel1DT<T> gaussian_kernel(T sigma, int order, int radius_override = 0);

/// Separable correlation, per channel, edge-replicated borders. Output has the
/// input's shape. kx runs along rows, ky along columns. Kernels with declared
/// parity are evaluated in mirrored pairs so symmetric cancellation is exact.
template <typename T>
ImageT<T> convolve_separable(const ImageT<T>& img, const Kernel1DT<T>& kx,
                             const Kernel1DT<T>& ky);

/// Adjoint of convolve_separable under the same border policy (scatter form).
/// Needed by backward passes through blur operations.
template <typename T>
ImageT<T> convolve_separable_adjoint(const ImageT<T>& grad, const Kernel1DT<T>& kx,
                                     const Kernel1DT<T>& ky);

extern template Kernel1DT<float> gaussian_kernel<float>(float, int, int);
extern template Kernel1DT<double> gaussian_kernel<double>(double, int, int);
extern template ImageT<float> convolve_separable<float>(const ImageT<float>&,
                                                        const Kernel1DT<float>&,
                                                        const Kernel1DT<float>&);
extern template ImageT<double> convolve_separable<double>(const ImageT<double>&,
                                                          const Kernel1DT<double>&,
                                                          const Kernel1DT<double>&);
extern template ImageT<float> convolve_separable_adjoint<float>(
    const ImageT<float>&, const Kernel1DT<float>&, const Kernel1DT<float>&);
extern template ImageT<double> convolve_separable_adjoint<double>(
    const ImageT<double>&, const Kernel1DT<double>&, const Kernel1DT<double>&);

}  // namespace lumi
