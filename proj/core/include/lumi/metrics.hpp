#pragma once

#include "lumi/image.hpp"

namespace lumi {

/// 10*log10(1/MSE) for images in [0,1]; +inf when the images are identical.
template <typename T>
T psnr(const ImageT<T>& x, const ImageT<T>& y);

/// Mean SSIM over pixels and channels: 11x11 Gaussian window (sigma 1.5),
/// K1=0.01, K2=0.03, dynamic range 1, replicate borders.
template <typename T>
T ssim(const ImageT<T>& x, const ImageT<T>& y);

template <typename T>
struct SsimGradResult {
  T value;
  ImageT<T> grad_x;  // d(mean SSIM)/dx
};

template <typename T>
SsimGradResult<T> ssim_with_grad(const ImageT<T>& x, const ImageT<T>& y);

extern template float psnr<float>(const ImageT<float>&, const ImageT<float>&);
extern template double psnr<double>(const ImageT<double>&, const ImageT<double>&);
extern template float ssim<float>(const ImageT<float>&, const ImageT<float>&);
extern template double ssim<double>(const ImageT<double>&, const ImageT<double>&);
extern template SsimGradResult<float> ssim_with_grad<float>(const ImageT<float>&,
                                                            const ImageT<float>&);
extern template SsimGradResult<double> ssim_with_grad<double>(const ImageT<double>&,
                                                              const ImageT<double>&);

}  // namespace lumi
