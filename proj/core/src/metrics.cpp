#include "lumi/metrics.hpp"

#include <cmath>
#include <limits>

#include "lumi/convolve.hpp"
#include "lumi/errors.hpp"

namespace lumi {

namespace {

constexpr double kSsimC1 = 0.01 * 0.01;  // (K1 * L)^2, L = 1
constexpr double kSsimC2 = 0.03 * 0.03;

template <typename T>
Kernel1DT<T> ssim_window() {
  return gaussian_kernel(T(1.5), 0, /*radius_override=*/5);  // 11 taps
}

template <typename T>
ImageT<T> hadamard(const ImageT<T>& a, const ImageT<T>& b) {
  ImageT<T> out(a.width, a.height, a.channels);
  for (std::size_t i = 0; i < a.data.size(); ++i) out.data[i] = a.data[i] * b.data[i];
  return out;
}

template <typename T>
struct SsimMoments {
  ImageT<T> mu_x, mu_y, sxx, syy, sxy;
};

template <typename T>
SsimMoments<T> ssim_moments(const ImageT<T>& x, const ImageT<T>& y) {
  const Kernel1DT<T> w = ssim_window<T>();
  return {convolve_separable(x, w, w), convolve_separable(y, w, w),
          convolve_separable(hadamard(x, x), w, w), convolve_separable(hadamard(y, y), w, w),
          convolve_separable(hadamard(x, y), w, w)};
}

}  // namespace

template <typename T>
T psnr(const ImageT<T>& x, const ImageT<T>& y) {
  if (!x.same_shape(y)) throw DataError("psnr: shape mismatch");
  double mse = 0.0;
  for (std::size_t i = 0; i < x.data.size(); ++i) {
    const double d = double(x.data[i]) - double(y.data[i]);
    mse += d * d;
  }
  mse /= double(x.data.size());
  if (mse <= 0.0) return std::numeric_limits<T>::infinity();
  return T(-10.0 * std::log10(mse));
}

template <typename T>
T ssim(const ImageT<T>& x, const ImageT<T>& y) {
  if (!x.same_shape(y)) throw DataError("ssim: shape mismatch");
  const SsimMoments<T> m = ssim_moments(x, y);
  T total = T(0);
  for (std::size_t i = 0; i < x.data.size(); ++i) {
    const T mx = m.mu_x.data[i], my = m.mu_y.data[i];
    const T vx = m.sxx.data[i] - mx * mx;
    const T vy = m.syy.data[i] - my * my;
    const T cxy = m.sxy.data[i] - mx * my;
    const T a1 = T(2) * mx * my + T(kSsimC1);
    const T a2 = T(2) * cxy + T(kSsimC2);
    const T b1 = mx * mx + my * my + T(kSsimC1);
    const T b2 = vx + vy + T(kSsimC2);
    total += (a1 * a2) / (b1 * b2);
  }
  return total / T(x.data.size());
}

template <typename T>
SsimGradResult<T> ssim_with_grad(const ImageT<T>& x, const ImageT<T>& y) {
  if (!x.same_shape(y)) throw DataError("ssim_with_grad: shape mismatch");
  const SsimMoments<T> m = ssim_moments(x, y);
  const T inv_count = T(1) / T(x.data.size());

  ImageT<T> g_mu(x.width, x.height, x.channels);
  ImageT<T> g_sxx(x.width, x.height, x.channels);
  ImageT<T> g_sxy(x.width, x.height, x.channels);
  T total = T(0);
  for (std::size_t i = 0; i < x.data.size(); ++i) {
    const T mx = m.mu_x.data[i], my = m.mu_y.data[i];
    const T vx = m.sxx.data[i] - mx * mx;
    const T vy = m.syy.data[i] - my * my;
    const T cxy = m.sxy.data[i] - mx * my;
    const T a1 = T(2) * mx * my + T(kSsimC1);
    const T a2 = T(2) * cxy + T(kSsimC2);
    const T b1 = mx * mx + my * my + T(kSsimC1);
    const T b2 = vx + vy + T(kSsimC2);
    const T denom = b1 * b2;
    const T s = (a1 * a2) / denom;
    total += s;

    // Partials w.r.t. the windowed moments (mu_x, Sxx, Sxy); Sxy and Sxx enter
    // through cxy and vx, mu_x additionally through a1, a2, b1, b2.
    g_sxy.data[i] = inv_count * T(2) * a1 / denom;
    g_sxx.data[i] = inv_count * (-s / b2);
    g_mu.data[i] = inv_count * (T(2) * my * (a2 - a1) / denom - T(2) * mx * s * (T(1) / b1 - T(1) / b2));
  }

  const Kernel1DT<T> w = ssim_window<T>();
  const ImageT<T> back_mu = convolve_separable_adjoint(g_mu, w, w);
  const ImageT<T> back_sxx = convolve_separable_adjoint(g_sxx, w, w);
  const ImageT<T> back_sxy = convolve_separable_adjoint(g_sxy, w, w);

  SsimGradResult<T> out;
  out.value = total * inv_count;
  out.grad_x = ImageT<T>(x.width, x.height, x.channels);
  for (std::size_t i = 0; i < x.data.size(); ++i)
    out.grad_x.data[i] =
        back_mu.data[i] + back_sxx.data[i] * T(2) * x.data[i] + back_sxy.data[i] * y.data[i];
  return out;
}

template float psnr<float>(const ImageT<float>&, const ImageT<float>&);
template double psnr<double>(const ImageT<double>&, const ImageT<double>&);
template float ssim<float>(const ImageT<float>&, const ImageT<float>&);
template double ssim<double>(const ImageT<double>&, const ImageT<double>&);
template SsimGradResult<float> ssim_with_grad<float>(const ImageT<float>&, const ImageT<float>&);
template SsimGradResult<double> ssim_with_grad<double>(const ImageT<double>&,
                                                       const ImageT<double>&);

}  // namespace lumi
