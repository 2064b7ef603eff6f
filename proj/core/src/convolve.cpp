#include "lumi/convolve.hpp"

#include <cmath>

#include "lumi/errors.hpp"

namespace lumi {

template <typename T>
Kernel1DT<T> gaussian_kernel(T sigma, int order, int radius_override) {
  if (!(sigma > T(0))) throw DataError("gaussian_kernel: sigma must be > 0");
  if (order != 0 && order != 1) throw DataError("gaussian_kernel: order must be 0 or 1");

  const int radius =
      radius_override > 0 ? radius_override : static_cast<int>(std::ceil(3.0 * double(sigma)));
  Kernel1DT<T> k;
  k.taps.assign(2 * radius + 1, T(0));

  const T inv2s2 = T(1) / (T(2) * sigma * sigma);
  if (order == 0) {
    // Mirror positive offsets so the kernel is exactly symmetric.
    T sum = std::exp(T(0));
    k.taps[radius] = T(1);
    for (int i = 1; i <= radius; ++i) {
      const T g = std::exp(-T(i) * T(i) * inv2s2);
      k.taps[radius + i] = g;
      k.taps[radius - i] = g;
      sum += T(2) * g;
    }
    for (T& t : k.taps) t /= sum;
    k.parity = KernelParity::kEven;
  } else {
    // taps[i] = i * g(i) / Z with Z = sum i^2 g(i), so correlating the ramp
    // x -> x gives exactly 1 (discrete derivative calibration).
    T z = T(0);
    for (int i = 1; i <= radius; ++i) {
      const T g = std::exp(-T(i) * T(i) * inv2s2);
      z += T(2) * T(i) * T(i) * g;
    }
    for (int i = 1; i <= radius; ++i) {
      const T t = T(i) * std::exp(-T(i) * T(i) * inv2s2) / z;
      k.taps[radius + i] = t;
      k.taps[radius - i] = -t;
    }
    k.parity = KernelParity::kOdd;
  }
  return k;
}

namespace {

// Horizontal correlation of one row. Parity-aware paths pair mirrored taps so
// constant inputs cancel exactly under odd kernels.
template <typename T>
void correlate_row(const T* in, T* out, int w, const Kernel1DT<T>& k) {
  const int r = k.radius();
  auto clampi = [w](int x) { return x < 0 ? 0 : (x >= w ? w - 1 : x); };
  for (int x = 0; x < w; ++x) {
    T acc = T(0);
    switch (k.parity) {
      case KernelParity::kEven:
        acc = k.taps[r] * in[x];
        for (int i = 1; i <= r; ++i)
          acc += k.taps[r + i] * (in[clampi(x + i)] + in[clampi(x - i)]);
        break;
      case KernelParity::kOdd:
        for (int i = 1; i <= r; ++i)
          acc += k.taps[r + i] * (in[clampi(x + i)] - in[clampi(x - i)]);
        break;
      case KernelParity::kNone:
        for (int i = -r; i <= r; ++i) acc += k.taps[r + i] * in[clampi(x + i)];
        break;
    }
    out[x] = acc;
  }
}

}  // namespace

template <typename T>
ImageT<T> convolve_separable(const ImageT<T>& img, const Kernel1DT<T>& kx,
                             const Kernel1DT<T>& ky) {
  for (T t : kx.taps)
    if (!std::isfinite(t)) throw DataError("convolve_separable: non-finite kx tap");
  for (T t : ky.taps)
    if (!std::isfinite(t)) throw DataError("convolve_separable: non-finite ky tap");

  const int w = img.width, h = img.height;
  ImageT<T> tmp(w, h, img.channels);
  ImageT<T> out(w, h, img.channels);
  std::vector<T> column(h), column_out(h);

  for (int c = 0; c < img.channels; ++c) {
    const T* src = img.plane(c).data();
    T* mid = tmp.plane(c).data();
    for (int y = 0; y < h; ++y) correlate_row(src + std::size_t(y) * w, mid + std::size_t(y) * w, w, kx);

    T* dst = out.plane(c).data();
    for (int x = 0; x < w; ++x) {
      for (int y = 0; y < h; ++y) column[y] = mid[std::size_t(y) * w + x];
      correlate_row(column.data(), column_out.data(), h, ky);
      for (int y = 0; y < h; ++y) dst[std::size_t(y) * w + x] = column_out[y];
    }
  }
  return out;
}

template <typename T>
ImageT<T> convolve_separable_adjoint(const ImageT<T>& grad, const Kernel1DT<T>& kx,
                                     const Kernel1DT<T>& ky) {
  const int w = grad.width, h = grad.height;
  // Adjoint of the vertical pass, then of the horizontal pass: scatter each
  // output contribution back to the clamped source index it read from.
  ImageT<T> mid(w, h, grad.channels);
  ImageT<T> out(w, h, grad.channels);
  const int ry = ky.radius(), rx = kx.radius();
  auto clampv = [](int v, int n) { return v < 0 ? 0 : (v >= n ? n - 1 : v); };

  for (int c = 0; c < grad.channels; ++c) {
    const T* g = grad.plane(c).data();
    T* m = mid.plane(c).data();
    for (int x = 0; x < w; ++x)
      for (int y = 0; y < h; ++y) {
        const T gv = g[std::size_t(y) * w + x];
        if (gv == T(0)) continue;
        for (int i = -ry; i <= ry; ++i)
          m[std::size_t(clampv(y + i, h)) * w + x] += ky.taps[ry + i] * gv;
      }
    T* o = out.plane(c).data();
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const T gv = m[std::size_t(y) * w + x];
        if (gv == T(0)) continue;
        for (int i = -rx; i <= rx; ++i)
          o[std::size_t(y) * w + clampv(x + i, w)] += kx.taps[rx + i] * gv;
      }
  }
  return out;
}

template Kernel1DT<float> gaussian_kernel<float>(float, int, int);
template Kernel1DT<double> gaussian_kernel<double>(double, int, int);
template ImageT<float> convolve_separable<float>(const ImageT<float>&, const Kernel1DT<float>&,
                                                 const Kernel1DT<float>&);
template ImageT<double> convolve_separable<double>(const ImageT<double>&,
                                                   const Kernel1DT<double>&,
                                                   const Kernel1DT<double>&);
template ImageT<float> convolve_separable_adjoint<float>(const ImageT<float>&,
                                                         const Kernel1DT<float>&,
                                                         const Kernel1DT<float>&);
template ImageT<double> convolve_separable_adjoint<double>(const ImageT<double>&,
                                                           const Kernel1DT<double>&,
                                                           const Kernel1DT<double>&);

}  // namespace lumi
