#include "lumi/prior.hpp"

#include <algorithm>
#include <cmath>

#include "lumi/convolve.hpp"
#include "lumi/errors.hpp"

namespace lumi {

namespace {

// Gaussian color model: RGB camera sensitivities to spectral intensity, slope
// and curvature.
constexpr double kSpectral[3][3] = {
    {0.06, 0.63, 0.27},
    {0.3, 0.04, -0.35},
    {0.34, -0.6, 0.17},
};

template <typename T>
T percentile_value(std::vector<T> values, T pct) {
  const std::size_t n = values.size();
  const double rank = double(pct) / 100.0 * double(n - 1);
  const std::size_t k = static_cast<std::size_t>(std::llround(rank));
  std::nth_element(values.begin(), values.begin() + k, values.end());
  return values[k];
}

}  // namespace

template <typename T>
SpectralTripleT<T> rgb_to_spectral(const ImageT<T>& img) {
  if (img.channels != 3) throw DataError("rgb_to_spectral: expected a 3-channel image");
  SpectralTripleT<T> out;
  out.e = ImageT<T>(img.width, img.height, 1);
  out.e_lambda = ImageT<T>(img.width, img.height, 1);
  out.e_lambdalambda = ImageT<T>(img.width, img.height, 1);

  const std::size_t count = img.pixel_count();
  const T* r = img.plane(0).data();
  const T* g = img.plane(1).data();
  const T* b = img.plane(2).data();
  ImageT<T>* planes[3] = {&out.e, &out.e_lambda, &out.e_lambdalambda};
  for (int row = 0; row < 3; ++row) {
    T* dst = planes[row]->data.data();
    const T m0 = T(kSpectral[row][0]), m1 = T(kSpectral[row][1]), m2 = T(kSpectral[row][2]);
    for (std::size_t p = 0; p < count; ++p) dst[p] = m0 * r[p] + m1 * g[p] + m2 * b[p];
  }
  return out;
}

template <typename T>
ImageT<T> extract_prior(const ImageT<T>& img, const PriorConfigT<T>& cfg) {
  if (!cfg.valid()) throw DataError("extract_prior: invalid config");
  const SpectralTripleT<T> spectral = rgb_to_spectral(img);

  const Kernel1DT<T> smooth = gaussian_kernel(cfg.sigma, 0);
  const Kernel1DT<T> deriv = gaussian_kernel(cfg.sigma, 1);

  const std::size_t count = img.pixel_count();
  ImageT<T> prior(img.width, img.height, 1);
  const T* e = spectral.e.data.data();
  const T weights[3] = {T(1), cfg.beta, cfg.gamma};
  const ImageT<T>* planes[3] = {&spectral.e, &spectral.e_lambda, &spectral.e_lambdalambda};

  for (int term = 0; term < 3; ++term) {
    if (weights[term] == T(0)) continue;
    const ImageT<T> dx = convolve_separable(*planes[term], deriv, smooth);
    const ImageT<T> dy = convolve_separable(*planes[term], smooth, deriv);
    for (std::size_t p = 0; p < count; ++p) {
      const T denom = e[p] + cfg.epsilon;
      const T rx = dx.data[p] / denom;
      const T ry = dy.data[p] / denom;
      prior.data[p] += weights[term] * (rx * rx + ry * ry);
    }
  }
  for (std::size_t p = 0; p < count; ++p) prior.data[p] = std::sqrt(prior.data[p]);

  const T scale = std::max(percentile_value(prior.data, cfg.normalize_percentile), cfg.epsilon);
  for (std::size_t p = 0; p < count; ++p)
    prior.data[p] = std::clamp(prior.data[p] / scale, T(0), T(1));
  return prior;
}

Image synthesize_depth_target(const GaussianCloud& cloud, const Camera& cam,
                              const RenderSettings& settings) {
  if (cloud.empty()) throw DataError("synthesize_depth_target: empty cloud");

  // Composite raw camera-space z through the unbounded attribute channel, so
  // the depth target shares the rasterizer's alpha weights exactly. The
  // composite is normalized by the accumulated weight so a single covering
  // primitive yields its own z everywhere (constant map).
  GaussianCloud probe = cloud;
  for (int i = 0; i < probe.size(); ++i) {
    const Eigen::Vector3f t = cam.to_camera(probe.position(i));
    for (int k = 0; k < 3; ++k) probe.noise_raw[3 * i + k] = t[2];
  }
  const RenderOutput out = render(probe, cam, {0.f, 0.f, 0.f}, settings);

  Image depth(cam.width, cam.height, 1);
  const auto plane = out.noise.plane(0);
  for (std::size_t p = 0; p < depth.data.size(); ++p) {
    const float weight_sum = 1.0f - out.aux.final_transmittance[p];
    depth.data[p] = weight_sum > 1e-6f ? plane[p] / weight_sum : 0.0f;
  }

  const auto [lo_it, hi_it] = std::minmax_element(depth.data.begin(), depth.data.end());
  const float lo = *lo_it, hi = *hi_it;
  if (hi - lo > 1e-12f) {
    const float inv = 1.0f / (hi - lo);
    for (float& v : depth.data) v = (v - lo) * inv;
  } else {
    std::fill(depth.data.begin(), depth.data.end(), 0.0f);
  }
  return depth;
}

template SpectralTripleT<float> rgb_to_spectral<float>(const ImageT<float>&);
template SpectralTripleT<double> rgb_to_spectral<double>(const ImageT<double>&);
template ImageT<float> extract_prior<float>(const ImageT<float>&, const PriorConfigT<float>&);
template ImageT<double> extract_prior<double>(const ImageT<double>&, const PriorConfigT<double>&);

}  // namespace lumi
