#include "lumi/losses.hpp"

#include <algorithm>
#include <cmath>

#include "lumi/errors.hpp"
#include "lumi/metrics.hpp"
#include "lumi/random.hpp"

namespace lumi {

namespace {

template <typename T>
void require_same_shape(const ImageT<T>& a, const ImageT<T>& b, const char* who) {
  if (!a.same_shape(b)) throw DataError(std::string(who) + ": shape mismatch");
}

template <typename T>
T sign_of(T v) {
  return v > T(0) ? T(1) : (v < T(0) ? T(-1) : T(0));
}

// Mean absolute error and its subgradient on the first argument.
template <typename T>
ValueGradT<T> l1_with_grad(const ImageT<T>& a, const ImageT<T>& b) {
  ValueGradT<T> out;
  out.grad = ImageT<T>(a.width, a.height, a.channels);
  const T inv_count = T(1) / T(a.data.size());
  T sum = T(0);
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const T d = a.data[i] - b.data[i];
    sum += std::abs(d);
    out.grad.data[i] = sign_of(d) * inv_count;
  }
  out.value = sum * inv_count;
  return out;
}

template <typename T>
struct PatchStats {
  T sxx = 0, syy = 0, sxy = 0, mean_x = 0, mean_y = 0;
  std::size_t count = 0;
};

template <typename T>
PatchStats<T> patch_stats(const ImageT<T>& x, const ImageT<T>& y, const PatchRect& r) {
  PatchStats<T> s;
  s.count = std::size_t(r.x1 - r.x0) * (r.y1 - r.y0);
  for (int yy = r.y0; yy < r.y1; ++yy)
    for (int xx = r.x0; xx < r.x1; ++xx) {
      s.mean_x += x.at(xx, yy);
      s.mean_y += y.at(xx, yy);
    }
  s.mean_x /= T(s.count);
  s.mean_y /= T(s.count);
  for (int yy = r.y0; yy < r.y1; ++yy)
    for (int xx = r.x0; xx < r.x1; ++xx) {
      const T dx = x.at(xx, yy) - s.mean_x;
      const T dy = y.at(xx, yy) - s.mean_y;
      s.sxx += dx * dx;
      s.syy += dy * dy;
      s.sxy += dx * dy;
    }
  return s;
}

constexpr double kPccStdFloor = 1e-8;

// Accumulates weight * d(PCC)/d(x) over the patch into grad; returns PCC.
// Degenerate patches contribute nothing and report false.
template <typename T>
bool patch_pcc_grad(const ImageT<T>& x, const ImageT<T>& y, const PatchRect& r, T weight,
                    ImageT<T>* grad, T* pcc_out) {
  const PatchStats<T> s = patch_stats(x, y, r);
  const T n1 = T(s.count > 1 ? s.count - 1 : 1);
  if (std::sqrt(s.sxx / n1) <= T(kPccStdFloor) || std::sqrt(s.syy / n1) <= T(kPccStdFloor)) {
    *pcc_out = T(0);
    return false;
  }
  const T denom = std::sqrt(s.sxx * s.syy);
  const T r_val = s.sxy / denom;
  *pcc_out = r_val;
  if (grad) {
    const T ratio = s.sxy / s.sxx;
    for (int yy = r.y0; yy < r.y1; ++yy)
      for (int xx = r.x0; xx < r.x1; ++xx) {
        const T xt = x.at(xx, yy) - s.mean_x;
        const T yt = y.at(xx, yy) - s.mean_y;
        grad->at(xx, yy) += weight * (yt - ratio * xt) / denom;
      }
  }
  return true;
}

}  // namespace

template <typename T>
ValueGradT<T> exposure_loss(const ImageT<T>& rendered, const ImageT<T>& input, T theta) {
  require_same_shape(rendered, input, "exposure_loss");
  const T mean = input.mean();
  if (!(mean > T(0))) throw DataError("exposure_loss: input image has non-positive mean");
  const T modulation = theta / mean;

  ImageT<T> target(input.width, input.height, input.channels);
  for (std::size_t i = 0; i < input.data.size(); ++i)
    target.data[i] = std::clamp(modulation * input.data[i], T(0), T(1));
  return l1_with_grad(rendered, target);
}

template <typename T>
ValueGradT<T> prior_loss(const ImageT<T>& rendered_prior, const ImageT<T>& target_prior) {
  require_same_shape(rendered_prior, target_prior, "prior_loss");
  return l1_with_grad(rendered_prior, target_prior);
}

template <typename T>
T pcc(const ImageT<T>& x, const ImageT<T>& y) {
  require_same_shape(x, y, "pcc");
  const PatchRect full{0, 0, x.width, x.height};
  // Multi-channel images correlate plane by plane through the flat layout.
  if (x.channels != 1) {
    ImageT<T> xf(int(x.data.size()), 1, 1), yf(int(y.data.size()), 1, 1);
    xf.data = x.data;
    yf.data = y.data;
    T value = T(0);
    patch_pcc_grad(xf, yf, PatchRect{0, 0, xf.width, 1}, T(0),
                   static_cast<ImageT<T>*>(nullptr), &value);
    return value;
  }
  T value = T(0);
  patch_pcc_grad(x, y, full, T(0), static_cast<ImageT<T>*>(nullptr), &value);
  return value;
}

std::vector<PatchRect> select_depth_patches(int width, int height, int patch_size,
                                            std::uint64_t seed) {
  std::vector<PatchRect> all;
  const int ps = std::max(1, patch_size);
  for (int y0 = 0; y0 < height; y0 += ps)
    for (int x0 = 0; x0 < width; x0 += ps)
      all.push_back({x0, y0, std::min(width, x0 + ps), std::min(height, y0 + ps)});

  if (all.size() <= 1) return all;
  std::vector<std::uint32_t> idx(all.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = std::uint32_t(i);
  Rng rng(seed, /*stream=*/0x5e1ec7);
  rng.shuffle(idx);
  const std::size_t keep = (all.size() + 1) / 2;
  idx.resize(keep);
  std::sort(idx.begin(), idx.end());

  std::vector<PatchRect> out;
  out.reserve(keep);
  for (std::uint32_t i : idx) out.push_back(all[i]);
  return out;
}

template <typename T>
DepthLossResultT<T> depth_loss(const ImageT<T>& rendered_depth, const ImageT<T>& target_depth,
                               int patch_size, std::uint64_t seed) {
  require_same_shape(rendered_depth, target_depth, "depth_loss");
  if (rendered_depth.channels != 1) throw DataError("depth_loss: depth maps must be 1-channel");

  DepthLossResultT<T> out;
  out.grad = ImageT<T>(rendered_depth.width, rendered_depth.height, 1);

  const PatchRect full{0, 0, rendered_depth.width, rendered_depth.height};
  T r_global = T(0);
  if (!patch_pcc_grad(rendered_depth, target_depth, full, T(-1), &out.grad, &r_global))
    ++out.degenerate_patches;
  out.global_term = T(1) - r_global;

  const auto patches = select_depth_patches(rendered_depth.width, rendered_depth.height,
                                            patch_size, seed);
  const T patch_weight = T(-1) / T(patches.size());
  T local = T(0);
  for (const PatchRect& r : patches) {
    T r_patch = T(0);
    if (!patch_pcc_grad(rendered_depth, target_depth, r, patch_weight, &out.grad, &r_patch))
      ++out.degenerate_patches;
    local += T(1) - r_patch;
  }
  out.local_term = local / T(patches.size());
  return out;
}

template <typename T>
DenoiseLossResultT<T> denoise_loss(const ImageT<T>& r, const ImageT<T>& r_k) {
  require_same_shape(r, r_k, "denoise_loss");
  DenoiseLossResultT<T> out;
  out.grad_r = ImageT<T>(r.width, r.height, r.channels);
  out.grad_rk = ImageT<T>(r.width, r.height, r.channels);
  const T inv_count = T(1) / T(r.data.size());

  T mse = T(0);
  for (std::size_t i = 0; i < r.data.size(); ++i) {
    const T d = r.data[i] - r_k.data[i];
    mse += d * d;
    out.grad_r.data[i] = T(2) * d * inv_count;
    out.grad_rk.data[i] = T(-2) * d * inv_count;
  }
  mse *= inv_count;

  // Anisotropic TV, forward differences, normalized by the full value count.
  T tv = T(0);
  for (int c = 0; c < r.channels; ++c)
    for (int y = 0; y < r.height; ++y)
      for (int x = 0; x < r.width; ++x) {
        if (x + 1 < r.width) {
          const T d = r.at(x + 1, y, c) - r.at(x, y, c);
          tv += std::abs(d);
          const T s = sign_of(d) * inv_count;
          out.grad_r.at(x + 1, y, c) += s;
          out.grad_r.at(x, y, c) -= s;
        }
        if (y + 1 < r.height) {
          const T d = r.at(x, y + 1, c) - r.at(x, y, c);
          tv += std::abs(d);
          const T s = sign_of(d) * inv_count;
          out.grad_r.at(x, y + 1, c) += s;
          out.grad_r.at(x, y, c) -= s;
        }
      }
  out.value = mse + tv * inv_count;
  return out;
}

template <typename T>
ReconstructionLossResultT<T> reconstruction_loss(const ImageT<T>& r, const ImageT<T>& illum,
                                                 const ImageT<T>& input, T lambda) {
  require_same_shape(r, illum, "reconstruction_loss");
  require_same_shape(r, input, "reconstruction_loss");

  ImageT<T> out_img(r.width, r.height, r.channels);
  for (std::size_t i = 0; i < r.data.size(); ++i) out_img.data[i] = r.data[i] * illum.data[i];

  const ValueGradT<T> l1 = l1_with_grad(out_img, input);
  const SsimGradResult<T> ss = ssim_with_grad(out_img, input);

  ReconstructionLossResultT<T> out;
  out.l1_term = l1.value;
  out.ssim_term = T(1) - ss.value;
  out.value = (T(1) - lambda) * out.l1_term + lambda * out.ssim_term;
  out.grad_r = ImageT<T>(r.width, r.height, r.channels);
  out.grad_illum = ImageT<T>(r.width, r.height, r.channels);
  for (std::size_t i = 0; i < r.data.size(); ++i) {
    const T d_out = (T(1) - lambda) * l1.grad.data[i] - lambda * ss.grad_x.data[i];
    out.grad_r.data[i] = d_out * illum.data[i];
    out.grad_illum.data[i] = d_out * r.data[i];
  }
  return out;
}

template struct LossBundleT<float>;
template struct LossBundleT<double>;
template ValueGradT<float> exposure_loss<float>(const ImageT<float>&, const ImageT<float>&,
                                                float);
template ValueGradT<double> exposure_loss<double>(const ImageT<double>&, const ImageT<double>&,
                                                  double);
template ValueGradT<float> prior_loss<float>(const ImageT<float>&, const ImageT<float>&);
template ValueGradT<double> prior_loss<double>(const ImageT<double>&, const ImageT<double>&);
template float pcc<float>(const ImageT<float>&, const ImageT<float>&);
template double pcc<double>(const ImageT<double>&, const ImageT<double>&);
template DepthLossResultT<float> depth_loss<float>(const ImageT<float>&, const ImageT<float>&,
                                                   int, std::uint64_t);
template DepthLossResultT<double> depth_loss<double>(const ImageT<double>&,
                                                     const ImageT<double>&, int, std::uint64_t);
template DenoiseLossResultT<float> denoise_loss<float>(const ImageT<float>&,
                                                       const ImageT<float>&);
template DenoiseLossResultT<double> denoise_loss<double>(const ImageT<double>&,
                                                         const ImageT<double>&);
template ReconstructionLossResultT<float> reconstruction_loss<float>(const ImageT<float>&,
                                                                     const ImageT<float>&,
                                                                     const ImageT<float>&,
                                                                     float);
template ReconstructionLossResultT<double> reconstruction_loss<double>(const ImageT<double>&,
                                                                       const ImageT<double>&,
                                                                       const ImageT<double>&,
                                                                       double);

}  // namespace lumi
