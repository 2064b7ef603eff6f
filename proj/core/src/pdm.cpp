#include "lumi/pdm.hpp"

#include <cmath>

#include "lumi/convolve.hpp"
#include "lumi/errors.hpp"
#include "lumi/random.hpp"

namespace lumi {

namespace {

template <typename T>
Kernel1DT<T> bootstrap_blur_kernel() {
  // 5x5 Gaussian, sigma 1, as a separable 5-tap kernel.
  return gaussian_kernel(T(1), 0, /*radius_override=*/2);
}

// 3x3 convolution with replicate padding over planar images.
template <typename T>
ImageT<T> conv3x3(const ImageT<T>& in, const std::vector<T>& w, const std::vector<T>& b,
                  int out_ch) {
  const int width = in.width, height = in.height, in_ch = in.channels;
  ImageT<T> out(width, height, out_ch);
  auto clampv = [](int v, int n) { return v < 0 ? 0 : (v >= n ? n - 1 : v); };

  for (int o = 0; o < out_ch; ++o) {
    T* dst = out.plane(o).data();
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) dst[std::size_t(y) * width + x] = b[o];
    for (int i = 0; i < in_ch; ++i) {
      const T* src = in.plane(i).data();
      const T* taps = w.data() + (std::size_t(o) * in_ch + i) * 9;
      for (int y = 0; y < height; ++y) {
        const int ym = clampv(y - 1, height), yp = clampv(y + 1, height);
        const T* rows[3] = {src + std::size_t(ym) * width, src + std::size_t(y) * width,
                            src + std::size_t(yp) * width};
        T* drow = dst + std::size_t(y) * width;
        for (int x = 0; x < width; ++x) {
          const int xm = clampv(x - 1, width), xp = clampv(x + 1, width);
          T acc = T(0);
          for (int ky = 0; ky < 3; ++ky) {
            const T* r = rows[ky];
            acc += taps[ky * 3 + 0] * r[xm] + taps[ky * 3 + 1] * r[x] + taps[ky * 3 + 2] * r[xp];
          }
          drow[x] += acc;
        }
      }
    }
  }
  return out;
}

// Adjoint of conv3x3: scatters grad_out into grad_in and accumulates weight
// and bias gradients.
template <typename T>
void conv3x3_backward(const ImageT<T>& in, const std::vector<T>& w, int out_ch,
                      const ImageT<T>& grad_out, ImageT<T>& grad_in, std::vector<T>& grad_w,
                      std::vector<T>& grad_b) {
  const int width = in.width, height = in.height, in_ch = in.channels;
  auto clampv = [](int v, int n) { return v < 0 ? 0 : (v >= n ? n - 1 : v); };

  for (int o = 0; o < out_ch; ++o) {
    const T* g = grad_out.plane(o).data();
    T bsum = T(0);
    for (std::size_t p = 0; p < grad_out.pixel_count(); ++p) bsum += g[p];
    grad_b[o] += bsum;

    for (int i = 0; i < in_ch; ++i) {
      const T* src = in.plane(i).data();
      T* gin = grad_in.plane(i).data();
      const T* taps = w.data() + (std::size_t(o) * in_ch + i) * 9;
      T* gtaps = grad_w.data() + (std::size_t(o) * in_ch + i) * 9;
      for (int y = 0; y < height; ++y) {
        const int ys[3] = {clampv(y - 1, height), y, clampv(y + 1, height)};
        const T* grow = g + std::size_t(y) * width;
        for (int x = 0; x < width; ++x) {
          const T gv = grow[x];
          if (gv == T(0)) continue;
          const int xs[3] = {clampv(x - 1, width), x, clampv(x + 1, width)};
          for (int ky = 0; ky < 3; ++ky)
            for (int kx = 0; kx < 3; ++kx) {
              const std::size_t sp = std::size_t(ys[ky]) * width + xs[kx];
              gin[sp] += taps[ky * 3 + kx] * gv;
              gtaps[ky * 3 + kx] += gv * src[sp];
            }
        }
      }
    }
  }
}

template <typename T>
ImageT<T> relu(const ImageT<T>& in) {
  ImageT<T> out = in;
  for (T& v : out.data) v = v > T(0) ? v : T(0);
  return out;
}

}  // namespace

template <typename T>
PdmWeightsT<T> PdmWeightsT<T>::zeros() {
  PdmWeightsT<T> w;
  w.w1.assign(std::size_t(kHidden) * 3 * 9, T(0));
  w.b1.assign(kHidden, T(0));
  w.w2.assign(std::size_t(kHidden) * kHidden * 9, T(0));
  w.b2.assign(kHidden, T(0));
  w.w3.assign(std::size_t(3) * kHidden * 9, T(0));
  w.b3.assign(3, T(0));
  return w;
}

template <typename T>
PdmWeightsT<T> PdmWeightsT<T>::he_init(std::uint64_t seed) {
  PdmWeightsT<T> w = zeros();
  Rng rng(seed, /*stream=*/0x9d);
  auto fill_he = [&rng](std::vector<T>& taps, int fan_in) {
    const double std_dev = std::sqrt(2.0 / double(fan_in));
    for (T& t : taps) t = T(rng.normal() * std_dev);
  };
  fill_he(w.w1, 3 * 9);
  fill_he(w.w2, kHidden * 9);
  fill_he(w.w3, kHidden * 9);
  return w;
}

template <typename T>
bool PdmWeightsT<T>::all_finite() const {
  auto ok = [](const std::vector<T>& v) {
    for (T x : v)
      if (!std::isfinite(x)) return false;
    return true;
  };
  return ok(w1) && ok(b1) && ok(w2) && ok(b2) && ok(w3) && ok(b3);
}

template <typename T>
void PdmWeightsT<T>::accumulate(const PdmWeightsT<T>& o, T weight) {
  auto axpy = [weight](std::vector<T>& dst, const std::vector<T>& src) {
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += weight * src[i];
  };
  axpy(w1, o.w1);
  axpy(b1, o.b1);
  axpy(w2, o.w2);
  axpy(b2, o.b2);
  axpy(w3, o.w3);
  axpy(b3, o.b3);
}

template <typename T>
void PdmWeightsT<T>::fill(T v) {
  for (auto* arr : {&w1, &b1, &w2, &b2, &w3, &b3})
    for (T& x : *arr) x = v;
}

template <typename T>
ImageT<T> pdm_bootstrap(const ImageT<T>& r_k, const ImageT<T>& noise_gs, int stage) {
  if (stage == 0 && !r_k.same_shape(noise_gs))
    throw DataError("pdm_bootstrap: shape mismatch between image and noise map");
  const Kernel1DT<T> blur = bootstrap_blur_kernel<T>();
  const ImageT<T> low = convolve_separable(r_k, blur, blur);
  ImageT<T> out(r_k.width, r_k.height, r_k.channels);
  if (stage == 0) {
    for (std::size_t p = 0; p < out.data.size(); ++p)
      out.data[p] = (r_k.data[p] - low.data[p] + noise_gs.data[p]) / T(2);
  } else {
    for (std::size_t p = 0; p < out.data.size(); ++p) out.data[p] = r_k.data[p] - low.data[p];
  }
  return out;
}

template <typename T>
PdmTraceT<T> pdm_forward(const ImageT<T>& r0, const ImageT<T>& noise_gs,
                         const PdmWeightsT<T>& weights, int stages) {
  if (!weights.all_finite()) throw NumericsError("pdm_forward: non-finite weights");
  if (stages < 1) throw DataError("pdm_forward: need at least one stage");

  PdmTraceT<T> trace;
  trace.input_r0 = r0;
  trace.input_noise = noise_gs;
  trace.stages.resize(stages);

  const ImageT<T>* current = &r0;
  for (int k = 0; k < stages; ++k) {
    PdmStageTraceT<T>& st = trace.stages[k];
    st.bootstrap = pdm_bootstrap(*current, noise_gs, k);
    st.pre1 = conv3x3(st.bootstrap, weights.w1, weights.b1, PdmWeightsT<T>::kHidden);
    st.act1 = relu(st.pre1);
    st.pre2 = conv3x3(st.act1, weights.w2, weights.b2, PdmWeightsT<T>::kHidden);
    st.act2 = relu(st.pre2);
    st.refined = conv3x3(st.act2, weights.w3, weights.b3, 3);

    st.noise = ImageT<T>(r0.width, r0.height, 3);
    st.restored = ImageT<T>(r0.width, r0.height, 3);
    for (std::size_t p = 0; p < st.noise.data.size(); ++p) {
      st.noise.data[p] = st.bootstrap.data[p] - st.refined.data[p];
      st.restored.data[p] = r0.data[p] - st.noise.data[p];
    }
    current = &st.restored;
  }
  return trace;
}

template <typename T>
PdmGradsT<T> pdm_backward(const PdmTraceT<T>& trace, const PdmWeightsT<T>& weights,
                          const std::vector<ImageT<T>>& grad_restored) {
  const int stages = static_cast<int>(trace.stages.size());
  if (stages == 0 || grad_restored.size() != std::size_t(stages))
    throw DataError("pdm_backward: trace/adjoint mismatch");
  const int w = trace.input_r0.width, h = trace.input_r0.height;
  for (const auto& g : grad_restored)
    if (!g.data.empty() && !(g.width == w && g.height == h && g.channels == 3))
      throw DataError("pdm_backward: adjoint shape mismatch");

  PdmGradsT<T> grads;
  grads.weights = PdmWeightsT<T>::zeros();
  grads.r0 = ImageT<T>(w, h, 3);
  grads.noise_gs = ImageT<T>(w, h, 3);

  const Kernel1DT<T> blur = bootstrap_blur_kernel<T>();

  // carry = adjoint on R_{k+1} flowing backward through stage k.
  ImageT<T> carry(w, h, 3);
  for (int k = stages - 1; k >= 0; --k) {
    const PdmStageTraceT<T>& st = trace.stages[k];
    if (!grad_restored[k].data.empty())
      for (std::size_t p = 0; p < carry.data.size(); ++p)
        carry.data[p] += grad_restored[k].data[p];

    // R_{k+1} = R_0 - N_{k+1}
    ImageT<T> g_noise(w, h, 3);
    for (std::size_t p = 0; p < carry.data.size(); ++p) {
      grads.r0.data[p] += carry.data[p];
      g_noise.data[p] = -carry.data[p];
    }

    // N_{k+1} = bootstrap - F(bootstrap)
    ImageT<T> g_refined(w, h, 3);
    for (std::size_t p = 0; p < g_noise.data.size(); ++p) g_refined.data[p] = -g_noise.data[p];

    ImageT<T> g_act2(w, h, PdmWeightsT<T>::kHidden);
    ImageT<T> g_act1(w, h, PdmWeightsT<T>::kHidden);
    ImageT<T> g_bootstrap_net(w, h, 3);
    conv3x3_backward(st.act2, weights.w3, 3, g_refined, g_act2, grads.weights.w3,
                     grads.weights.b3);
    for (std::size_t p = 0; p < g_act2.data.size(); ++p)
      if (st.pre2.data[p] <= T(0)) g_act2.data[p] = T(0);
    conv3x3_backward(st.act1, weights.w2, PdmWeightsT<T>::kHidden, g_act2, g_act1,
                     grads.weights.w2, grads.weights.b2);
    for (std::size_t p = 0; p < g_act1.data.size(); ++p)
      if (st.pre1.data[p] <= T(0)) g_act1.data[p] = T(0);
    conv3x3_backward(st.bootstrap, weights.w1, PdmWeightsT<T>::kHidden, g_act1, g_bootstrap_net,
                     grads.weights.w1, grads.weights.b1);

    ImageT<T> g_bootstrap(w, h, 3);
    for (std::size_t p = 0; p < g_bootstrap.data.size(); ++p)
      g_bootstrap.data[p] = g_noise.data[p] + g_bootstrap_net.data[p];

    // Bootstrap: (R - C(R) + N_GS)/2 at stage 0, R - C(R) afterwards.
    if (k == 0) {
      ImageT<T> half = g_bootstrap;
      for (T& v : half.data) v /= T(2);
      const ImageT<T> blurred = convolve_separable_adjoint(half, blur, blur);
      for (std::size_t p = 0; p < half.data.size(); ++p) {
        grads.r0.data[p] += half.data[p] - blurred.data[p];
        grads.noise_gs.data[p] += half.data[p];
      }
      carry = ImageT<T>(w, h, 3);
    } else {
      const ImageT<T> blurred = convolve_separable_adjoint(g_bootstrap, blur, blur);
      ImageT<T> next(w, h, 3);
      for (std::size_t p = 0; p < next.data.size(); ++p)
        next.data[p] = g_bootstrap.data[p] - blurred.data[p];
      carry = std::move(next);  // adjoint on R_k, consumed by stage k-1
    }
  }
  return grads;
}

template struct PdmWeightsT<float>;
template struct PdmWeightsT<double>;
template ImageT<float> pdm_bootstrap<float>(const ImageT<float>&, const ImageT<float>&, int);
template ImageT<double> pdm_bootstrap<double>(const ImageT<double>&, const ImageT<double>&, int);
template PdmTraceT<float> pdm_forward<float>(const ImageT<float>&, const ImageT<float>&,
                                             const PdmWeightsT<float>&, int);
template PdmTraceT<double> pdm_forward<double>(const ImageT<double>&, const ImageT<double>&,
                                               const PdmWeightsT<double>&, int);
template PdmGradsT<float> pdm_backward<float>(const PdmTraceT<float>&, const PdmWeightsT<float>&,
                                              const std::vector<ImageT<float>>&);
template PdmGradsT<double> pdm_backward<double>(const PdmTraceT<double>&,
                                                const PdmWeightsT<double>&,
                                                const std::vector<ImageT<double>>&);

}  // namespace lumi
