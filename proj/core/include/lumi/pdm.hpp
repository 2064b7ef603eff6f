#pragma once

#include <cstdint>
#include <vector>

#include "lumi/image.hpp"

namespace lumi {

/// Progressive denoising network: three 3x3 convolutions (3 -> 16 -> 16 -> 3)
/// with ReLU after the first two, shared across all stages. Weight layout is
/// w[((out*in_ch + in)*3 + ky)*3 + kx], replicate padding.
template <typename T>
struct PdmWeightsT {
  static constexpr int kHidden = 16;
  static constexpr int kStagesDefault = 3;

  std::vector<T> w1, b1, w2, b2, w3, b3;

  static PdmWeightsT zeros();
  /// He-normal taps, zero biases, deterministic for a given seed.
  static PdmWeightsT he_init(std::uint64_t seed);

  std::size_t parameter_count() const {
    return w1.size() + b1.size() + w2.size() + b2.size() + w3.size() + b3.size();
  }
  bool all_finite() const;
  void accumulate(const PdmWeightsT& o, T weight = T(1));
  void fill(T v);
};

using PdmWeights = PdmWeightsT<float>;

template <typename T>
struct PdmStageTraceT {
  ImageT<T> bootstrap;          // initial noise estimate for this stage
  ImageT<T> pre1, act1, pre2, act2;  // cached conv activations
  ImageT<T> refined;            // network output F(bootstrap)
  ImageT<T> noise;              // refined noise map N_{k+1}
  ImageT<T> restored;           // R_{k+1} = R_0 - N_{k+1}
};

template <typename T>
struct PdmTraceT {
  ImageT<T> input_r0, input_noise;
  std::vector<PdmStageTraceT<T>> stages;

  const ImageT<T>& output() const { return stages.back().restored; }
};

using PdmTrace = PdmTraceT<float>;

/// Fast bootstrapping: stage 0 averages the high-frequency residual with the
/// rendered noise channel, (R_0 - C(R_0) + N_GS)/2; later stages use
/// R_k - C(R_k). C is a 5x5 Gaussian blur (sigma 1), edge replicated.
template <typename T>
ImageT<T> pdm_bootstrap(const ImageT<T>& r_k, const ImageT<T>& noise_gs, int stage);

/// Runs all stages; the reconstruction identity R_{k+1} + N_{k+1} == R_0 holds
/// exactly at every stage. Throws NumericsError on non-finite weights.
template <typename T>
PdmTraceT<T> pdm_forward(const ImageT<T>& r0, const ImageT<T>& noise_gs,
                         const PdmWeightsT<T>& weights,
                         int stages = PdmWeightsT<T>::kStagesDefault);

template <typename T>
struct PdmGradsT {
  PdmWeightsT<T> weights;
  ImageT<T> r0;        // adjoint on the rendered image
  ImageT<T> noise_gs;  // adjoint on the rendered noise channel
};

using PdmGrads = PdmGradsT<float>;

/// Full chain rule through every stage, the restored-image recurrence and the
/// bootstrap blur. grad_restored[k] is the adjoint on R_{k+1}; the last entry
/// is the adjoint on the final output, earlier entries may be empty (zero).
/// Throws DataError when the trace does not match the weights.
template <typename T>
PdmGradsT<T> pdm_backward(const PdmTraceT<T>& trace, const PdmWeightsT<T>& weights,
                          const std::vector<ImageT<T>>& grad_restored);

extern template struct PdmWeightsT<float>;
extern template struct PdmWeightsT<double>;
extern template ImageT<float> pdm_bootstrap<float>(const ImageT<float>&, const ImageT<float>&,
                                                   int);
extern template ImageT<double> pdm_bootstrap<double>(const ImageT<double>&,
                                                     const ImageT<double>&, int);
extern template PdmTraceT<float> pdm_forward<float>(const ImageT<float>&, const ImageT<float>&,
                                                    const PdmWeightsT<float>&, int);
extern template PdmTraceT<double> pdm_forward<double>(const ImageT<double>&,
                                                      const ImageT<double>&,
                                                      const PdmWeightsT<double>&, int);
extern template PdmGradsT<float> pdm_backward<float>(const PdmTraceT<float>&,
                                                     const PdmWeightsT<float>&,
                                                     const std::vector<ImageT<float>>&);
extern template PdmGradsT<double> pdm_backward<double>(const PdmTraceT<double>&,
                                                       const PdmWeightsT<double>&,
                                                       const std::vector<ImageT<double>>&);

}  // namespace lumi
