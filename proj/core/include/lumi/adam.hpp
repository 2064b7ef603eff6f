#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace lumi {

struct AdamParams {
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float eps = 1e-15f;
};

struct AdamMoments {
  std::vector<float> m, v;

  void resize(std::size_t n) {
    m.resize(n, 0.0f);
    v.resize(n, 0.0f);
  }
  /// Keeps rows where keep[i] (row granularity `stride`), then appends
  /// `appended` zero rows; mirrors densify/prune edits of the parameter array.
  void remap(const std::vector<std::uint8_t>& keep, int stride, std::size_t appended);
};

/// One Adam update with bias correction at step t (1-based).
void adam_step(std::span<float> params, std::span<const float> grads, AdamMoments& moments,
               float lr, const AdamParams& hp, std::int64_t t);

}  // namespace lumi
