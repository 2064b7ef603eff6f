#pragma once

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include "lumi/activations.hpp"
#include "lumi/project.hpp"
#include "lumi/render.hpp"
#include "lumi/sh.hpp"

namespace lumi::detail {

// Channel layout inside the per-primitive value vector.
inline constexpr int kChanColor = 0;      // 3
inline constexpr int kChanStructure = 3;  // 1
inline constexpr int kChanDepth = 4;      // 1
inline constexpr int kChanIllum = 5;      // 3
inline constexpr int kChanNoise = 8;      // 3

// Footprint multipliers on sqrt(max eigenvalue of cov2d). 3.5 covers the
// 1/255 contribution cutoff for any opacity; 9 leaves residuals below 1e-17
// when thresholds are disabled.
template <typename T>
T footprint_sigmas(const RenderSettingsT<T>& s) {
  return s.exact ? T(9) : T(3.5);
}

template <typename T>
std::uint64_t render_fingerprint(int n, const CameraT<T>& cam, const RenderSettingsT<T>& s) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const void* p, std::size_t len) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= b[i];
      h *= 1099511628211ULL;
    }
  };
  mix(&n, sizeof n);
  mix(&cam.width, sizeof cam.width);
  mix(&cam.height, sizeof cam.height);
  const T intr[4] = {cam.fx, cam.fy, cam.cx, cam.cy};
  mix(intr, sizeof intr);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) mix(&cam.rotation(r, c), sizeof(T));
  for (int r = 0; r < 3; ++r) mix(&cam.translation[r], sizeof(T));
  mix(&s.tile_size, sizeof s.tile_size);
  mix(&s.contrib_threshold, sizeof s.contrib_threshold);
  mix(&s.transmittance_stop, sizeof s.transmittance_stop);
  mix(&s.exact, sizeof s.exact);
  return h;
}

// Everything the forward and backward traversals share: projected footprints,
// inverse covariances, decoded opacities and channel values, the global depth
// order and the tile lists. Built identically by both passes so recomputed
// weights match the forward bit for bit.
template <typename T>
struct RenderContext {
  std::vector<ProjectedSplatT<T>> proj;
  std::vector<std::array<T, 3>> conic;            // (qxx, qxy, qyy)
  std::vector<T> alpha;                           // decoded opacity
  std::vector<std::array<T, kRenderChannels>> values;
  std::vector<Eigen::Matrix<T, 3, 1>> view_dir;   // unit, camera to center
  std::vector<std::uint8_t> active;               // participates in compositing
  std::vector<std::uint32_t> order;               // active indices, ascending (z, index)
  std::vector<T> radius;                          // binning radius in pixels

  int tiles_x = 0, tiles_y = 0;
  std::vector<std::vector<std::uint32_t>> tile_prims;  // positions into `order`

  int culled = 0;
  int skipped = 0;

  void build(const GaussianCloudT<T>& cloud, const CameraT<T>& cam,
             const RenderSettingsT<T>& settings) {
    const int n = cloud.size();
    proj = project(cloud, cam);
    conic.assign(n, {T(0), T(0), T(0)});
    alpha.assign(n, T(0));
    values.assign(n, {});
    view_dir.assign(n, Eigen::Matrix<T, 3, 1>(T(0), T(0), T(1)));
    active.assign(n, 0);
    radius.assign(n, T(0));

    const Eigen::Matrix<T, 3, 1> cam_pos = cam.position();
    const T sigmas = footprint_sigmas(settings);
    culled = skipped = 0;

    ShBasis<T> basis;
    for (int i = 0; i < n; ++i) {
      if (proj[i].culled) {
        ++culled;
        continue;
      }
      const auto& c2 = proj[i].cov2d;
      const T det = c2(0, 0) * c2(1, 1) - c2(0, 1) * c2(0, 1);
      if (!(det > T(1e-12)) || !std::isfinite(det)) {
        ++skipped;
        continue;
      }
      const T inv_det = T(1) / det;
      conic[i] = {c2(1, 1) * inv_det, -c2(0, 1) * inv_det, c2(0, 0) * inv_det};

      const T mid = (c2(0, 0) + c2(1, 1)) / T(2);
      const T disc = std::sqrt(std::max(mid * mid - det, T(0)));
      radius[i] = sigmas * std::sqrt(std::max(mid + disc, T(1e-8)));

      alpha[i] = sigmoid(cloud.opacity_logits[i]);

      Eigen::Matrix<T, 3, 1> v = cloud.position(i) - cam_pos;
      const T vn = v.norm();
      if (vn > T(0)) view_dir[i] = v / vn;
      sh_basis(cloud.sh_degree, view_dir[i], basis, false);
      const int coeffs = (cloud.sh_degree + 1) * (cloud.sh_degree + 1);
      const T* sh = cloud.sh_coeffs.data() + std::size_t(i) * GaussianCloudT<T>::kShCoeffCount * 3;
      for (int ch = 0; ch < 3; ++ch) {
        T acc = T(0.5);
        for (int b = 0; b < coeffs; ++b) acc += basis.value[b] * sh[b * 3 + ch];
        values[i][kChanColor + ch] = std::max(acc, T(0));
      }
      values[i][kChanStructure] = sigmoid(cloud.structure_logits[i]);
      values[i][kChanDepth] = sigmoid(cloud.depth_logits[i]);
      for (int k = 0; k < 3; ++k)
        values[i][kChanIllum + k] = std::exp(cloud.illum_raw[3 * i + k]);
      for (int k = 0; k < 3; ++k) values[i][kChanNoise + k] = cloud.noise_raw[3 * i + k];
      active[i] = 1;
    }

    order.clear();
    order.reserve(n);
    for (int i = 0; i < n; ++i)
      if (active[i]) order.push_back(static_cast<std::uint32_t>(i));
    std::stable_sort(order.begin(), order.end(), [this](std::uint32_t a, std::uint32_t b) {
      if (proj[a].depth != proj[b].depth) return proj[a].depth < proj[b].depth;
      return a < b;  // ties broken by primitive index
    });

    const int ts = settings.tile_size;
    tiles_x = (cam.width + ts - 1) / ts;
    tiles_y = (cam.height + ts - 1) / ts;
    tile_prims.assign(std::size_t(tiles_x) * tiles_y, {});
    for (std::uint32_t rank = 0; rank < order.size(); ++rank) {
      const std::uint32_t i = order[rank];
      const T r = radius[i] + T(1);
      const int x0 = std::max(0, int(std::floor(proj[i].mean2d[0] - r)));
      const int x1 = std::min(cam.width - 1, int(std::ceil(proj[i].mean2d[0] + r)));
      const int y0 = std::max(0, int(std::floor(proj[i].mean2d[1] - r)));
      const int y1 = std::min(cam.height - 1, int(std::ceil(proj[i].mean2d[1] + r)));
      if (x0 > x1 || y0 > y1) continue;
      for (int ty = y0 / ts; ty <= y1 / ts; ++ty)
        for (int tx = x0 / ts; tx <= x1 / ts; ++tx)
          tile_prims[std::size_t(ty) * tiles_x + tx].push_back(rank);
    }
  }
};

}  // namespace lumi::detail
