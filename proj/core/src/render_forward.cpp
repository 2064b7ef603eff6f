#include <atomic>

#include "lumi/parallel.hpp"
#include "lumi/render.hpp"
#include "render_internal.hpp"

namespace lumi {

namespace {

template <typename T>
struct TileScratch {
  // (pixel, primitive) pairs in traversal order: grouped per pixel, each group
  // front to back. Turned into the CSR aux after all tiles finish.
  std::vector<std::pair<std::uint32_t, std::uint32_t>> entries;
};

}  // namespace

template <typename T>
RenderOutputT<T> render(const GaussianCloudT<T>& cloud, const CameraT<T>& cam,
                        const std::array<T, 3>& background,
                        const RenderSettingsT<T>& settings) {
  const int w = cam.width, h = cam.height;
  RenderOutputT<T> out;
  out.color = ImageT<T>(w, h, 3);
  for (int c = 0; c < 3; ++c)
    std::fill(out.color.plane(c).begin(), out.color.plane(c).end(), background[c]);
  out.structure = ImageT<T>(w, h, 1);
  out.depth = ImageT<T>(w, h, 1);
  out.illum = ImageT<T>(w, h, 3);
  out.noise = ImageT<T>(w, h, 3);
  out.aux.final_transmittance.assign(std::size_t(w) * h, T(1));
  out.aux.fingerprint = detail::render_fingerprint(cloud.size(), cam, settings);

  detail::RenderContext<T> ctx;
  ctx.build(cloud, cam, settings);
  out.aux.culled = ctx.culled;
  out.aux.skipped = ctx.skipped;

  const int ts = settings.tile_size;
  const int tile_count = ctx.tiles_x * ctx.tiles_y;
  std::vector<TileScratch<T>> scratch(tile_count);

  parallel_for(tile_count, settings.threads, [&](int tile) {
    const auto& list = ctx.tile_prims[tile];
    if (list.empty()) return;
    const int tx = tile % ctx.tiles_x, ty = tile / ctx.tiles_x;
    const int x0 = tx * ts, y0 = ty * ts;
    const int x1 = std::min(w, x0 + ts), y1 = std::min(h, y0 + ts);
    auto& entries = scratch[tile].entries;

    for (int y = y0; y < y1; ++y) {
      for (int x = x0; x < x1; ++x) {
        const T px = T(x) + T(0.5), py = T(y) + T(0.5);
        const std::size_t pixel = std::size_t(y) * w + x;
        T trans = T(1);
        T accum[kRenderChannels] = {};

        for (std::uint32_t rank : list) {
          const std::uint32_t i = ctx.order[rank];
          const T dx = px - ctx.proj[i].mean2d[0];
          const T dy = py - ctx.proj[i].mean2d[1];
          const auto& q = ctx.conic[i];
          const T m = q[0] * dx * dx + T(2) * q[1] * dx * dy + q[2] * dy * dy;
          const T g = std::exp(T(-0.5) * m);
          const T a = ctx.alpha[i] * g;
          if (!settings.exact && a < settings.contrib_threshold) continue;
          const T trans_next = trans * (T(1) - a);
          if (!settings.exact && trans_next < settings.transmittance_stop) break;
          const T weight = a * trans;
          for (int ch = 0; ch < kRenderChannels; ++ch)
            accum[ch] += ctx.values[i][ch] * weight;
          entries.emplace_back(std::uint32_t(pixel), i);
          trans = trans_next;
        }

        out.aux.final_transmittance[pixel] = trans;
        for (int ch = 0; ch < 3; ++ch)
          out.color.data[std::size_t(ch) * w * h + pixel] =
              accum[detail::kChanColor + ch] + background[ch] * trans;
        out.structure.data[pixel] = accum[detail::kChanStructure];
        out.depth.data[pixel] = accum[detail::kChanDepth];
        for (int ch = 0; ch < 3; ++ch)
          out.illum.data[std::size_t(ch) * w * h + pixel] = accum[detail::kChanIllum + ch];
        for (int ch = 0; ch < 3; ++ch)
          out.noise.data[std::size_t(ch) * w * h + pixel] = accum[detail::kChanNoise + ch];
      }
    }
  });

  // Assemble the CSR contributor lists in pixel order (deterministic for any
  // thread count: tiles own disjoint pixel sets).
  std::vector<std::uint32_t> counts(std::size_t(w) * h, 0);
  std::size_t total = 0;
  for (const auto& s : scratch) {
    total += s.entries.size();
    for (const auto& [pixel, prim] : s.entries) ++counts[pixel];
  }
  out.aux.offsets.assign(std::size_t(w) * h + 1, 0);
  for (std::size_t p = 0; p < counts.size(); ++p)
    out.aux.offsets[p + 1] = out.aux.offsets[p] + counts[p];
  out.aux.contributors.resize(total);
  std::vector<std::uint32_t> cursor(out.aux.offsets.begin(), out.aux.offsets.end() - 1);
  for (const auto& s : scratch)
    for (const auto& [pixel, prim] : s.entries) out.aux.contributors[cursor[pixel]++] = prim;

  return out;
}

template <typename T>
RenderStats render_stats(const RenderOutputT<T>& output) {
  RenderStats stats;
  stats.culled = output.aux.culled;
  stats.skipped = output.aux.skipped;
  const auto& off = output.aux.offsets;
  if (off.size() <= 1) return stats;
  std::uint64_t total = 0;
  for (std::size_t p = 0; p + 1 < off.size(); ++p) {
    const std::uint32_t c = off[p + 1] - off[p];
    total += c;
    stats.contributors_max = std::max(stats.contributors_max, c);
  }
  stats.contributors_mean = double(total) / double(off.size() - 1);
  return stats;
}

template <typename T>
bool GradientBundleT<T>::all_finite() const {
  auto ok = [](const std::vector<T>& v) {
    for (T x : v)
      if (!std::isfinite(x)) return false;
    return true;
  };
  return ok(positions) && ok(rotations) && ok(log_scales) && ok(opacity_logits) &&
         ok(sh_coeffs) && ok(structure_logits) && ok(illum_raw) && ok(depth_logits) &&
         ok(noise_raw);
}

template struct GradientBundleT<float>;
template struct GradientBundleT<double>;
template RenderOutputT<float> render<float>(const GaussianCloudT<float>&, const CameraT<float>&,
                                            const std::array<float, 3>&,
                                            const RenderSettingsT<float>&);
template RenderOutputT<double> render<double>(const GaussianCloudT<double>&,
                                              const CameraT<double>&,
                                              const std::array<double, 3>&,
                                              const RenderSettingsT<double>&);
template RenderStats render_stats<float>(const RenderOutputT<float>&);
template RenderStats render_stats<double>(const RenderOutputT<double>&);

}  // namespace lumi
