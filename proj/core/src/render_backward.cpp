#include "lumi/errors.hpp"
#include "lumi/parallel.hpp"
#include "lumi/render.hpp"
#include "render_internal.hpp"

namespace lumi {

namespace {

// Screen-space gradients accumulated per (tile, primitive) before the
// per-primitive chain to 3D parameters.
template <typename T>
struct Grad2D {
  T mean2d[2] = {};
  T conic[3] = {};  // folded (qxx, qxy, qyy); qxy entry counts both off-diagonals
  T alpha = {};
  T chan[kRenderChannels] = {};

  void add(const Grad2D& o) {
    mean2d[0] += o.mean2d[0];
    mean2d[1] += o.mean2d[1];
    for (int k = 0; k < 3; ++k) conic[k] += o.conic[k];
    alpha += o.alpha;
    for (int k = 0; k < kRenderChannels; ++k) chan[k] += o.chan[k];
  }
};

template <typename T>
const T* plane_or_null(const ImageT<T>& img, int c) {
  return img.data.empty() ? nullptr : img.plane(c).data();
}

// d(rotation matrix)/d(unit quaternion component), q = (w, x, y, z).
template <typename T>
Eigen::Matrix<T, 3, 3> rotation_quat_partial(const Eigen::Matrix<T, 4, 1>& q, int k) {
  const T w = q[0], x = q[1], y = q[2], z = q[3];
  Eigen::Matrix<T, 3, 3> d;
  switch (k) {
    case 0:
      d << T(0), -z, y, z, T(0), -x, -y, x, T(0);
      break;
    case 1:
      d << T(0), y, z, y, T(-2) * x, -w, z, w, T(-2) * x;
      break;
    case 2:
      d << T(-2) * y, x, w, x, T(0), z, -w, z, T(-2) * y;
      break;
    default:
      d << T(-2) * z, -w, x, w, T(-2) * z, y, x, y, T(0);
      break;
  }
  return d * T(2);
}

}  // namespace

template <typename T>
GradientBundleT<T> render_backward(const GaussianCloudT<T>& cloud, const CameraT<T>& cam,
                                   const std::array<T, 3>& background,
                                   const RenderOutputT<T>& output,
                                   const RenderAdjointsT<T>& adjoints,
                                   const RenderSettingsT<T>& settings) {
  const int n = cloud.size();
  if (output.aux.fingerprint != detail::render_fingerprint(n, cam, settings))
    throw DataError("render_backward: aux does not match this cloud/camera/settings");
  if (output.aux.offsets.size() != std::size_t(cam.width) * cam.height + 1)
    throw DataError("render_backward: malformed aux");

  GradientBundleT<T> grads;
  grads.resize_like(cloud);
  if (n == 0) return grads;

  detail::RenderContext<T> ctx;
  ctx.build(cloud, cam, settings);

  const int w = cam.width, h = cam.height;
  const std::size_t px_count = std::size_t(w) * h;

  // Adjoint planes in channel-vector order (null => zero adjoint).
  const T* adj[kRenderChannels];
  for (int c = 0; c < 3; ++c) adj[detail::kChanColor + c] = plane_or_null(adjoints.color, c);
  adj[detail::kChanStructure] = plane_or_null(adjoints.structure, 0);
  adj[detail::kChanDepth] = plane_or_null(adjoints.depth, 0);
  for (int c = 0; c < 3; ++c) adj[detail::kChanIllum + c] = plane_or_null(adjoints.illum, c);
  for (int c = 0; c < 3; ++c) adj[detail::kChanNoise + c] = plane_or_null(adjoints.noise, c);
  for (int c = 0; c < kRenderChannels; ++c) {
    const ImageT<T>* img = nullptr;
    if (c < 3) img = &adjoints.color;
    else if (c == detail::kChanStructure) img = &adjoints.structure;
    else if (c == detail::kChanDepth) img = &adjoints.depth;
    else if (c < detail::kChanNoise) img = &adjoints.illum;
    else img = &adjoints.noise;
    if (adj[c] && img->pixel_count() != px_count)
      throw DataError("render_backward: adjoint image shape mismatch");
  }

  const int ts = settings.tile_size;
  const int tile_count = ctx.tiles_x * ctx.tiles_y;
  std::vector<std::vector<Grad2D<T>>> tile_grads(tile_count);

  parallel_for(tile_count, settings.threads, [&](int tile) {
    const auto& list = ctx.tile_prims[tile];
    if (list.empty()) return;
    auto& partial = tile_grads[tile];
    partial.assign(list.size(), {});

    // Slot lookup for this tile's primitives.
    std::vector<std::int32_t> slot_of(n, -1);
    for (std::size_t s = 0; s < list.size(); ++s) slot_of[ctx.order[list[s]]] = std::int32_t(s);

    const int tx = tile % ctx.tiles_x, ty = tile / ctx.tiles_x;
    const int x0 = tx * ts, y0 = ty * ts;
    const int x1 = std::min(w, x0 + ts), y1 = std::min(h, y0 + ts);

    struct Step {
      std::uint32_t prim;
      T a, g, trans_before, dx, dy;
    };
    std::vector<Step> steps;

    for (int y = y0; y < y1; ++y) {
      for (int x = x0; x < x1; ++x) {
        const std::size_t pixel = std::size_t(y) * w + x;
        const std::uint32_t begin = output.aux.offsets[pixel];
        const std::uint32_t end = output.aux.offsets[pixel + 1];
        if (begin == end) continue;

        T pixel_adj[kRenderChannels];
        bool any = false;
        for (int c = 0; c < kRenderChannels; ++c) {
          pixel_adj[c] = adj[c] ? adj[c][pixel] : T(0);
          any = any || pixel_adj[c] != T(0);
        }
        if (!any) continue;

        // Replay the forward traversal over the recorded contributors; the
        // recorded list already encodes every skip/stop decision.
        const T px = T(x) + T(0.5), py = T(y) + T(0.5);
        steps.clear();
        T trans = T(1);
        for (std::uint32_t j = begin; j < end; ++j) {
          const std::uint32_t i = output.aux.contributors[j];
          const T dx = px - ctx.proj[i].mean2d[0];
          const T dy = py - ctx.proj[i].mean2d[1];
          const auto& q = ctx.conic[i];
          const T m = q[0] * dx * dx + T(2) * q[1] * dx * dy + q[2] * dy * dy;
          const T g = std::exp(T(-0.5) * m);
          const T a = ctx.alpha[i] * g;
          steps.push_back({i, a, g, trans, dx, dy});
          trans *= (T(1) - a);
        }

        // Back-to-front sweep. U is the radiance the suffix would composite
        // with unit transmittance; seeding the color entries with bg folds the
        // background term in without any division by (1 - a).
        T u[kRenderChannels] = {};
        for (int c = 0; c < 3; ++c) u[detail::kChanColor + c] = background[c];

        for (std::size_t s = steps.size(); s-- > 0;) {
          const Step& st = steps[s];
          const std::uint32_t i = st.prim;
          Grad2D<T>& out = partial[slot_of[i]];

          T d_alpha_eff = T(0);  // dL/d(a) with a = alpha * G
          const T weight = st.a * st.trans_before;
          for (int c = 0; c < kRenderChannels; ++c) {
            const T pa = pixel_adj[c];
            if (pa == T(0)) continue;
            const T value = ctx.values[i][c];
            d_alpha_eff += pa * st.trans_before * (value - u[c]);
            out.chan[c] += pa * weight;
          }

          out.alpha += d_alpha_eff * st.g;
          const T d_g = d_alpha_eff * ctx.alpha[i];
          const T d_m = d_g * T(-0.5) * st.g;
          const auto& q = ctx.conic[i];
          out.conic[0] += d_m * st.dx * st.dx;
          out.conic[1] += d_m * T(2) * st.dx * st.dy;
          out.conic[2] += d_m * st.dy * st.dy;
          const T d_dx = d_m * T(2) * (q[0] * st.dx + q[1] * st.dy);
          const T d_dy = d_m * T(2) * (q[1] * st.dx + q[2] * st.dy);
          out.mean2d[0] -= d_dx;
          out.mean2d[1] -= d_dy;

          for (int c = 0; c < kRenderChannels; ++c)
            u[c] = st.a * ctx.values[i][c] + (T(1) - st.a) * u[c];
        }
      }
    }
  });

  // Deterministic reduction: tiles merged in index order.
  std::vector<Grad2D<T>> prim_grads(n);
  for (int tile = 0; tile < tile_count; ++tile) {
    const auto& list = ctx.tile_prims[tile];
    const auto& partial = tile_grads[tile];
    for (std::size_t s = 0; s < partial.size(); ++s) prim_grads[ctx.order[list[s]]].add(partial[s]);
  }

  // Per-primitive chain from screen-space gradients to raw parameters.
  const Eigen::Matrix<T, 3, 1> cam_pos = cam.position();
  parallel_for(n, settings.threads, [&](int i) {
    if (!ctx.active[i]) return;
    const Grad2D<T>& g2 = prim_grads[i];

    grads.opacity_logits[i] = g2.alpha * sigmoid_grad(cloud.opacity_logits[i]);
    grads.structure_logits[i] =
        g2.chan[detail::kChanStructure] * sigmoid_grad(cloud.structure_logits[i]);
    grads.depth_logits[i] = g2.chan[detail::kChanDepth] * sigmoid_grad(cloud.depth_logits[i]);
    for (int k = 0; k < 3; ++k) {
      grads.illum_raw[3 * i + k] =
          g2.chan[detail::kChanIllum + k] * std::exp(cloud.illum_raw[3 * i + k]);
      grads.noise_raw[3 * i + k] = g2.chan[detail::kChanNoise + k];
    }

    // Color -> SH coefficients and (through the view direction) the mean.
    Eigen::Matrix<T, 3, 1> d_dir = Eigen::Matrix<T, 3, 1>::Zero();
    {
      ShBasis<T> basis;
      sh_basis(cloud.sh_degree, ctx.view_dir[i], basis, true);
      const int coeffs = (cloud.sh_degree + 1) * (cloud.sh_degree + 1);
      const T* sh = cloud.sh_coeffs.data() + std::size_t(i) * GaussianCloudT<T>::kShCoeffCount * 3;
      T* gsh = grads.sh_coeffs.data() + std::size_t(i) * GaussianCloudT<T>::kShCoeffCount * 3;
      for (int ch = 0; ch < 3; ++ch) {
        const T d_c = g2.chan[detail::kChanColor + ch];
        if (d_c == T(0)) continue;
        if (ctx.values[i][detail::kChanColor + ch] <= T(0)) continue;  // clamped at zero
        for (int b = 0; b < coeffs; ++b) {
          gsh[b * 3 + ch] += d_c * basis.value[b];
          d_dir += d_c * sh[b * 3 + ch] * basis.ddir[b];
        }
      }
    }

    // Geometry chain.
    Eigen::Matrix<T, 4, 1> q_raw = cloud.quaternion(i);
    const T q_norm = q_raw.norm();
    Eigen::Matrix<T, 4, 1> q_hat = q_norm > T(0) ? (q_raw / q_norm).eval() : q_raw;
    const Eigen::Matrix<T, 3, 3> rot3 = quaternion_to_matrix(q_hat);
    const Eigen::Matrix<T, 3, 1> scale = cloud.scale(i);
    const Eigen::Matrix<T, 3, 3> m3 = rot3 * scale.asDiagonal();
    const Eigen::Matrix<T, 3, 3> sigma3 = m3 * m3.transpose();

    const Eigen::Matrix<T, 3, 1> t_cam = cam.to_camera(cloud.position(i));
    const T z = t_cam[2];
    const T inv_z = T(1) / z, inv_z2 = inv_z * inv_z, inv_z3 = inv_z2 * inv_z;
    Eigen::Matrix<T, 2, 3> jac;
    jac << cam.fx * inv_z, T(0), -cam.fx * t_cam[0] * inv_z2,
           T(0), cam.fy * inv_z, -cam.fy * t_cam[1] * inv_z2;
    const Eigen::Matrix<T, 2, 3> m = jac * cam.rotation;

    Eigen::Matrix<T, 2, 2> q_full;
    q_full << ctx.conic[i][0], ctx.conic[i][1], ctx.conic[i][1], ctx.conic[i][2];
    Eigen::Matrix<T, 2, 2> gq_full;
    gq_full << g2.conic[0], g2.conic[1] / T(2), g2.conic[1] / T(2), g2.conic[2];
    const Eigen::Matrix<T, 2, 2> g_cov = -q_full * gq_full * q_full;

    const Eigen::Matrix<T, 2, 3> g_m = T(2) * g_cov * m * sigma3;
    const Eigen::Matrix<T, 3, 3> g_sigma3 = m.transpose() * g_cov * m;
    const Eigen::Matrix<T, 2, 3> g_jac = g_m * cam.rotation.transpose();

    Eigen::Matrix<T, 3, 1> g_tcam;
    g_tcam[0] = g2.mean2d[0] * cam.fx * inv_z + g_jac(0, 2) * (-cam.fx * inv_z2);
    g_tcam[1] = g2.mean2d[1] * cam.fy * inv_z + g_jac(1, 2) * (-cam.fy * inv_z2);
    g_tcam[2] = g2.mean2d[0] * (-cam.fx * t_cam[0] * inv_z2) +
                g2.mean2d[1] * (-cam.fy * t_cam[1] * inv_z2) +
                g_jac(0, 0) * (-cam.fx * inv_z2) + g_jac(0, 2) * (T(2) * cam.fx * t_cam[0] * inv_z3) +
                g_jac(1, 1) * (-cam.fy * inv_z2) + g_jac(1, 2) * (T(2) * cam.fy * t_cam[1] * inv_z3);

    Eigen::Matrix<T, 3, 1> g_mu = cam.rotation.transpose() * g_tcam;

    // View-direction contribution of the SH evaluation.
    const Eigen::Matrix<T, 3, 1> v = cloud.position(i) - cam_pos;
    const T v_norm = v.norm();
    if (v_norm > T(0) && !d_dir.isZero()) {
      const Eigen::Matrix<T, 3, 1> dir = ctx.view_dir[i];
      g_mu += (d_dir - dir * dir.dot(d_dir)) / v_norm;
    }

    const Eigen::Matrix<T, 3, 3> g_m3 = T(2) * g_sigma3 * m3;
    const Eigen::Matrix<T, 3, 3> g_rot3 = g_m3 * scale.asDiagonal();
    const Eigen::Matrix<T, 3, 3> rt_gm3 = rot3.transpose() * g_m3;
    for (int k = 0; k < 3; ++k) grads.log_scales[3 * i + k] = rt_gm3(k, k) * scale[k];

    Eigen::Matrix<T, 4, 1> g_qhat;
    for (int k = 0; k < 4; ++k)
      g_qhat[k] = (g_rot3.array() * rotation_quat_partial(q_hat, k).array()).sum();
    if (q_norm > T(0)) {
      const Eigen::Matrix<T, 4, 1> g_q = (g_qhat - q_hat * q_hat.dot(g_qhat)) / q_norm;
      for (int k = 0; k < 4; ++k) grads.rotations[4 * i + k] = g_q[k];
    }

    for (int k = 0; k < 3; ++k) grads.positions[3 * i + k] = g_mu[k];
  });

  return grads;
}

template GradientBundleT<float> render_backward<float>(const GaussianCloudT<float>&,
                                                       const CameraT<float>&,
                                                       const std::array<float, 3>&,
                                                       const RenderOutputT<float>&,
                                                       const RenderAdjointsT<float>&,
                                                       const RenderSettingsT<float>&);
template GradientBundleT<double> render_backward<double>(const GaussianCloudT<double>&,
                                                         const CameraT<double>&,
                                                         const std::array<double, 3>&,
                                                         const RenderOutputT<double>&,
                                                         const RenderAdjointsT<double>&,
                                                         const RenderSettingsT<double>&);

}  // namespace lumi
