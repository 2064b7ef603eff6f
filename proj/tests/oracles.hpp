#pragma once

// Independent reference implementations used as test oracles. Everything here
// is deliberately written as straight-line double-precision code with no
// tiling, no early-out and no shared state with the library internals it
// checks.

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <vector>

#include "lumi/camera.hpp"
#include "lumi/gaussian_cloud.hpp"
#include "lumi/image.hpp"

namespace oracle {

// ---------------------------------------------------------------------------
// Dense 2D convolution (correlation) with edge replication; reference for the
// separable path.
template <typename T>
lumi::ImageT<T> dense_convolve(const lumi::ImageT<T>& img, const std::vector<T>& kx,
                               const std::vector<T>& ky) {
  const int rx = int(kx.size()) / 2, ry = int(ky.size()) / 2;
  lumi::ImageT<T> out(img.width, img.height, img.channels);
  auto clampi = [](int v, int n) { return v < 0 ? 0 : (v >= n ? n - 1 : v); };
  for (int c = 0; c < img.channels; ++c)
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x) {
        double acc = 0.0;
        for (int j = -ry; j <= ry; ++j)
          for (int i = -rx; i <= rx; ++i)
            acc += double(ky[ry + j]) * double(kx[rx + i]) *
                   double(img.at(clampi(x + i, img.width), clampi(y + j, img.height), c));
        out.at(x, y, c) = T(acc);
      }
  return out;
}

// ---------------------------------------------------------------------------
// Brute-force compositing oracle: per pixel, walk every primitive in global
// (z, index) order and apply the compositing recurrence directly.

struct OracleOutputs {
  lumi::ImageD color, structure, depth, illum, noise;
  lumi::ImageD transmittance;
};

struct OracleSettings {
  bool use_thresholds = false;   // mirror the production skip/stop rules
  double contrib_threshold = 1.0 / 255.0;
  double transmittance_stop = 1e-4;
};

inline double oracle_sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Real SH bands 0..3 (same convention as any 3DGS-style renderer).
inline std::array<double, 16> oracle_sh_basis(int degree, double x, double y, double z) {
  std::array<double, 16> b{};
  b[0] = 0.28209479177387814;
  if (degree >= 1) {
    const double c1 = 0.4886025119029199;
    b[1] = -c1 * y;
    b[2] = c1 * z;
    b[3] = -c1 * x;
  }
  if (degree >= 2) {
    b[4] = 1.0925484305920792 * x * y;
    b[5] = -1.0925484305920792 * y * z;
    b[6] = 0.31539156525252005 * (2.0 * z * z - x * x - y * y);
    b[7] = -1.0925484305920792 * x * z;
    b[8] = 0.5462742152960396 * (x * x - y * y);
  }
  if (degree >= 3) {
    b[9] = -0.5900435899266435 * y * (3.0 * x * x - y * y);
    b[10] = 2.890611442640554 * x * y * z;
    b[11] = -0.4570457994644658 * y * (4.0 * z * z - x * x - y * y);
    b[12] = 0.3731763325901154 * z * (2.0 * z * z - 3.0 * x * x - 3.0 * y * y);
    b[13] = -0.4570457994644658 * x * (4.0 * z * z - x * x - y * y);
    b[14] = 1.445305721320277 * z * (x * x - y * y);
    b[15] = -0.5900435899266435 * x * (x * x - 3.0 * y * y);
  }
  return b;
}

template <typename T>
OracleOutputs brute_force_render(const lumi::GaussianCloudT<T>& cloud,
                                 const lumi::CameraT<T>& cam,
                                 const std::array<double, 3>& background,
                                 const OracleSettings& settings = {}) {
  const int w = cam.width, h = cam.height, n = cloud.size();
  OracleOutputs out;
  out.color = lumi::ImageD(w, h, 3);
  out.structure = lumi::ImageD(w, h, 1);
  out.depth = lumi::ImageD(w, h, 1);
  out.illum = lumi::ImageD(w, h, 3);
  out.noise = lumi::ImageD(w, h, 3);
  out.transmittance = lumi::ImageD(w, h, 1);

  Eigen::Matrix3d rot_wc;
  Eigen::Vector3d t_wc;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) rot_wc(r, c) = double(cam.rotation(r, c));
    t_wc[r] = double(cam.translation[r]);
  }
  const Eigen::Vector3d cam_pos = -rot_wc.transpose() * t_wc;

  struct Prim {
    int index;
    double z;
    Eigen::Vector2d mean2d;
    Eigen::Matrix2d conic;
    double alpha;
    std::array<double, 11> value;  // rgb, p, d, l(3), n(3)
    bool ok;
  };
  std::vector<Prim> prims;

  for (int i = 0; i < n; ++i) {
    Prim p;
    p.index = i;
    Eigen::Vector3d mu(cloud.positions[3 * i], cloud.positions[3 * i + 1],
                       cloud.positions[3 * i + 2]);
    const Eigen::Vector3d tc = rot_wc * mu + t_wc;
    p.z = tc[2];
    if (!(p.z >= double(cam.near_clip) && p.z <= double(cam.far_clip))) continue;

    Eigen::Vector4d q(cloud.rotations[4 * i], cloud.rotations[4 * i + 1],
                      cloud.rotations[4 * i + 2], cloud.rotations[4 * i + 3]);
    if (q.norm() > 0) q.normalize();
    const double qw = q[0], qx = q[1], qy = q[2], qz = q[3];
    Eigen::Matrix3d rot;
    rot << 1 - 2 * (qy * qy + qz * qz), 2 * (qx * qy - qw * qz), 2 * (qx * qz + qw * qy),
        2 * (qx * qy + qw * qz), 1 - 2 * (qx * qx + qz * qz), 2 * (qy * qz - qw * qx),
        2 * (qx * qz - qw * qy), 2 * (qy * qz + qw * qx), 1 - 2 * (qx * qx + qy * qy);
    Eigen::Vector3d scale(std::exp(double(cloud.log_scales[3 * i])),
                          std::exp(double(cloud.log_scales[3 * i + 1])),
                          std::exp(double(cloud.log_scales[3 * i + 2])));
    const Eigen::Matrix3d ms = rot * scale.asDiagonal();
    const Eigen::Matrix3d sigma = ms * ms.transpose();

    const double fx = double(cam.fx), fy = double(cam.fy);
    p.mean2d = Eigen::Vector2d(fx * tc[0] / p.z + double(cam.cx),
                               fy * tc[1] / p.z + double(cam.cy));
    Eigen::Matrix<double, 2, 3> jac;
    jac << fx / p.z, 0, -fx * tc[0] / (p.z * p.z), 0, fy / p.z, -fy * tc[1] / (p.z * p.z);
    const Eigen::Matrix<double, 2, 3> m = jac * rot_wc;
    Eigen::Matrix2d cov2d = m * sigma * m.transpose();
    cov2d(0, 0) += 0.3;
    cov2d(1, 1) += 0.3;
    const double det = cov2d.determinant();
    if (!(det > 1e-12) || !std::isfinite(det)) continue;
    p.conic = cov2d.inverse();

    p.alpha = oracle_sigmoid(double(cloud.opacity_logits[i]));

    Eigen::Vector3d dir = mu - cam_pos;
    if (dir.norm() > 0) dir.normalize();
    else dir = Eigen::Vector3d(0, 0, 1);
    const auto basis = oracle_sh_basis(cloud.sh_degree, dir[0], dir[1], dir[2]);
    const int coeffs = (cloud.sh_degree + 1) * (cloud.sh_degree + 1);
    for (int ch = 0; ch < 3; ++ch) {
      double acc = 0.5;
      for (int b = 0; b < coeffs; ++b)
        acc += basis[b] *
               double(cloud.sh_coeffs[(std::size_t(i) * 16 + b) * 3 + ch]);
      p.value[ch] = std::max(acc, 0.0);
    }
    p.value[3] = oracle_sigmoid(double(cloud.structure_logits[i]));
    p.value[4] = oracle_sigmoid(double(cloud.depth_logits[i]));
    for (int k = 0; k < 3; ++k) p.value[5 + k] = std::exp(double(cloud.illum_raw[3 * i + k]));
    for (int k = 0; k < 3; ++k) p.value[8 + k] = double(cloud.noise_raw[3 * i + k]);
    p.ok = true;
    prims.push_back(p);
  }

  std::stable_sort(prims.begin(), prims.end(), [](const Prim& a, const Prim& b) {
    if (a.z != b.z) return a.z < b.z;
    return a.index < b.index;
  });

  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double px = x + 0.5, py = y + 0.5;
      double trans = 1.0;
      std::array<double, 11> acc{};
      for (const Prim& p : prims) {
        const double dx = px - p.mean2d[0], dy = py - p.mean2d[1];
        const double m = p.conic(0, 0) * dx * dx + 2.0 * p.conic(0, 1) * dx * dy +
                         p.conic(1, 1) * dy * dy;
        const double g = std::exp(-0.5 * m);
        const double a = p.alpha * g;
        if (settings.use_thresholds && a < settings.contrib_threshold) continue;
        const double next = trans * (1.0 - a);
        if (settings.use_thresholds && next < settings.transmittance_stop) break;
        for (int c = 0; c < 11; ++c) acc[c] += p.value[c] * a * trans;
        trans = next;
      }
      for (int c = 0; c < 3; ++c) out.color.at(x, y, c) = acc[c] + background[c] * trans;
      out.structure.at(x, y) = acc[3];
      out.depth.at(x, y) = acc[4];
      for (int c = 0; c < 3; ++c) out.illum.at(x, y, c) = acc[5 + c];
      for (int c = 0; c < 3; ++c) out.noise.at(x, y, c) = acc[8 + c];
      out.transmittance.at(x, y) = trans;
    }
  return out;
}

// ---------------------------------------------------------------------------
// Direct per-window SSIM (no separable convolution shortcuts).
inline double windowed_ssim(const lumi::ImageD& x, const lumi::ImageD& y) {
  constexpr double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  constexpr int radius = 5;
  const double sigma = 1.5;
  double taps[2 * radius + 1];
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    taps[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += taps[i + radius];
  }
  for (double& t : taps) t /= sum;

  auto clampi = [](int v, int n) { return v < 0 ? 0 : (v >= n ? n - 1 : v); };
  double total = 0.0;
  for (int c = 0; c < x.channels; ++c)
    for (int yy = 0; yy < x.height; ++yy)
      for (int xx = 0; xx < x.width; ++xx) {
        double mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
        for (int j = -radius; j <= radius; ++j)
          for (int i = -radius; i <= radius; ++i) {
            const double wgt = taps[j + radius] * taps[i + radius];
            const double xv = x.at(clampi(xx + i, x.width), clampi(yy + j, x.height), c);
            const double yv = y.at(clampi(xx + i, x.width), clampi(yy + j, x.height), c);
            mx += wgt * xv;
            my += wgt * yv;
            sxx += wgt * xv * xv;
            syy += wgt * yv * yv;
            sxy += wgt * xv * yv;
          }
        const double vx = sxx - mx * mx, vy = syy - my * my, cxy = sxy - mx * my;
        total += ((2 * mx * my + c1) * (2 * cxy + c2)) /
                 ((mx * mx + my * my + c1) * (vx + vy + c2));
      }
  return total / double(x.data.size());
}

// Textbook two-pass Pearson correlation.
inline double two_pass_pcc(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = double(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx <= 0 || syy <= 0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace oracle
