#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "lumi/activations.hpp"
#include "lumi/convolve.hpp"
#include "lumi/errors.hpp"
#include "lumi/prior.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace lumi;

TEST_CASE("spectral transform applies the fixed matrix") {
  Image img(2, 1, 3);
  // pixel 0 = pure red, pixel 1 = white
  img.at(0, 0, 0) = 1.0f;
  for (int c = 0; c < 3; ++c) img.at(1, 0, c) = 1.0f;
  const SpectralTriple s = rgb_to_spectral(img);
  CHECK(s.e.at(0, 0) == doctest::Approx(0.06));
  CHECK(s.e_lambda.at(0, 0) == doctest::Approx(0.3));
  CHECK(s.e_lambdalambda.at(0, 0) == doctest::Approx(0.34));
  // row sums of the matrix
  CHECK(s.e.at(1, 0) == doctest::Approx(0.96));
  CHECK(s.e_lambda.at(1, 0) == doctest::Approx(-0.01));
  CHECK(s.e_lambdalambda.at(1, 0) == doctest::Approx(-0.09));

  Image black(2, 2, 3, 0.0f);
  const SpectralTriple z = rgb_to_spectral(black);
  for (float v : z.e.data) CHECK(v == 0.0f);
  for (float v : z.e_lambda.data) CHECK(v == 0.0f);

  CHECK_THROWS_AS(rgb_to_spectral(Image(2, 2, 1, 0.5f)), DataError);
}

TEST_CASE("constant image yields an exactly zero prior") {
  Image flat(12, 9, 3);
  for (int c = 0; c < 3; ++c)
    std::fill(flat.plane(c).begin(), flat.plane(c).end(), 0.1f + 0.2f * float(c));
  const Image prior = extract_prior(flat);
  for (float v : prior.data) CHECK(v == 0.0f);
}

TEST_CASE("all-zero image returns an all-zero prior") {
  const Image prior = extract_prior(Image(8, 8, 3, 0.0f));
  for (float v : prior.data) CHECK(v == 0.0f);
}

TEST_CASE("prior is invariant to global illumination scaling") {
  Rng rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    const Image img = testutil::textured_image<float>(24, 24, 3, rng, 0.15f, 0.95f);
    const Image base = extract_prior(img);
    for (float scale : {0.2f, 0.5f, 0.8f}) {
      Image scaled = img;
      for (float& v : scaled.data) v *= scale;
      const Image p = extract_prior(scaled);
      double mean_diff = 0.0;
      for (std::size_t i = 0; i < p.data.size(); ++i)
        mean_diff += std::abs(double(p.data[i]) - double(base.data[i]));
      mean_diff /= double(p.data.size());
      CHECK(mean_diff <= 1e-2);
    }
  }
}

TEST_CASE("prior output is bounded and finite") {
  Rng rng(12);
  const Image img = testutil::textured_image<float>(20, 16, 3, rng, 0.0f, 1.0f);
  const Image p = extract_prior(img);
  CHECK(p.all_finite());
  for (float v : p.data) {
    CHECK(v >= 0.0f);
    CHECK(v <= 1.0f);
  }
}

TEST_CASE("beta=gamma=0 reduces to the intensity-only term") {
  Rng rng(13);
  const Image img = testutil::textured_image<float>(16, 16, 3, rng, 0.1f, 0.9f);
  PriorConfig cfg;
  cfg.beta = cfg.gamma = 0.0f;
  const Image got = extract_prior(img, cfg);

  // Hand-rolled single-term pipeline: E plane ratios only.
  const SpectralTriple s = rgb_to_spectral(img);
  const auto smooth = gaussian_kernel(cfg.sigma, 0);
  const auto deriv = gaussian_kernel(cfg.sigma, 1);
  const Image dx = convolve_separable(s.e, deriv, smooth);
  const Image dy = convolve_separable(s.e, smooth, deriv);
  Image raw(img.width, img.height, 1);
  for (std::size_t i = 0; i < raw.data.size(); ++i) {
    const float denom = s.e.data[i] + cfg.epsilon;
    const float rx = dx.data[i] / denom, ry = dy.data[i] / denom;
    raw.data[i] = std::sqrt(rx * rx + ry * ry);
  }
  std::vector<float> sorted(raw.data);
  std::sort(sorted.begin(), sorted.end());
  const std::size_t rank =
      std::size_t(std::llround(double(cfg.normalize_percentile) / 100.0 * (sorted.size() - 1)));
  const float scale = std::max(sorted[rank], cfg.epsilon);
  for (std::size_t i = 0; i < raw.data.size(); ++i)
    raw.data[i] = std::clamp(raw.data[i] / scale, 0.0f, 1.0f);

  for (std::size_t i = 0; i < raw.data.size(); ++i)
    CHECK(std::abs(raw.data[i] - got.data[i]) <= 1e-6f);
}

TEST_CASE("vertical step edge responds at the edge and nowhere far away") {
  Image img(24, 8, 3, 0.0f);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 24; ++x) img.at(x, y, 0) = x < 12 ? 0.2f : 0.8f;  // red step
  for (int c = 1; c < 3; ++c)
    std::fill(img.plane(c).begin(), img.plane(c).end(), 0.5f);
  const Image p = extract_prior(img);
  double edge = 0.0, far = 0.0;
  for (int y = 0; y < 8; ++y) {
    edge = std::max(edge, double(p.at(11, y)));
    edge = std::max(edge, double(p.at(12, y)));
    far = std::max(far, double(p.at(2, y)));
    far = std::max(far, double(p.at(21, y)));
  }
  CHECK(edge > 0.5);
  CHECK(far < 1e-4);
}

TEST_CASE("invalid config is rejected") {
  PriorConfig cfg;
  cfg.sigma = 0.0f;
  CHECK_THROWS_AS(extract_prior(Image(4, 4, 3, 0.5f), cfg), DataError);
}

TEST_CASE("synthesized depth target normalizes composited z") {
  // Two primitives in disjoint halves at z=1 and z=3: bimodal {0,1} map.
  GaussianCloud cloud;
  cloud.resize(2);
  cloud.sh_degree = 0;
  for (int i = 0; i < 2; ++i) {
    cloud.rotations[4 * i] = 1.0f;
    cloud.opacity_logits[i] = logit(0.995f);
    for (int k = 0; k < 3; ++k) cloud.log_scales[3 * i + k] = std::log(3.0f);
  }
  cloud.positions[0] = -1.2f;
  cloud.positions[2] = 1.0f;
  cloud.positions[3] = 3.6f;
  cloud.positions[5] = 3.0f;

  Camera cam = testutil::test_camera<float>(16, 16);
  cam.fx = cam.fy = 8.0f;
  const Image depth = synthesize_depth_target(cloud, cam);
  CHECK(depth.all_finite());
  float lo = 1e9f, hi = -1e9f;
  for (float v : depth.data) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  CHECK(lo == 0.0f);
  CHECK(hi == 1.0f);
  // Left half sees the near primitive, right half the far one.
  CHECK(depth.at(1, 8) < 0.25f);
  CHECK(depth.at(14, 8) > 0.75f);

  // Single-primitive scene: constant map normalizes to zero (documented).
  GaussianCloud single;
  single.resize(1);
  single.sh_degree = 0;
  single.rotations[0] = 1.0f;
  single.positions[2] = 2.0f;
  for (int k = 0; k < 3; ++k) single.log_scales[k] = std::log(50.0f);
  single.opacity_logits[0] = logit(0.9f);
  const Image flat = synthesize_depth_target(single, testutil::test_camera<float>(8, 8));
  for (float v : flat.data) CHECK(v == 0.0f);

  CHECK_THROWS_AS(synthesize_depth_target(GaussianCloud{}, cam), DataError);
}
