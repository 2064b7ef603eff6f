#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "lumi/activations.hpp"
#include "lumi/errors.hpp"
#include "lumi/project.hpp"
#include "lumi/render.hpp"
#include "test_util.hpp"

using namespace lumi;

namespace {

RenderSettingsT<double> exact_settings() {
  RenderSettingsT<double> s;
  s.exact = true;
  return s;
}

struct WeightImages {
  RenderAdjointsT<double> adj;

  static WeightImages random(int w, int h, Rng& rng) {
    WeightImages out;
    out.adj.color = testutil::random_image<double>(w, h, 3, rng, -1.0, 1.0);
    out.adj.structure = testutil::random_image<double>(w, h, 1, rng, -1.0, 1.0);
    out.adj.depth = testutil::random_image<double>(w, h, 1, rng, -1.0, 1.0);
    out.adj.illum = testutil::random_image<double>(w, h, 3, rng, -1.0, 1.0);
    out.adj.noise = testutil::random_image<double>(w, h, 3, rng, -1.0, 1.0);
    return out;
  }
};

double weighted_sum(const RenderOutputT<double>& out, const WeightImages& w) {
  double total = 0.0;
  auto dot = [&total](const ImageT<double>& a, const ImageT<double>& b) {
    for (std::size_t i = 0; i < a.data.size(); ++i) total += a.data[i] * b.data[i];
  };
  dot(out.color, w.adj.color);
  dot(out.structure, w.adj.structure);
  dot(out.depth, w.adj.depth);
  dot(out.illum, w.adj.illum);
  dot(out.noise, w.adj.noise);
  return total;
}

struct ParamClass {
  const char* name;
  std::vector<double> GaussianCloudT<double>::* members;
  std::vector<double> GradientBundleT<double>::* grads;
};

const ParamClass kParamClasses[] = {
    {"positions", &GaussianCloudT<double>::positions, &GradientBundleT<double>::positions},
    {"rotations", &GaussianCloudT<double>::rotations, &GradientBundleT<double>::rotations},
    {"log_scales", &GaussianCloudT<double>::log_scales, &GradientBundleT<double>::log_scales},
    {"opacity_logits", &GaussianCloudT<double>::opacity_logits,
     &GradientBundleT<double>::opacity_logits},
    {"sh_coeffs", &GaussianCloudT<double>::sh_coeffs, &GradientBundleT<double>::sh_coeffs},
    {"structure_logits", &GaussianCloudT<double>::structure_logits,
     &GradientBundleT<double>::structure_logits},
    {"illum_raw", &GaussianCloudT<double>::illum_raw, &GradientBundleT<double>::illum_raw},
    {"depth_logits", &GaussianCloudT<double>::depth_logits,
     &GradientBundleT<double>::depth_logits},
    {"noise_raw", &GaussianCloudT<double>::noise_raw, &GradientBundleT<double>::noise_raw},
};

// Finite-difference check of every parameter of every class on one scene.
// Returns the number of comparisons that failed the tolerance.
int finite_difference_scene(std::uint64_t seed, int n_prims, int frame, double h,
                            double rel_tol, double abs_floor) {
  Rng rng(seed);
  auto cloud = testutil::random_cloud<double>(n_prims, int(rng.below(4)), rng);
  auto cam = testutil::test_camera<double>(frame, frame, &rng);
  const std::array<double, 3> bg = {rng.uniform(), rng.uniform(), rng.uniform()};
  const WeightImages weights = WeightImages::random(frame, frame, rng);
  const auto settings = exact_settings();

  const RenderOutputT<double> base = render(cloud, cam, bg, settings);
  const GradientBundleT<double> grads =
      render_backward(cloud, cam, bg, base, weights.adj, settings);
  REQUIRE(grads.all_finite());

  int failures = 0;
  const int active_coeffs = (cloud.sh_degree + 1) * (cloud.sh_degree + 1);
  for (const ParamClass& pc : kParamClasses) {
    std::vector<double>& params = cloud.*(pc.members);
    const std::vector<double>& analytic = grads.*(pc.grads);
    for (std::size_t k = 0; k < params.size(); ++k) {
      // Inactive SH bands receive no gradient and stay untouched; skip them.
      if (pc.members == &GaussianCloudT<double>::sh_coeffs &&
          int((k / 3) % GaussianCloudT<double>::kShCoeffCount) >= active_coeffs)
        continue;
      const double saved = params[k];
      params[k] = saved + h;
      const double up = weighted_sum(render(cloud, cam, bg, settings), weights);
      params[k] = saved - h;
      const double down = weighted_sum(render(cloud, cam, bg, settings), weights);
      params[k] = saved;
      const double fd = (up - down) / (2.0 * h);
      if (!testutil::close(analytic[k], fd, rel_tol, abs_floor)) {
        ++failures;
        MESSAGE("class " << pc.name << " index " << k << ": analytic " << analytic[k]
                         << " vs fd " << fd);
      }
    }
  }
  return failures;
}

}  // namespace

TEST_CASE("zero adjoints produce zero gradients") {
  Rng rng(3);
  auto cloud = testutil::random_cloud<double>(6, 1, rng);
  auto cam = testutil::test_camera<double>(8, 8, &rng);
  const std::array<double, 3> bg = {0.3, 0.3, 0.3};
  const auto settings = exact_settings();
  const auto out = render(cloud, cam, bg, settings);
  RenderAdjointsT<double> adj;
  adj.color = ImageT<double>(8, 8, 3);  // zeros; the rest left empty
  const auto grads = render_backward(cloud, cam, bg, out, adj, settings);
  for (double g : grads.positions) CHECK(g == 0.0);
  for (double g : grads.sh_coeffs) CHECK(g == 0.0);
  for (double g : grads.opacity_logits) CHECK(g == 0.0);
}

TEST_CASE("aux mismatch is rejected") {
  Rng rng(4);
  auto cloud = testutil::random_cloud<double>(4, 0, rng);
  auto cam = testutil::test_camera<double>(8, 8, &rng);
  const std::array<double, 3> bg = {0, 0, 0};
  const auto settings = exact_settings();
  const auto out = render(cloud, cam, bg, settings);
  RenderAdjointsT<double> adj;
  adj.structure = ImageT<double>(8, 8, 1, 1.0);
  CameraT<double> other = cam;
  other.fx += 1.0;
  CHECK_THROWS_AS(render_backward(cloud, other, bg, out, adj, settings), DataError);
  GaussianCloudT<double> bigger = cloud;
  bigger.resize(5);
  CHECK_THROWS_AS(render_backward(bigger, cam, bg, out, adj, settings), DataError);
}

TEST_CASE("single-primitive structure gradient matches the closed form") {
  GaussianCloudT<double> cloud;
  cloud.resize(1);
  cloud.sh_degree = 0;
  cloud.rotations[0] = 1.0;
  cloud.positions[2] = 2.0;
  for (int k = 0; k < 3; ++k) cloud.log_scales[k] = std::log(0.08);
  cloud.opacity_logits[0] = logit(0.7);
  cloud.structure_logits[0] = logit(0.4);

  auto cam = testutil::test_camera<double>(12, 12);
  const std::array<double, 3> bg = {0, 0, 0};
  const auto settings = exact_settings();
  const auto out = render(cloud, cam, bg, settings);

  RenderAdjointsT<double> adj;
  adj.structure = ImageT<double>(12, 12, 1, 1.0);
  const auto grads = render_backward(cloud, cam, bg, out, adj, settings);

  // d out(px) / d p_logit = alpha * G(px) * sigmoid'(p_logit); sum over pixels.
  const auto proj = project(cloud, cam);
  const Eigen::Matrix2d conic = proj[0].cov2d.inverse();
  const double alpha = sigmoid(cloud.opacity_logits[0]);
  double expected = 0.0;
  for (int y = 0; y < 12; ++y)
    for (int x = 0; x < 12; ++x) {
      const Eigen::Vector2d d(x + 0.5 - proj[0].mean2d[0], y + 0.5 - proj[0].mean2d[1]);
      expected += alpha * std::exp(-0.5 * d.dot(conic * d));
    }
  expected *= sigmoid_grad(cloud.structure_logits[0]);
  CHECK(grads.structure_logits[0] == doctest::Approx(expected).epsilon(1e-6));
}

TEST_CASE("five-primitive scene passes finite-difference checks at h=1e-4") {
  CHECK(finite_difference_scene(/*seed=*/11, /*n_prims=*/5, /*frame=*/8, /*h=*/1e-4,
                                /*rel_tol=*/1e-3, /*abs_floor=*/1e-6) == 0);
}

TEST_CASE("randomized scenes pass finite-difference checks") {
  int failures = 0;
  for (std::uint64_t seed = 100; seed < 112; ++seed)
    failures += finite_difference_scene(seed, 3 + int(seed % 4), 6, 1e-5, 1e-3, 1e-6);
  CHECK(failures == 0);
}

TEST_CASE("backward is deterministic across thread counts") {
  Rng rng(77);
  auto cloud = testutil::random_cloud<double>(20, 2, rng);
  auto cam = testutil::test_camera<double>(24, 24, &rng);
  const std::array<double, 3> bg = {0.1, 0.1, 0.1};
  auto settings = exact_settings();
  const auto out = render(cloud, cam, bg, settings);
  const WeightImages w = WeightImages::random(24, 24, rng);
  auto s1 = settings;
  s1.threads = 1;
  auto s4 = settings;
  s4.threads = 4;
  const auto g1 = render_backward(cloud, cam, bg, out, w.adj, s1);
  const auto g4 = render_backward(cloud, cam, bg, out, w.adj, s4);
  CHECK(g1.positions == g4.positions);
  CHECK(g1.rotations == g4.rotations);
  CHECK(g1.sh_coeffs == g4.sh_coeffs);
}
