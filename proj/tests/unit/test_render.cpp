#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "fd_checks.hpp"
#include "render_oracle.hpp"
#include "stegosplat/core/error.hpp"
#include "stegosplat/splat/geometry.hpp"
#include "stegosplat/splat/render.hpp"
#include "support.hpp"

using namespace stegosplat;
using namespace stegosplat::splat;
using testing_support::front_camera;
using testing_support::max_abs_diff;
using testing_support::oracle_render;
using testing_support::small_scene;

TEST(Render, EmptySceneIsBackground) {
  Scene s;
  s.background = {0.2, 0.4, 0.6};
  const Image img = render(s, front_camera(16));
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x) {
      EXPECT_DOUBLE_EQ(img.at(x, y, 0), 0.2);
      EXPECT_DOUBLE_EQ(img.at(x, y, 1), 0.4);
      EXPECT_DOUBLE_EQ(img.at(x, y, 2), 0.6);
    }
}

TEST(Render, SingleOnAxisGaussianCenterPixel) {
  // Even image size puts a pixel center exactly on the principal point.
  Scene s;
  Gaussian g;
  g.position = {0, 0, 3};
  g.log_scale = Vec3::Constant(std::log(0.3));
  g.opacity_logit = 0.4;
  g.rgb = {1.0, -0.5, 0.2};
  s.gaussians.push_back(g);
  Camera cam = front_camera(16);
  cam.cx = cam.cy = 8.5;
  const Image img = render(s, cam);
  const double a = sigmoid(0.4);
  for (int c = 0; c < 3; ++c) {
    const double expected = sigmoid(g.rgb[c]) * a;
    EXPECT_NEAR(img.at(8, 8, c) / expected, 1.0, 1e-3);
  }
}

TEST(Render, MatchesBruteForceOracleOnOverlappingTriple) {
  Scene s;
  s.background = {0.05, 0.1, 0.15};
  const Vec3 pos[3] = {{0, 0, 3}, {0.1, 0.05, 3.3}, {-0.1, 0.08, 2.8}};
  for (int i = 0; i < 3; ++i) {
    Gaussian g;
    g.position = pos[i];
    g.log_scale = Vec3::Constant(std::log(0.25 + 0.05 * i));
    g.opacity_logit = 1.0 + i;
    g.rgb = {i - 1.0, 0.5 * i, 1.0 - i};
    s.gaussians.push_back(g);
  }
  const Camera cam = front_camera(16);
  EXPECT_LT(max_abs_diff(render(s, cam), oracle_render(s, cam)), 1e-6);
}

TEST(Render, MatchesBruteForceOracleOnRandomScenes) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Scene s = small_scene(seed, 1 + static_cast<int>(seed % 10));
    const Camera cam = front_camera(16);
    EXPECT_LT(max_abs_diff(render(s, cam), oracle_render(s, cam)), 1e-6) << "seed " << seed;
  }
}

TEST(Render, WithoutEarlyStopMatchesOracleExactlyToRounding) {
  RenderOptions opts;
  opts.t_stop = 0.0;
  for (std::uint64_t seed = 100; seed < 110; ++seed) {
    Scene s = small_scene(seed, 10);
    for (auto& g : s.gaussians) g.opacity_logit += 3.0;  // opaque enough to trigger termination
    const Camera cam = front_camera(16);
    EXPECT_LT(max_abs_diff(render(s, cam, opts), oracle_render(s, cam, opts)), 1e-12) << "seed " << seed;
  }
}

TEST(Render, EarlyTerminationAgreesWithFullCompositing) {
  RenderOptions full;
  full.t_stop = 0.0;
  for (std::uint64_t seed = 200; seed < 220; ++seed) {
    const Scene s = small_scene(seed, 10);
    const Camera cam = front_camera(16);
    EXPECT_LT(max_abs_diff(render(s, cam), render(s, cam, full)), 1e-6) << "seed " << seed;
  }
}

TEST(Render, WeightsAndTransmittancePartitionUnity) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Scene s = small_scene(seed, 10);
    const auto stats = render_with_stats(s, front_camera(16));
    for (std::size_t i = 0; i < stats.weight_sum.size(); ++i) {
      EXPECT_NEAR(stats.weight_sum[i] + stats.transmittance[i], 1.0, 1e-6);
    }
    for (double v : stats.image.pixels()) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(Render, PermutationInvariantForDistinctDepths) {
  const Scene s = small_scene(42, 8);
  Scene shuffled = s;
  std::reverse(shuffled.gaussians.begin(), shuffled.gaussians.end());
  std::rotate(shuffled.gaussians.begin(), shuffled.gaussians.begin() + 3, shuffled.gaussians.end());
  const Camera cam = front_camera(16);
  EXPECT_EQ(render(s, cam), render(shuffled, cam));
}

TEST(Render, EqualDepthTiesFollowIndexOrder) {
  Scene s;
  Gaussian a, b;
  a.position = b.position = {0, 0, 3};
  a.log_scale = b.log_scale = Vec3::Constant(std::log(0.3));
  a.opacity_logit = b.opacity_logit = 2.0;
  a.rgb = {3, -3, -3};
  b.rgb = {-3, -3, 3};
  s.gaussians = {a, b};
  const Camera cam = front_camera(16);
  const Image first = render(s, cam);
  std::swap(s.gaussians[0], s.gaussians[1]);
  const Image second = render(s, cam);
  EXPECT_GT(first.at(8, 8, 0), first.at(8, 8, 2));
  EXPECT_LT(second.at(8, 8, 0), second.at(8, 8, 2));
}

TEST(RenderVjp, ZeroCotangentGivesZeroGradients) {
  const Scene s = small_scene(3, 6);
  const Camera cam = front_camera(16);
  for (const GaussianGrad& g : render_vjp(s, cam, Image(16, 16, 0.0))) {
    EXPECT_TRUE(g.position.isZero(0.0));
    EXPECT_TRUE(g.log_scale.isZero(0.0));
    EXPECT_TRUE(g.rotation.isZero(0.0));
    EXPECT_EQ(g.opacity_logit, 0.0);
    EXPECT_TRUE(g.rgb.isZero(0.0));
  }
}

TEST(RenderVjp, BehindCameraGaussianHasZeroGradient) {
  Scene s = small_scene(4, 5);
  s.gaussians[2].position.z() = -1.0;
  const Camera cam = front_camera(16);
  Image cot(16, 16, 1.0);
  const auto grads = render_vjp(s, cam, cot);
  EXPECT_TRUE(grads[2].position.isZero(0.0));
  EXPECT_TRUE(grads[2].rgb.isZero(0.0));
  EXPECT_EQ(grads[2].opacity_logit, 0.0);
  EXPECT_FALSE(grads[0].rgb.isZero(0.0));
}

TEST(RenderVjp, RejectsMismatchedCotangent) {
  const Scene s = small_scene(4, 2);
  EXPECT_THROW(render_vjp(s, front_camera(16), Image(15, 16)), ShapeError);
}

TEST(RenderVjp, MatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto report = testing_support::check_render_vjp_fd(seed, 3 + static_cast<int>(seed));
    EXPECT_TRUE(report.ok()) << "seed " << seed << ": " << report.failed << "/" << report.checked << " off, first "
                             << report.first_failure;
    EXPECT_LE(report.straddling * 10, report.checked) << "seed " << seed;
  }
}

TEST(RenderVjp, MatchesFiniteDifferencesWithoutBranches) {
  // No skip threshold and no early stop: every probe lies in one smooth piece.
  RenderOptions smooth;
  smooth.alpha_skip = 0.0;
  smooth.t_stop = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto report = testing_support::check_render_vjp_fd(seed, 3 + static_cast<int>(seed), smooth);
    EXPECT_TRUE(report.ok()) << "seed " << seed << ": " << report.first_failure;
    EXPECT_EQ(report.straddling, 0);
  }
}

TEST(RenderVjp, BranchSignatureDetectsSkipCrossing) {
  Scene s = small_scene(4, 1);
  const Camera cam = front_camera(16);
  const auto base = testing_support::oracle_branches(s, cam);
  EXPECT_EQ(testing_support::oracle_branches(s, cam), base);
  s.gaussians[0].opacity_logit -= 3.0;  // shrinks the footprint above 1/255
  EXPECT_NE(testing_support::oracle_branches(s, cam), base);
}

TEST(RenderVjp, MatchesFiniteDifferencesUnderRotatedPose) {
  Scene s = small_scene(77, 6);
  Camera cam = front_camera(16);
  const Eigen::AngleAxisd aa(0.3, Vec3(0.2, 1.0, -0.1).normalized());
  cam.rotation = aa.toRotationMatrix();
  for (auto& g : s.gaussians) g.position = cam.rotation.transpose() * g.position;
  cam.translation = Vec3(0.05, -0.02, 0.1);
  const auto report = testing_support::check_render_vjp_fd(s, cam, Image(16, 16, 0.5));
  EXPECT_TRUE(report.ok()) << report.first_failure;
}
