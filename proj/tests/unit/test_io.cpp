#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <queue>

#include "stegosplat/core/error.hpp"
#include "stegosplat/core/rng.hpp"
#include "stegosplat/io/generate.hpp"
#include "stegosplat/io/image_io.hpp"
#include "stegosplat/io/scene_io.hpp"
#include "stegosplat/splat/render.hpp"

using namespace stegosplat;
using namespace stegosplat::io;
using splat::Vec3;

namespace {

std::vector<std::uint8_t> bytes_of(const std::string& s) { return {s.begin(), s.end()}; }

Image noise_image(int w, int h, std::uint64_t seed) {
  Rng rng(seed);
  Image img(w, h);
  for (double& v : img.pixels()) v = rng.uniform();
  return img;
}

int count_components(const Image& img) {
  const int w = img.width(), h = img.height();
  auto lit = [&](int x, int y) { return img.at(x, y, 0) > 0 || img.at(x, y, 1) > 0 || img.at(x, y, 2) > 0; };
  std::vector<char> seen(static_cast<std::size_t>(w) * h, 0);
  int components = 0;
  for (int y0 = 0; y0 < h; ++y0)
    for (int x0 = 0; x0 < w; ++x0) {
      if (!lit(x0, y0) || seen[y0 * w + x0]) continue;
      ++components;
      std::queue<std::pair<int, int>> q;
      q.push({x0, y0});
      seen[y0 * w + x0] = 1;
      while (!q.empty()) {
        const auto [x, y] = q.front();
        q.pop();
        const int nb[4][2] = {{x + 1, y}, {x - 1, y}, {x, y + 1}, {x, y - 1}};
        for (const auto& p : nb) {
          if (p[0] < 0 || p[0] >= w || p[1] < 0 || p[1] >= h) continue;
          if (seen[p[1] * w + p[0]] || !lit(p[0], p[1])) continue;
          seen[p[1] * w + p[0]] = 1;
          q.push({p[0], p[1]});
        }
      }
    }
  return components;
}

}  // namespace

TEST(Ppm, WhitePixelBytesAreExact) {
  const auto bytes = encode_ppm(Image(1, 1, 1.0));
  auto expected = bytes_of("P6\n1 1\n255\n");
  expected.insert(expected.end(), {0xFF, 0xFF, 0xFF});
  EXPECT_EQ(bytes, expected);
}

TEST(Ppm, RoundTripWithinHalfStep) {
  const Image img = noise_image(13, 7, 3);
  const Image back = decode_ppm(encode_ppm(img));
  ASSERT_TRUE(back.same_shape(img));
  for (std::size_t i = 0; i < img.size(); ++i) EXPECT_LE(std::abs(back.pixels()[i] - img.pixels()[i]), 1.0 / 510.0 + 1e-12);
  const auto path = std::filesystem::temp_directory_path() / "stegosplat_test.ppm";
  write_ppm(img, path);
  EXPECT_EQ(read_ppm(path), back);
  std::filesystem::remove(path);
}

TEST(Ppm, AcceptsCommentsInHeader) {
  auto bytes = bytes_of("P6\n# made by hand\n2 1\n255\n");
  bytes.insert(bytes.end(), {0, 0, 0, 255, 255, 255});
  const Image img = decode_ppm(bytes);
  EXPECT_EQ(img.width(), 2);
  EXPECT_EQ(img.at(1, 0, 2), 1.0);
}

TEST(Ppm, RejectsUnsupportedAndMalformed) {
  auto wide = bytes_of("P6\n1 1\n65535\n");
  wide.insert(wide.end(), 6, 0);
  EXPECT_THROW(decode_ppm(wide), FormatError);
  EXPECT_THROW(decode_ppm(bytes_of("P3\n1 1\n255\n0 0 0\n")), FormatError);
  auto truncated = bytes_of("P6\n2 2\n255\n");
  truncated.insert(truncated.end(), 5, 0);
  EXPECT_THROW(decode_ppm(truncated), FormatError);
  EXPECT_THROW(decode_ppm(bytes_of("P6\n")), FormatError);
  EXPECT_THROW(read_ppm("/nonexistent/file.ppm"), std::exception);
}

TEST(SceneFile, RoundTripIsLossless) {
  const splat::Scene scene = generate_scene(5, 30, 6.0, Vec3(0.1, 1.0 / 3.0, 0.7));
  const splat::Scene back = scene_from_json(scene_to_json(scene));
  ASSERT_EQ(back.gaussians.size(), scene.gaussians.size());
  EXPECT_LT((back.background - scene.background).norm(), 1e-9);
  for (std::size_t i = 0; i < scene.gaussians.size(); ++i) {
    const auto &a = scene.gaussians[i], &b = back.gaussians[i];
    EXPECT_LT((a.position - b.position).norm(), 1e-9);
    EXPECT_LT((a.log_scale - b.log_scale).norm(), 1e-9);
    EXPECT_LT((a.rotation - b.rotation).norm(), 1e-9);
    EXPECT_NEAR(a.opacity_logit, b.opacity_logit, 1e-9);
    EXPECT_LT((a.rgb - b.rgb).norm(), 1e-9);
  }
  // 17 significant digits make the round trip exact in practice.
  EXPECT_EQ(back, scene);
}

TEST(SceneFile, RejectsMalformedDocuments) {
  EXPECT_THROW(scene_from_json("not json"), FormatError);
  EXPECT_THROW(scene_from_json(R"({"version": 1, "background": [0,0,0]})"), FormatError);
  EXPECT_THROW(scene_from_json(R"({"version": 9, "background": [0,0,0], "gaussians": []})"), FormatError);
  EXPECT_THROW(scene_from_json(
                   R"({"version": 1, "background": [0,0,0], "gaussians": [{"pos": [1,2], "log_scale": [0,0,0],
                       "quat": [1,0,0,0], "opacity_logit": 0, "rgb": [0,0,0]}]})"),
               FormatError);
  EXPECT_TRUE(scene_from_json(R"({"version": 1, "background": [0,0,0], "gaussians": []})").gaussians.empty());
}

TEST(PoseFile, RoundTripIsLossless) {
  PoseSet poses = generate_pose_ring(7, 3.3, Vec3(0.1, -0.2, 0.3), 64);
  poses.check_index = 4;
  const PoseSet back = poses_from_json(poses_to_json(poses));
  EXPECT_EQ(back.check_index, 4u);
  ASSERT_EQ(back.cameras.size(), 7u);
  for (std::size_t i = 0; i < 7; ++i) {
    EXPECT_LT((back.cameras[i].rotation - poses.cameras[i].rotation).norm(), 1e-9);
    EXPECT_LT((back.cameras[i].translation - poses.cameras[i].translation).norm(), 1e-9);
    EXPECT_NEAR(back.cameras[i].fx, poses.cameras[i].fx, 1e-9);
  }
}

TEST(PoseFile, ValidationRejectsBadSets) {
  PoseSet poses = generate_pose_ring(4, 3.0, Vec3::Zero(), 32);
  poses.check_index = 4;
  EXPECT_THROW(poses.validate(), std::invalid_argument);
  EXPECT_THROW(poses_from_json(poses_to_json(poses)), FormatError);
  poses.check_index = 0;
  poses.cameras[2].fx *= 1.5;
  EXPECT_THROW(poses.validate(), std::invalid_argument);
  EXPECT_THROW(PoseSet{}.validate(), std::invalid_argument);
}

TEST(Generate, SceneIsDeterministicAndInRange) {
  EXPECT_EQ(generate_scene(3, 50, 4.0), generate_scene(3, 50, 4.0));
  EXPECT_FALSE(generate_scene(3, 50, 4.0) == generate_scene(4, 50, 4.0));
  for (const auto& g : generate_scene(3, 200, 4.0).gaussians) {
    EXPECT_LE(g.position.cwiseAbs().maxCoeff(), 2.0);
    EXPECT_GE(g.log_scale.minCoeff(), std::log(0.02 * 4.0) - 1e-12);
    EXPECT_LE(g.log_scale.maxCoeff(), std::log(0.08 * 4.0) + 1e-12);
    EXPECT_NEAR(g.rotation.norm(), 1.0, 1e-12);
    EXPECT_GE(g.opacity_logit, 0.0);
    EXPECT_LE(g.opacity_logit, 2.0);
    EXPECT_LE(g.rgb.cwiseAbs().maxCoeff(), 2.0);
  }
}

TEST(Generate, DoublingExtentDoublesDistances) {
  const auto a = generate_scene(8, 12, 3.0), b = generate_scene(8, 12, 6.0);
  for (std::size_t i = 0; i < 12; ++i)
    for (std::size_t j = i + 1; j < 12; ++j)
      EXPECT_DOUBLE_EQ((b.gaussians[i].position - b.gaussians[j].position).norm(),
                       2.0 * (a.gaussians[i].position - a.gaussians[j].position).norm());
}

TEST(Generate, SingleGaussianRendersOneBlob) {
  for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
    const splat::Scene scene = generate_scene(seed, 1, 6.0);
    const Vec3 p = scene.gaussians[0].position;
    const auto cam = look_at_camera(p + Vec3(0.5, 0.3, 4.0), p, 64);
    const Image img = splat::render(scene, cam);
    EXPECT_EQ(count_components(img), 1) << "seed " << seed;
  }
}

TEST(Generate, RingSpacingAndRadius) {
  const Vec3 target(0.5, -1.0, 2.0);
  const PoseSet ring = generate_pose_ring(4, 2.5, target, 32);
  ASSERT_EQ(ring.cameras.size(), 4u);
  EXPECT_EQ(ring.check_index, 0u);
  const double deg = std::numbers::pi / 180.0;
  for (int i = 0; i < 4; ++i) {
    const Vec3 c = ring.cameras[i].center();
    EXPECT_NEAR((c - target).norm(), 2.5, 1e-9);
    EXPECT_NEAR(c.y(), target.y(), 1e-12);
    const Vec3 d = c - target;
    double az = std::atan2(d.x(), d.z()) / deg;
    if (az < -1e-9) az += 360.0;
    EXPECT_NEAR(az, 90.0 * i, 1e-9);
    // optical axis points at the target
    EXPECT_NEAR((ring.cameras[i].rotation * target + ring.cameras[i].translation).head<2>().norm(), 0.0, 1e-9);
  }
  const double fov = 2.0 * std::atan(0.5 * 32 / ring.cameras[0].fx) / deg;
  EXPECT_NEAR(fov, 60.0, 1e-9);
  EXPECT_THROW(generate_pose_ring(1, 2.0, target, 32), std::invalid_argument);
}

TEST(Generate, OppositeViewsOfMirrorSceneAreMirrored) {
  // Symmetric under z -> -z: each Gaussian paired with its reflection.
  splat::Scene half = generate_scene(21, 10, 2.0, Vec3(0.1, 0.1, 0.1));
  splat::Scene scene;
  scene.background = half.background;
  for (auto g : half.gaussians) {
    g.position.z() = 0.2 + std::abs(g.position.z());
    scene.gaussians.push_back(g);
    g.position.z() = -g.position.z();
    g.rotation = splat::Vec4(g.rotation[0], -g.rotation[1], -g.rotation[2], g.rotation[3]);
    scene.gaussians.push_back(g);
  }
  const PoseSet ring = generate_pose_ring(2, 5.0, Vec3::Zero(), 48);
  const Image a = splat::render(scene, ring.cameras[0]);
  const Image b = splat::render(scene, ring.cameras[1]);
  double worst = 0.0, energy = 0.0;
  for (int y = 0; y < 48; ++y)
    for (int x = 0; x < 48; ++x)
      for (int c = 0; c < 3; ++c) {
        worst = std::max(worst, std::abs(a.at(x, y, c) - b.at(47 - x, y, c)));
        energy += std::abs(a.at(x, y, c) - 0.1);
      }
  EXPECT_LT(worst, 1e-5);
  EXPECT_GT(energy, 1.0);  // the scene is actually visible
}

TEST(Generate, HiddenImageIsDeterministicAndBounded) {
  EXPECT_EQ(generate_hidden_image(3), generate_hidden_image(3));
  const Image img = generate_hidden_image(3);
  EXPECT_EQ(img.width(), 64);
  for (double v : img.pixels()) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(Generate, PerturbationIsSeeded) {
  const auto base = generate_scene(1, 20, 6.0);
  const Perturbation amount{0.1, 0.1, 0.1, 0.1};
  EXPECT_EQ(perturb_scene(base, 2, amount), perturb_scene(base, 2, amount));
  EXPECT_EQ(perturb_scene(base, 2, Perturbation{}), base);
}
