#include <gtest/gtest.h>

#include <cmath>

#include "stegosplat/core/error.hpp"
#include "stegosplat/core/rng.hpp"
#include "stegosplat/metrics/metrics.hpp"

using namespace stegosplat;
using namespace stegosplat::metrics;

namespace {

Image random_image(std::uint64_t seed, int w, int h) {
  Rng rng(seed);
  Image img(w, h);
  for (double& v : img.pixels()) v = rng.uniform();
  return img;
}

// Literal SSIM: every window evaluated directly from its 121 weighted samples.
double literal_ssim(const Image& a, const Image& b) {
  double g[11];
  double tot = 0;
  for (int i = 0; i < 11; ++i) {
    g[i] = std::exp(-(i - 5.0) * (i - 5.0) / (2 * 1.5 * 1.5));
    tot += g[i];
  }
  for (double& v : g) v /= tot;
  const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  double sum = 0.0;
  int count = 0;
  for (int c = 0; c < 3; ++c)
    for (int y0 = 0; y0 + 11 <= a.height(); ++y0)
      for (int x0 = 0; x0 + 11 <= a.width(); ++x0) {
        double mx = 0, my = 0;
        for (int j = 0; j < 11; ++j)
          for (int i = 0; i < 11; ++i) {
            mx += g[i] * g[j] * a.at(x0 + i, y0 + j, c);
            my += g[i] * g[j] * b.at(x0 + i, y0 + j, c);
          }
        double vx = 0, vy = 0, cxy = 0;
        for (int j = 0; j < 11; ++j)
          for (int i = 0; i < 11; ++i) {
            const double dx = a.at(x0 + i, y0 + j, c) - mx, dy = b.at(x0 + i, y0 + j, c) - my;
            vx += g[i] * g[j] * dx * dx;
            vy += g[i] * g[j] * dy * dy;
            cxy += g[i] * g[j] * dx * dy;
          }
        sum += ((2 * mx * my + c1) * (2 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
        ++count;
      }
  return sum / count;
}

}  // namespace

TEST(Psnr, IdenticalImagesHitCap) {
  const Image a = random_image(1, 8, 8);
  EXPECT_EQ(psnr(a, a), 99.0);
}

TEST(Psnr, HalfVersusZero) {
  EXPECT_NEAR(psnr(Image(8, 8, 0.5), Image(8, 8, 0.0)), 6.0206, 1e-4);
}

TEST(Psnr, MatchesTwoPassMseOracle) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Image a = random_image(seed, 13, 9), b = random_image(seed + 50, 13, 9);
    long double mse = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const long double d = a.pixels()[i] - b.pixels()[i];
      mse += d * d;
    }
    mse /= a.size();
    const double expected = static_cast<double>(10.0L * std::log10(1.0L / mse));
    EXPECT_NEAR(psnr(a, b), expected, 1e-9);
  }
}

TEST(Psnr, SymmetricAndMonotoneInNoise) {
  const Image a = random_image(3, 16, 16);
  Rng rng(4);
  double prev = 1e9;
  for (double amp : {0.01, 0.05, 0.2}) {
    Image b = a;
    for (double& v : b.pixels()) v += amp * rng.uniform(-1, 1);
    EXPECT_EQ(psnr(a, b), psnr(b, a));
    const double p = psnr(a, b);
    EXPECT_LT(p, prev);
    prev = p;
  }
}

TEST(Psnr, ShapeMismatchThrows) { EXPECT_THROW(psnr(Image(8, 8), Image(8, 9)), ShapeError); }

TEST(Ssim, SelfSimilarityIsExactlyOne) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Image a = random_image(seed, 16, 20);
    EXPECT_EQ(ssim(a, a), 1.0);
  }
}

TEST(Ssim, GradientVanishesExactlyAtIdenticalInputs) {
  // A maximum, so any nonzero entry would nudge an optimizer off a perfect fit.
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Image a = random_image(seed, 24, 19);
    const SsimGradient g = ssim_with_gradient(a, a);
    for (double v : g.grad.pixels()) ASSERT_EQ(v, 0.0) << "seed " << seed;
  }
}

TEST(Ssim, ConstantBlackVersusWhite) {
  const double c1 = 1e-4;
  EXPECT_NEAR(ssim(Image(16, 16, 0.0), Image(16, 16, 1.0)), c1 / (1 + c1), 1e-12);
}

TEST(Ssim, MatchesLiteralWindowedOracle) {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const Image a = random_image(seed, 17, 14), b = random_image(seed + 9, 17, 14);
    EXPECT_NEAR(ssim(a, b), literal_ssim(a, b), 1e-6);
  }
}

TEST(Ssim, Symmetric) {
  const Image a = random_image(7, 16, 16), b = random_image(8, 16, 16);
  EXPECT_EQ(ssim(a, b), ssim(b, a));
}

TEST(Ssim, RejectsSmallOrMismatchedImages) {
  EXPECT_THROW(ssim(Image(10, 16), Image(10, 16)), ShapeError);
  EXPECT_THROW(ssim(Image(16, 16), Image(16, 17)), ShapeError);
}

TEST(Ssim, GradientMatchesFiniteDifferences) {
  const Image a = random_image(21, 14, 13), b = random_image(22, 14, 13);
  const SsimGradient g = ssim_with_gradient(a, b);
  EXPECT_NEAR(g.value, ssim(a, b), 1e-14);
  Rng rng(23);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t i = rng.below(a.size());
    Image p = a, m = a;
    p.pixels()[i] += 1e-5;
    m.pixels()[i] -= 1e-5;
    const double fd = (ssim(p, b) - ssim(m, b)) / 2e-5;
    EXPECT_NEAR(g.grad.pixels()[i], fd, 1e-6 + 1e-4 * std::abs(fd)) << i;
  }
}

TEST(Compare, ReportsBoth) {
  const Image a = random_image(1, 16, 16), b = random_image(2, 16, 16);
  const MetricReport r = compare(a, b);
  EXPECT_EQ(r.psnr, psnr(a, b));
  EXPECT_EQ(r.ssim, ssim(a, b));
}
