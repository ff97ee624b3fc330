#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "stegosplat/attacks/attacks.hpp"

namespace stegosplat::attacks {
namespace {

// ITU-T T.81 Annex K.1, natural (row-major) order.
constexpr std::array<int, 64> kLumaBase = {
    16, 11, 10, 16, 24,  40,  51,  61,  12, 12, 14, 19, 26,  58,  60,  55,
    14, 13, 16, 24, 40,  57,  69,  56,  14, 17, 22, 29, 51,  87,  80,  62,
    18, 22, 37, 56, 68,  109, 103, 77,  24, 35, 55, 64, 81,  104, 113, 92,
    49, 64, 78, 87, 103, 121, 120, 101, 72, 92, 95, 98, 112, 100, 103, 99};

constexpr std::array<int, 64> kChromaBase = {
    17, 18, 24, 47, 99, 99, 99, 99, 18, 21, 26, 66, 99, 99, 99, 99,
    24, 26, 56, 99, 99, 99, 99, 99, 47, 66, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99};

using Block = std::array<double, 64>;

const std::array<double, 64>& dct_basis() {
  // basis[u * 8 + x] = c(u) cos((2x + 1) u pi / 16), orthonormal.
  static const std::array<double, 64> b = [] {
    std::array<double, 64> m{};
    for (int u = 0; u < 8; ++u) {
      const double cu = u == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
      for (int x = 0; x < 8; ++x) m[u * 8 + x] = cu * std::cos((2 * x + 1) * u * std::numbers::pi / 16.0);
    }
    return m;
  }();
  return b;
}

Block dct2(const Block& in) {
  const auto& b = dct_basis();
  Block tmp{}, out{};
  for (int y = 0; y < 8; ++y)
    for (int u = 0; u < 8; ++u) {
      double acc = 0.0;
      for (int x = 0; x < 8; ++x) acc += b[u * 8 + x] * in[y * 8 + x];
      tmp[y * 8 + u] = acc;
    }
  for (int v = 0; v < 8; ++v)
    for (int u = 0; u < 8; ++u) {
      double acc = 0.0;
      for (int y = 0; y < 8; ++y) acc += b[v * 8 + y] * tmp[y * 8 + u];
      out[v * 8 + u] = acc;
    }
  return out;
}

Block idct2(const Block& in) {
  const auto& b = dct_basis();
  Block tmp{}, out{};
  for (int v = 0; v < 8; ++v)
    for (int x = 0; x < 8; ++x) {
      double acc = 0.0;
      for (int u = 0; u < 8; ++u) acc += b[u * 8 + x] * in[v * 8 + u];
      tmp[v * 8 + x] = acc;
    }
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) {
      double acc = 0.0;
      for (int v = 0; v < 8; ++v) acc += b[v * 8 + y] * tmp[v * 8 + x];
      out[y * 8 + x] = acc;
    }
  return out;
}

double to_byte(double v) { return std::clamp(std::round(255.0 * v), 0.0, 255.0); }

}  // namespace

int jpeg_quality(double ratio) {
  if (!(ratio > 0.0 && ratio <= 1.0)) throw std::invalid_argument("jpeg ratio must be in (0, 1]");
  return std::clamp(static_cast<int>(std::lround(100.0 * ratio)), 1, 100);
}

std::array<int, 64> jpeg_quant_table(int quality, bool chroma) {
  quality = std::clamp(quality, 1, 100);
  const int scale = quality < 50 ? 5000 / quality : 200 - 2 * quality;
  const auto& base = chroma ? kChromaBase : kLumaBase;
  std::array<int, 64> q{};
  for (int i = 0; i < 64; ++i) q[i] = std::clamp((base[i] * scale + 50) / 100, 1, 255);
  return q;
}

Image jpeg_compress(const Image& img, double ratio) {
  const int quality = jpeg_quality(ratio);
  const auto q_luma = jpeg_quant_table(quality, false);
  const auto q_chroma = jpeg_quant_table(quality, true);
  const int w = img.width(), h = img.height();
  const int pw = (w + 7) / 8 * 8, ph = (h + 7) / 8 * 8;

  // YCbCr planes (JFIF full range), level-shifted; edge-replicated padding.
  std::array<std::vector<double>, 3> planes;
  for (auto& p : planes) p.assign(static_cast<std::size_t>(pw) * ph, 0.0);
  for (int y = 0; y < ph; ++y)
    for (int x = 0; x < pw; ++x) {
      const int sx = std::min(x, w - 1), sy = std::min(y, h - 1);
      const double r = to_byte(img.at(sx, sy, 0));
      const double g = to_byte(img.at(sx, sy, 1));
      const double b = to_byte(img.at(sx, sy, 2));
      const std::size_t i = static_cast<std::size_t>(y) * pw + x;
      planes[0][i] = 0.299 * r + 0.587 * g + 0.114 * b - 128.0;
      planes[1][i] = -0.168736 * r - 0.331264 * g + 0.5 * b;
      planes[2][i] = 0.5 * r - 0.418688 * g - 0.081312 * b;
    }

  for (int c = 0; c < 3; ++c) {
    const auto& qt = c == 0 ? q_luma : q_chroma;
    auto& plane = planes[c];
    for (int by = 0; by < ph; by += 8)
      for (int bx = 0; bx < pw; bx += 8) {
        Block blk{};
        for (int y = 0; y < 8; ++y)
          for (int x = 0; x < 8; ++x) blk[y * 8 + x] = plane[static_cast<std::size_t>(by + y) * pw + bx + x];
        Block coef = dct2(blk);
        for (int i = 0; i < 64; ++i) coef[i] = std::round(coef[i] / qt[i]) * qt[i];
        const Block rec = idct2(coef);
        for (int y = 0; y < 8; ++y)
          for (int x = 0; x < 8; ++x) plane[static_cast<std::size_t>(by + y) * pw + bx + x] = rec[y * 8 + x];
      }
  }

  Image out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * pw + x;
      const double luma = planes[0][i] + 128.0, cb = planes[1][i], cr = planes[2][i];
      const double rgb[3] = {luma + 1.402 * cr, luma - 0.344136 * cb - 0.714136 * cr, luma + 1.772 * cb};
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = std::clamp(std::round(rgb[c]), 0.0, 255.0) / 255.0;
    }
  return out;
}

}  // namespace stegosplat::attacks
