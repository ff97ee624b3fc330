#pragma once

#include <array>
#include <string>
#include <variant>
#include <vector>

#include "stegosplat/core/image.hpp"

namespace stegosplat::attacks {

struct GaussianBlur {
  double sigma = 0.0;  // px
};

struct Jpeg {
  double ratio = 1.0;  // (0, 1]; quality = round(100 * ratio)
};

using AttackSpec = std::variant<GaussianBlur, Jpeg>;

/// Separable blur, radius ceil(3 sigma), half-sample symmetric borders
/// (d c b a | a b c d). sigma = 0 returns the input unchanged.
Image gaussian_blur(const Image& img, double sigma);

/// The normalized 1-D kernel used by gaussian_blur (length 2r + 1).
std::vector<double> gaussian_kernel(double sigma);

/// libjpeg-style quality for a ratio in (0, 1].
int jpeg_quality(double ratio);

/// Quantization table (natural order) for `quality`, Annex K base tables.
std::array<int, 64> jpeg_quant_table(int quality, bool chroma);

/// Lossy JPEG round trip without entropy coding: 8-bit quantization,
/// YCbCr 4:4:4, 8x8 DCT, table quantization, inverse. Output is clamped and
/// quantized to 8 bits like a decoded file.
Image jpeg_compress(const Image& img, double ratio);

Image apply(const AttackSpec& spec, const Image& img);

std::string describe(const AttackSpec& spec);

/// Parses "blur:<sigma>" or "jpeg:<ratio>".
AttackSpec parse_attack(const std::string& text);

}  // namespace stegosplat::attacks
