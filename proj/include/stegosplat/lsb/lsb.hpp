#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "stegosplat/core/image.hpp"

namespace stegosplat::lsb {

inline constexpr std::size_t kHeaderBytes = 16;

// Header (bit-exact): bytes 0-3 "LSB1", 4-5 width (LE u16), 6-7 height
// (LE u16), 8 bits-per-channel k, 9-15 zero.
std::array<std::uint8_t, kHeaderBytes> make_header(int width, int height, int bits);

/// Number of payload bits a cover can carry at k bits per channel.
std::size_t capacity_bits(const Image& cover, int bits);

std::size_t payload_bits(const Image& hidden);

/// Writes header + 8-bit hidden RGB bytes MSB-first into the k lowest bits
/// of the 8-bit-quantized cover, channels in raster order. Throws
/// std::invalid_argument on insufficient capacity or k outside [1, 4].
Image lsb_embed(const Image& cover, const Image& hidden, int bits);

struct Extraction {
  std::optional<Image> hidden;
  std::string error;
  explicit operator bool() const { return hidden.has_value(); }
};

/// Tries k = 1..4 and accepts the first k whose header parses and names k.
Extraction lsb_extract(const Image& stego);

/// Reads the payload region as if a valid header for (width, height, k) were
/// present, ignoring the header bytes. Used to score attacked images whose
/// header no longer parses.
Image lsb_extract_unchecked(const Image& stego, int width, int height, int bits);

/// Smallest integer upscale of a cover whose capacity fits `hidden` at k bits.
int cover_scale_for(int cover_width, int cover_height, const Image& hidden, int bits);

/// Rounds to 8 bits and back.
Image quantize8(const Image& img);

}  // namespace stegosplat::lsb
