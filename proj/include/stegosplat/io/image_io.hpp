#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "stegosplat/core/image.hpp"

namespace stegosplat::io {

/// Binary PPM: "P6\n{w} {h}\n255\n" then RGB bytes, values round(255 x).
std::vector<std::uint8_t> encode_ppm(const Image& img);

/// Accepts P6 with maxval 255 only; whitespace and '#' comments allowed in
/// the header. Throws FormatError on anything else.
Image decode_ppm(std::span<const std::uint8_t> bytes);

void write_ppm(const Image& img, const std::filesystem::path& path);
Image read_ppm(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace stegosplat::io
