#include "stegosplat/io/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

#include "stegosplat/core/error.hpp"

namespace stegosplat::io {

std::vector<std::uint8_t> encode_ppm(const Image& img) {
  const std::string header = "P6\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + img.size());
  for (double v : img.pixels()) {
    out.push_back(static_cast<std::uint8_t>(std::clamp(std::lround(255.0 * v), 0L, 255L)));
  }
  return out;
}

namespace {

class HeaderParser {
 public:
  explicit HeaderParser(std::span<const std::uint8_t> b) : b_(b) {}

  void skip_space() {
    while (pos_ < b_.size()) {
      if (b_[pos_] == '#') {
        while (pos_ < b_.size() && b_[pos_] != '\n') ++pos_;
      } else if (std::isspace(b_[pos_])) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  long number(const char* what) {
    skip_space();
    long v = 0;
    std::size_t digits = 0;
    while (pos_ < b_.size() && std::isdigit(b_[pos_]) && digits < 9) {
      v = v * 10 + (b_[pos_++] - '0');
      ++digits;
    }
    if (digits == 0) throw FormatError(std::string("PPM: malformed header, expected ") + what);
    return v;
  }

  std::size_t pos() const { return pos_; }
  void advance() { ++pos_; }
  bool at_space() const { return pos_ < b_.size() && std::isspace(b_[pos_]); }

 private:
  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

}  // namespace

Image decode_ppm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') throw FormatError("PPM: missing P6 magic");
  HeaderParser p(bytes.subspan(2));
  const long w = p.number("width");
  const long h = p.number("height");
  const long maxval = p.number("maxval");
  if (maxval != 255) throw FormatError("PPM: unsupported maxval " + std::to_string(maxval) + " (only 255)");
  if (w <= 0 || h <= 0) throw FormatError("PPM: non-positive dimensions");
  if (!p.at_space()) throw FormatError("PPM: malformed header, no separator before pixel data");
  p.advance();
  const std::size_t start = 2 + p.pos();
  const std::size_t need = static_cast<std::size_t>(w) * h * 3;
  if (bytes.size() - start < need) throw FormatError("PPM: truncated pixel data");
  Image img(static_cast<int>(w), static_cast<int>(h));
  auto px = img.pixels();
  for (std::size_t i = 0; i < need; ++i) px[i] = bytes[start + i] / 255.0;
  return img;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

void write_ppm(const Image& img, const std::filesystem::path& path) { write_file(path, encode_ppm(img)); }

Image read_ppm(const std::filesystem::path& path) { return decode_ppm(read_file(path)); }

}  // namespace stegosplat::io
