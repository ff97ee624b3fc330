#include "stegosplat/lsb/lsb.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace stegosplat::lsb {
namespace {

std::vector<std::uint8_t> to_bytes(const Image& img) {
  std::vector<std::uint8_t> out(img.size());
  auto p = img.pixels();
  for (std::size_t i = 0; i < p.size(); ++i)
    out[i] = static_cast<std::uint8_t>(std::clamp(std::lround(255.0 * p[i]), 0L, 255L));
  return out;
}

Image from_bytes(int w, int h, std::span<const std::uint8_t> bytes) {
  Image img(w, h);
  auto p = img.pixels();
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = bytes[i] / 255.0;
  return img;
}

void check_bits(int bits) {
  if (bits < 1 || bits > 4) throw std::invalid_argument("LSB bits per channel must be in [1, 4]");
}

// Reads `count` bytes starting at payload byte `first`.
std::vector<std::uint8_t> read_payload(std::span<const std::uint8_t> cover, int bits, std::size_t first,
                                       std::size_t count) {
  std::vector<std::uint8_t> out(count, 0);
  const std::size_t start_bit = first * 8;
  for (std::size_t i = 0; i < count * 8; ++i) {
    const std::size_t bit = start_bit + i;
    const std::size_t chan = bit / bits;
    const int pos = bits - 1 - static_cast<int>(bit % bits);
    const std::uint8_t v = (cover[chan] >> pos) & 1u;
    out[i / 8] |= static_cast<std::uint8_t>(v << (7 - i % 8));
  }
  return out;
}

}  // namespace

Image quantize8(const Image& img) {
  const auto bytes = to_bytes(img);
  return from_bytes(img.width(), img.height(), bytes);
}

std::array<std::uint8_t, kHeaderBytes> make_header(int width, int height, int bits) {
  std::array<std::uint8_t, kHeaderBytes> h{};
  std::memcpy(h.data(), "LSB1", 4);
  h[4] = static_cast<std::uint8_t>(width & 0xff);
  h[5] = static_cast<std::uint8_t>((width >> 8) & 0xff);
  h[6] = static_cast<std::uint8_t>(height & 0xff);
  h[7] = static_cast<std::uint8_t>((height >> 8) & 0xff);
  h[8] = static_cast<std::uint8_t>(bits);
  return h;
}

std::size_t capacity_bits(const Image& cover, int bits) { return cover.size() * static_cast<std::size_t>(bits); }

std::size_t payload_bits(const Image& hidden) { return (kHeaderBytes + hidden.size()) * 8; }

Image lsb_embed(const Image& cover, const Image& hidden, int bits) {
  check_bits(bits);
  if (hidden.width() > 0xffff || hidden.height() > 0xffff) throw std::invalid_argument("hidden image too large");
  if (payload_bits(hidden) > capacity_bits(cover, bits)) {
    throw std::invalid_argument("LSB capacity insufficient: need " + std::to_string(payload_bits(hidden)) +
                                " bits, cover holds " + std::to_string(capacity_bits(cover, bits)));
  }
  auto out = to_bytes(cover);
  std::vector<std::uint8_t> payload;
  const auto header = make_header(hidden.width(), hidden.height(), bits);
  payload.insert(payload.end(), header.begin(), header.end());
  const auto body = to_bytes(hidden);
  payload.insert(payload.end(), body.begin(), body.end());

  const std::uint8_t keep = static_cast<std::uint8_t>(0xff << bits);
  std::size_t bit = 0;
  const std::size_t total = payload.size() * 8;
  for (std::size_t chan = 0; bit < total; ++chan) {
    std::uint8_t low = 0;
    for (int j = 0; j < bits; ++j, ++bit) {
      const std::uint8_t v = bit < total ? (payload[bit / 8] >> (7 - bit % 8)) & 1u : 0u;
      low = static_cast<std::uint8_t>((low << 1) | v);
    }
    out[chan] = static_cast<std::uint8_t>((out[chan] & keep) | low);
  }
  return from_bytes(cover.width(), cover.height(), out);
}

Extraction lsb_extract(const Image& stego) {
  const auto bytes = to_bytes(stego);
  for (int bits = 1; bits <= 4; ++bits) {
    if (capacity_bits(stego, bits) < kHeaderBytes * 8) continue;
    const auto head = read_payload(bytes, bits, 0, kHeaderBytes);
    if (std::memcmp(head.data(), "LSB1", 4) != 0 || head[8] != bits) continue;
    if (!std::all_of(head.begin() + 9, head.end(), [](std::uint8_t b) { return b == 0; })) continue;
    const int w = head[4] | (head[5] << 8);
    const int h = head[6] | (head[7] << 8);
    if (w == 0 || h == 0) continue;
    const std::size_t body = static_cast<std::size_t>(w) * h * 3;
    if ((kHeaderBytes + body) * 8 > capacity_bits(stego, bits)) {
      return {std::nullopt, "header dimensions exceed cover capacity"};
    }
    return {from_bytes(w, h, read_payload(bytes, bits, kHeaderBytes, body)), {}};
  }
  return {std::nullopt, "no LSB1 header found"};
}

Image lsb_extract_unchecked(const Image& stego, int width, int height, int bits) {
  check_bits(bits);
  const std::size_t body = static_cast<std::size_t>(width) * height * 3;
  if ((kHeaderBytes + body) * 8 > capacity_bits(stego, bits)) {
    throw std::invalid_argument("requested payload exceeds cover capacity");
  }
  const auto bytes = to_bytes(stego);
  return from_bytes(width, height, read_payload(bytes, bits, kHeaderBytes, body));
}

int cover_scale_for(int cover_width, int cover_height, const Image& hidden, int bits) {
  check_bits(bits);
  for (int s = 1;; ++s) {
    const std::size_t cap = static_cast<std::size_t>(cover_width) * s * cover_height * s * 3 * bits;
    if (cap >= payload_bits(hidden)) return s;
  }
}

}  // namespace stegosplat::lsb
