#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "stegosplat/core/error.hpp"
#include "stegosplat/decoder/decoder.hpp"

namespace stegosplat::decoder {
namespace {

constexpr char kMagic[8] = {'S', 'P', 'L', 'D', 'E', 'C', '0', '1'};

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float f) { u32(std::bit_cast<std::uint32_t>(f)); }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}
  void need(std::size_t n) const {
    if (pos_ + n > in_.size()) throw FormatError("decoder checkpoint truncated");
  }
  std::uint8_t u8() {
    need(1);
    return in_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in_[pos_++]) << (8 * i);
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  bool magic() {
    need(sizeof(kMagic));
    const bool ok = std::memcmp(in_.data() + pos_, kMagic, sizeof(kMagic)) == 0;
    pos_ += sizeof(kMagic);
    return ok;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

void write_manifest(Writer& w, const Tensor& t, std::uint8_t kind, int stride) {
  w.u8(kind);
  w.u8(static_cast<std::uint8_t>(stride));
  w.u8(static_cast<std::uint8_t>(t.rank()));
  for (std::size_t d : t.shape()) w.u32(static_cast<std::uint32_t>(d));
}

void check_manifest(Reader& r, const Tensor& t, std::uint8_t kind, int stride, std::size_t index) {
  const auto k = r.u8();
  const auto s = r.u8();
  const auto rank = r.u8();
  bool ok = k == kind && s == stride && rank == t.rank();
  for (std::size_t i = 0; i < rank; ++i) ok = (r.u32() == (i < t.rank() ? t.dim(i) : 0)) && ok;
  if (!ok) throw FormatError("decoder checkpoint manifest mismatch at tensor " + std::to_string(index));
}

}  // namespace

std::vector<std::uint8_t> serialize(const DecoderNet& net) {
  Writer w;
  w.bytes(kMagic, sizeof(kMagic));
  w.u32(static_cast<std::uint32_t>(net.width()));
  w.u32(static_cast<std::uint32_t>(2 * net.size()));
  for (const auto& b : net.blocks()) {
    write_manifest(w, b.weight, 0, b.stride);
    write_manifest(w, b.bias, 1, b.stride);
  }
  for (const auto& b : net.blocks()) {
    for (float v : b.weight.data()) w.f32(v);
    for (float v : b.bias.data()) w.f32(v);
  }
  return w.take();
}

DecoderNet deserialize(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  if (!r.magic()) throw FormatError("not a decoder checkpoint (bad magic)");
  const auto width = r.u32();
  if (width < 4 || width > 4096) throw FormatError("decoder checkpoint has invalid width");
  DecoderNet net = decoder_layout(static_cast<int>(width));
  if (r.u32() != 2 * net.size()) throw FormatError("decoder checkpoint has wrong tensor count");
  std::size_t index = 0;
  for (const auto& b : net.blocks()) {
    check_manifest(r, b.weight, 0, b.stride, index++);
    check_manifest(r, b.bias, 1, b.stride, index++);
  }
  for (auto& b : net.blocks()) {
    for (float& v : b.weight.data()) v = r.f32();
    for (float& v : b.bias.data()) v = r.f32();
  }
  if (!r.done()) throw FormatError("decoder checkpoint has trailing bytes");
  return net;
}

void save_checkpoint(const DecoderNet& net, const std::filesystem::path& path) {
  const auto bytes = serialize(net);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

DecoderNet load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

}  // namespace stegosplat::decoder
