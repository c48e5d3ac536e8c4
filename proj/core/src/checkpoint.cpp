#include "snnc/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <vector>

#include "snnc/errors.hpp"

namespace snnc {

namespace {

constexpr char kMagic[8] = {'S', 'N', 'N', 'C', 'K', 'P', 'T', '\n'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "checkpoint writer assumes a little-endian host");

class Writer {
 public:
  explicit Writer(const std::string& path) : out_(path, std::ios::binary) {
    if (!out_) throw Error("cannot open checkpoint for writing: " + path);
  }
  void bytes(const void* p, std::size_t n) {
    out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
  }
  void u8(std::uint8_t x) { bytes(&x, 1); }
  void u32(std::uint32_t x) { bytes(&x, 4); }
  void u64(std::uint64_t x) { bytes(&x, 8); }
  void f64(double x) { bytes(&x, 8); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  void done() {
    out_.flush();
    if (!out_) throw Error("checkpoint write failed");
  }

 private:
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open checkpoint: " + path);
    buf_.assign(std::istreambuf_iterator<char>(in),
                std::istreambuf_iterator<char>());
  }
  void bytes(void* p, std::size_t n) {
    if (pos_ + n > buf_.size())
      throw ParseError("truncated checkpoint", pos_);
    std::memcpy(p, buf_.data() + pos_, n);
    pos_ += n;
  }
  std::uint8_t u8() { std::uint8_t x; bytes(&x, 1); return x; }
  std::uint32_t u32() { std::uint32_t x; bytes(&x, 4); return x; }
  std::uint64_t u64() { std::uint64_t x; bytes(&x, 8); return x; }
  double f64() { double x; bytes(&x, 8); return x; }
  std::string str() {
    std::uint32_t n = u32();
    std::string s(n, '\0');
    bytes(s.data(), n);
    return s;
  }
  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return buf_.size() - pos_; }

 private:
  std::vector<char> buf_;
  std::size_t pos_ = 0;
};

void write_tensor(Writer& w, const Tensor& t) {
  w.u32(static_cast<std::uint32_t>(t.shape.size()));
  for (std::size_t d : t.shape) w.u64(d);
  w.bytes(t.v.data(), t.v.size() * sizeof(double));
}

Tensor read_tensor(Reader& r) {
  std::uint32_t ndim = r.u32();
  if (ndim > 8) throw ParseError("implausible tensor rank", r.pos());
  std::vector<std::size_t> shape(ndim);
  for (auto& d : shape) d = static_cast<std::size_t>(r.u64());
  Tensor t(shape);
  r.bytes(t.v.data(), t.v.size() * sizeof(double));
  return t;
}

void write_mask(Writer& w, const Tensor& mask) {
  std::vector<std::uint8_t> packed((mask.size() + 7) / 8, 0);
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask.v[i] != 0.0) packed[i / 8] |= std::uint8_t(1u << (i % 8));
  w.bytes(packed.data(), packed.size());
}

Tensor read_mask(Reader& r, const std::vector<std::size_t>& shape) {
  Tensor mask(shape);
  std::vector<std::uint8_t> packed((mask.size() + 7) / 8);
  r.bytes(packed.data(), packed.size());
  for (std::size_t i = 0; i < mask.size(); ++i)
    mask.v[i] = (packed[i / 8] >> (i % 8)) & 1u ? 1.0 : 0.0;
  return mask;
}

}  // namespace

void save_checkpoint(const std::string& path, const SpikingNetwork& net,
                     const CheckpointMeta& meta) {
  Writer w(path);
  w.bytes(kMagic, sizeof(kMagic));
  w.u32(kVersion);
  w.str(meta.architecture.empty() ? net.architecture() : meta.architecture);
  w.u64(meta.seed);
  w.u64(meta.epoch);
  w.u32(static_cast<std::uint32_t>(net.num_layers()));
  for (const Layer& l : net.layers) {
    w.u8(l.kind == LayerKind::kDense ? 0 : 1);
    w.u32(static_cast<std::uint32_t>(l.stride));
    for (std::size_t d : {l.in_shape.c, l.in_shape.h, l.in_shape.w,
                          l.out_shape.c, l.out_shape.h, l.out_shape.w})
      w.u64(d);
    write_tensor(w, l.weights);
    w.u8(l.prune_mask ? 1 : 0);
    if (l.prune_mask) write_mask(w, *l.prune_mask);
    w.u8(l.quant_alpha ? 1 : 0);
    if (l.quant_alpha) w.f64(*l.quant_alpha);
    w.u8(l.quant_bits ? 1 : 0);
    if (l.quant_bits) w.u32(static_cast<std::uint32_t>(*l.quant_bits));
  }
  w.done();
}

Checkpoint load_checkpoint(const std::string& path) {
  Reader r(path);
  char magic[8];
  r.bytes(magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw ParseError("not a checkpoint file (bad magic)", 0);
  std::uint32_t version = r.u32();
  if (version != kVersion)
    throw ParseError("unsupported checkpoint version " +
                         std::to_string(version),
                     8);

  Checkpoint ck;
  ck.meta.architecture = r.str();
  ck.meta.seed = r.u64();
  ck.meta.epoch = r.u64();

  ck.net = SpikingNetwork::from_architecture(ck.meta.architecture);
  std::uint32_t layer_count = r.u32();
  if (layer_count != ck.net.num_layers())
    throw ParseError("layer count does not match architecture", r.pos());
  for (Layer& l : ck.net.layers) {
    LayerKind kind = r.u8() == 0 ? LayerKind::kDense : LayerKind::kConv2d;
    std::size_t stride = r.u32();
    Shape3 in, out;
    in.c = r.u64();
    in.h = r.u64();
    in.w = r.u64();
    out.c = r.u64();
    out.h = r.u64();
    out.w = r.u64();
    if (kind != l.kind || stride != l.stride || !(in == l.in_shape) ||
        !(out == l.out_shape))
      throw ParseError("layer header does not match architecture", r.pos());
    Tensor weights = read_tensor(r);
    if (!weights.same_shape(l.weights))
      throw ParseError("weight shape does not match architecture", r.pos());
    l.weights = std::move(weights);
    if (r.u8()) l.prune_mask = read_mask(r, l.weights.shape);
    if (r.u8()) l.quant_alpha = r.f64();
    if (r.u8()) l.quant_bits = static_cast<int>(r.u32());
  }
  if (r.remaining() != 0)
    throw ParseError("trailing bytes after checkpoint payload", r.pos());
  return ck;
}

}  // namespace snnc
