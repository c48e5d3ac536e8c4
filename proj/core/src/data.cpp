#include "snnc/data.hpp"

#include <cstdio>
#include <fstream>

#include "snnc/errors.hpp"
#include "snnc/rng.hpp"

namespace snnc {

std::vector<double> Dataset::one_hot(std::size_t index) const {
  std::vector<double> label(num_classes, 0.0);
  label[labels[index]] = 1.0;
  return label;
}

Dataset Dataset::head(std::size_t n) const {
  if (n >= size()) return *this;
  Dataset d;
  d.images.assign(images.begin(), images.begin() + n);
  d.labels.assign(labels.begin(), labels.begin() + n);
  d.num_classes = num_classes;
  d.image_shape = image_shape;
  d.split = split;
  return d;
}

namespace {

std::vector<unsigned char> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open file: " + path);
  return std::vector<unsigned char>(std::istreambuf_iterator<char>(in),
                                    std::istreambuf_iterator<char>());
}

std::uint32_t read_be32(const std::vector<unsigned char>& buf,
                        std::size_t offset, const std::string& what) {
  if (offset + 4 > buf.size())
    throw ParseError("truncated IDX file reading " + what, offset);
  return (std::uint32_t(buf[offset]) << 24) |
         (std::uint32_t(buf[offset + 1]) << 16) |
         (std::uint32_t(buf[offset + 2]) << 8) | std::uint32_t(buf[offset + 3]);
}

}  // namespace

Dataset load_idx(const std::string& images_path,
                 const std::string& labels_path) {
  constexpr std::uint32_t kImageMagic = 0x00000803;
  constexpr std::uint32_t kLabelMagic = 0x00000801;

  auto img = read_file(images_path);
  std::uint32_t magic = read_be32(img, 0, "image magic");
  if (magic != kImageMagic) {
    char msg[96];
    std::snprintf(msg, sizeof(msg),
                  "bad image magic 0x%08x, want 0x%08x", magic, kImageMagic);
    throw ParseError(msg, 0);
  }
  std::uint32_t count = read_be32(img, 4, "image count");
  std::uint32_t rows = read_be32(img, 8, "image rows");
  std::uint32_t cols = read_be32(img, 12, "image cols");
  std::size_t pixels = std::size_t(rows) * cols;
  std::size_t want = 16 + std::size_t(count) * pixels;
  if (img.size() < want)
    throw ParseError("truncated image payload, file ends early", img.size());

  auto lab = read_file(labels_path);
  std::uint32_t lmagic = read_be32(lab, 0, "label magic");
  if (lmagic != kLabelMagic) {
    char msg[96];
    std::snprintf(msg, sizeof(msg),
                  "bad label magic 0x%08x, want 0x%08x", lmagic, kLabelMagic);
    throw ParseError(msg, 0);
  }
  std::uint32_t lcount = read_be32(lab, 4, "label count");
  if (lcount != count)
    throw ParseError("label count " + std::to_string(lcount) +
                         " does not match image count " + std::to_string(count),
                     4);
  if (lab.size() < 8 + std::size_t(lcount))
    throw ParseError("truncated label payload, file ends early", lab.size());

  Dataset d;
  d.image_shape = {1, rows, cols};
  d.num_classes = 10;
  d.images.reserve(count);
  d.labels.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Tensor t({1, rows, cols});
    const unsigned char* p = img.data() + 16 + i * pixels;
    for (std::size_t k = 0; k < pixels; ++k) t.v[k] = p[k] / 255.0;
    d.images.push_back(std::move(t));
    d.labels.push_back(lab[8 + i]);
  }
  return d;
}

Dataset synthetic_two_class(std::size_t n, std::uint64_t rng_seed) {
  constexpr std::size_t kSide = 6;
  Dataset d;
  d.image_shape = {1, kSide, kSide};
  d.num_classes = 2;
  Rng rng(derive_seed(rng_seed, stream::kSynthetic));

  auto in_block = [](std::size_t y, std::size_t x, std::size_t cls) {
    // class 0: rows/cols 1-2; class 1: rows/cols 3-4
    std::size_t lo = cls == 0 ? 1 : 3;
    return y >= lo && y <= lo + 1 && x >= lo && x <= lo + 1;
  };

  for (std::size_t i = 0; i < n; ++i) {
    std::size_t cls = i % 2;
    Tensor img({1, kSide, kSide});
    for (std::size_t y = 0; y < kSide; ++y) {
      for (std::size_t x = 0; x < kSide; ++x) {
        double v = 0.0;
        if (in_block(y, x, cls))
          v = 1.0;
        else if (rng.next_unit() < 0.5)
          v = 0.1;
        img.v[y * kSide + x] = v;
      }
    }
    d.images.push_back(std::move(img));
    d.labels.push_back(cls);
  }
  return d;
}

std::vector<std::vector<std::size_t>> batches(std::size_t count,
                                              std::size_t batch_size,
                                              std::uint64_t shuffle_seed) {
  if (batch_size == 0) throw Error("batches: batch_size must be >= 1");
  std::vector<std::size_t> order(count);
  for (std::size_t i = 0; i < count; ++i) order[i] = i;
  Rng rng(shuffle_seed);
  shuffle(order, rng);

  std::vector<std::vector<std::size_t>> result;
  for (std::size_t start = 0; start < count; start += batch_size) {
    std::size_t end = std::min(count, start + batch_size);
    result.emplace_back(order.begin() + start, order.begin() + end);
  }
  return result;
}

}  // namespace snnc
