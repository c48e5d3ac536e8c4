#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "snnc/network.hpp"
#include "snnc/tensor.hpp"

namespace snnc {

struct Dataset {
  std::vector<Tensor> images;  // each normalized to [0,1]
  std::vector<std::size_t> labels;
  std::size_t num_classes = 0;
  Shape3 image_shape;
  std::string split;  // "train" or "test"

  std::size_t size() const { return images.size(); }
  std::vector<double> one_hot(std::size_t index) const;
  // First n samples (n >= size() returns a copy).
  Dataset head(std::size_t n) const;
};

// Parses the big-endian IDX pair used by MNIST (image magic 0x00000803,
// label magic 0x00000801). Pixels are unsigned bytes scaled by 1/255.
// Malformed input raises ParseError carrying the byte offset.
Dataset load_idx(const std::string& images_path,
                 const std::string& labels_path);

// Deterministic linearly-separable toy set: 6x6 images, two classes with
// disjoint 2x2 blocks of intensity 1.0; every other pixel is 0.1 (present
// with probability 1/2 per sample) so samples vary but a perfect separator
// always exists.
Dataset synthetic_two_class(std::size_t n, std::uint64_t rng_seed);

// Index batches for one epoch: a seeded deterministic shuffle chopped into
// batch_size pieces, final short batch included.
std::vector<std::vector<std::size_t>> batches(std::size_t count,
                                              std::size_t batch_size,
                                              std::uint64_t shuffle_seed);

}  // namespace snnc
