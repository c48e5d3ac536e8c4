#pragma once

#include <cstdint>
#include <string>

#include "snnc/network.hpp"

namespace snnc {

// Experiment state carried alongside the weights. seed plus the epoch
// counter determine every future random stream, so together they are the
// serialized RNG state.
struct CheckpointMeta {
  std::string architecture;
  std::uint64_t seed = 0;
  std::uint64_t epoch = 0;
};

struct Checkpoint {
  CheckpointMeta meta;
  SpikingNetwork net;
};

// Binary, versioned, little-endian format: magic "SNNCKPT\n", u32 version,
// meta, then per layer the shape header, the f64 weight payload, the
// bit-packed prune mask and the quantizer state. load(save(x)) is bit-exact.
void save_checkpoint(const std::string& path, const SpikingNetwork& net,
                     const CheckpointMeta& meta);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace snnc
