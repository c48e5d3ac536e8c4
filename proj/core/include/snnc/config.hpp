#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "snnc/lif.hpp"

namespace snnc {

enum class CompressMode {
  kNone,
  kPrune,
  kQuantize,
  kRegularize,
  kPruneQuantize,
  kPruneRegularize,
  kQuantizeRegularize,
  kAll,  // prune + quantize + regularize
};

CompressMode parse_mode(const std::string& name);
std::string mode_name(CompressMode mode);
bool mode_prunes(CompressMode mode);
bool mode_quantizes(CompressMode mode);
bool mode_regularizes(CompressMode mode);

// Which layers compression touches. kAuto excludes the first and last
// layers when the network has an interior, and falls back to every layer
// for 1- and 2-layer networks.
enum class CompressScope { kAuto, kAll, kInterior };

// Flat key=value experiment description; every knob can also be overridden
// from the command line. See config.cpp for the key list.
struct ExperimentConfig {
  std::string arch = "784-400-10";
  std::string dataset = "mnist";  // "mnist" or "synthetic"
  std::string data_dir = "data/mnist";
  std::string out_dir = "out";
  std::uint64_t seed = 1;

  CompressMode mode = CompressMode::kNone;
  CompressScope scope = CompressScope::kAuto;

  LifParams lif;

  std::size_t timesteps = 10;       // T
  std::size_t epochs_pretrain = 10; // N0
  std::size_t epochs_admm = 10;     // N1
  std::size_t epochs_hard = 10;     // N2
  std::size_t batch_size = 50;
  double learning_rate = 0.1;
  double lambda = 0.0;
  double sparsity = 0.0;       // s
  int bits = 32;               // b
  int quant_iterations = 3;    // I
  double rho = 5e-4;
  int baseline_bits = 32;      // B

  unsigned threads = 0;        // 0 = hardware concurrency
  std::size_t train_limit = 0; // 0 = whole split
  std::size_t test_limit = 0;
  std::size_t synthetic_samples = 512;
  bool eval_each_epoch = false;

  void apply_override(const std::string& key_equals_value);
  // Collects every problem before throwing ConfigError listing all of them.
  void validate() const;
};

ExperimentConfig parse_config_file(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text,
                                   const std::string& origin = "<memory>");

}  // namespace snnc
