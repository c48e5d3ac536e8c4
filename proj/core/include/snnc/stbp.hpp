#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "snnc/data.hpp"
#include "snnc/network.hpp"

namespace snnc {

// Per-layer weight gradients, shaped like the network's weight tensors.
struct Gradients {
  std::vector<Tensor> layers;

  static Gradients zeros_like(const SpikingNetwork& net);
  void add_scaled(const Gradients& other, double scale);
};

// One training run (the experiment driver assembles one of these per stage
// from its N0/N1/N2 epoch budget).
struct TrainConfig {
  std::size_t timesteps = 10;   // T
  std::size_t epochs = 1;
  std::size_t batch_size = 50;
  double learning_rate = 0.1;
  double lambda = 0.0;          // activity penalty; 0 disables the regularizer
  std::uint64_t seed = 1;
  unsigned threads = 0;         // 0 = hardware concurrency
};

// Rate-coded squared loss || label - (1/T) sum_t o^{t,N} ||_2^2.
double rate_loss(const ForwardRecord& record, std::span<const double> label,
                 std::size_t timesteps);

// Class with the largest average output fire rate; ties go to the lowest
// index.
std::size_t predict(const ForwardRecord& record);

// L = L_normal + lambda * R with R the average spike rate of the scope.
double regularized_loss(double normal_loss, const SpikeStats& stats,
                        double lambda);

struct BackwardOptions {
  double lambda = 0.0;       // weight of the spike-rate term
  LayerRange reg_scope;      // layers the regularizer sees (hidden scope)
  SpikeMode mode = SpikeMode::kBinary;
};

// Backpropagation through layers and time over a recorded forward pass.
// See the recursion notes in stbp.cpp.
Gradients backward_pass(const SpikingNetwork& net, const ForwardRecord& record,
                        std::span<const double> label, const LifParams& params,
                        const BackwardOptions& options);

// w <- w - lr * g. Layers carrying a prune mask keep their masked-out
// weights at exactly zero regardless of the gradient.
void sgd_step(SpikingNetwork& net, const Gradients& grads,
              double learning_rate);

// Hooks that training stages can attach to every update step.
struct TrainHooks {
  // Adds an extra term's weight gradient (e.g. the ADMM proximal term),
  // called once per batch after the data gradient has been reduced.
  std::function<void(const SpikingNetwork&, Gradients&)> grad_term;
  // Runs after each sgd_step (e.g. hard projection onto a constraint set).
  std::function<void(SpikingNetwork&)> post_step;
};

struct EpochStats {
  std::size_t epoch = 0;      // global epoch counter
  std::string split;          // "train" or "test"
  double loss = 0.0;          // rate loss + lambda * R (no proximal term)
  double accuracy = 0.0;
  double avg_spike_rate = 0.0;
};

struct TrainHistory {
  std::vector<EpochStats> epochs;
};

// Mini-batch SGD over the dataset. The batch gradient is the mean over the
// batch; per-sample gradients are computed in fixed-size chunks that may run
// on several threads and are reduced in chunk order, so results do not
// depend on the thread count. Aborts with TrainingError if the loss goes
// non-finite. epoch_offset seeds the global epoch numbering of the history
// and of the per-epoch shuffle/encoding streams.
TrainHistory train(SpikingNetwork& net, const Dataset& dataset,
                   const LifParams& params, const TrainConfig& config,
                   const TrainHooks* hooks = nullptr,
                   std::size_t epoch_offset = 0);

struct EvalResult {
  double accuracy = 0.0;
  double avg_spike_rate = 0.0;  // hidden scope, averaged over the dataset
  double loss = 0.0;            // mean rate loss
};

// Accuracy / average hidden spike rate / mean loss over a dataset.
// Encoding streams are derived from (seed, kEncodeEval, sample index).
EvalResult evaluate(const SpikingNetwork& net, const Dataset& dataset,
                    const LifParams& params, std::size_t timesteps,
                    std::uint64_t seed, unsigned threads = 0);

}  // namespace snnc
