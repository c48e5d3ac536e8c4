#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "snnc/lif.hpp"
#include "snnc/tensor.hpp"

namespace snnc {

enum class LayerKind { kDense, kConv2d };

// Channels x height x width. Dense activations use {n, 1, 1}.
struct Shape3 {
  std::size_t c = 0, h = 0, w = 0;
  std::size_t count() const { return c * h * w; }
  bool operator==(const Shape3&) const = default;
};

// One weight layer. There is no bias term anywhere in the model.
// Dense weights are {out, in}; conv weights are {oc, ic, kh, kw} applied as
// cross-correlation with valid padding and the given stride.
struct Layer {
  LayerKind kind = LayerKind::kDense;
  Tensor weights;
  std::size_t stride = 1;  // conv only
  Shape3 in_shape, out_shape;

  // Compression state, present once the layer has been pruned / quantized.
  std::optional<Tensor> prune_mask;   // 0/1 tensor shaped like weights
  std::optional<double> quant_alpha;  // per-layer scale of the level set
  std::optional<int> quant_bits;

  std::size_t in_size() const { return in_shape.count(); }
  std::size_t out_size() const { return out_shape.count(); }
};

class SpikingNetwork {
 public:
  Shape3 input_shape;
  std::vector<Layer> layers;

  std::size_t num_layers() const { return layers.size(); }
  std::size_t output_size() const { return layers.back().out_size(); }

  // Builds a network from an architecture string. Tokens are separated by
  // '-': the first is the input shape, either a flat size ("784") or
  // "CxHxW" ("1x28x28"); the rest are layers, a plain integer for a dense
  // layer or "<out>C<k>S<s>" for a conv layer with k x k kernels and stride
  // s (e.g. "1x28x28-12C5S2-10").
  static SpikingNetwork from_architecture(const std::string& arch);
  std::string architecture() const;

  // Uniform init in [-k, k] with k = sqrt(3 / fan_in).
  void init_weights(std::uint64_t seed);
};

// Everything forward_pass records: the input spike train plus u and o of
// every layer at every timestep. layers[j] is the output of weight layer j;
// frames are 0-indexed in time.
struct ForwardRecord {
  struct LayerTrace {
    std::vector<std::vector<double>> u;  // T x layer size
    std::vector<std::vector<double>> o;
  };
  std::vector<std::vector<double>> input;  // T x input size
  std::vector<LayerTrace> layers;

  std::size_t timesteps() const { return input.size(); }
};

struct SpikeStats {
  double avg_rate = 0.0;  // spikes per neuron per timestep, in [0,1]
  std::vector<double> per_layer_rate;
  std::uint64_t total_spikes = 0;
};

// Half-open range [first, last) of ForwardRecord layer indices.
struct LayerRange {
  std::size_t first = 0, last = 0;
  std::size_t count() const { return last - first; }
};

// Hidden layers of the record: every neuron layer except the input spike
// train and the output layer. This single definition is shared by the
// activity regularizer and the spike-rate metrics.
LayerRange hidden_scope(const SpikingNetwork& net);

// W * o for a dense layer. Since o is binary this is the masked row sum of
// the weight matrix.
std::vector<double> dense_integrate(const Layer& layer,
                                    std::span<const double> spikes);

// Cross-correlation with valid padding for a conv layer.
std::vector<double> conv2d_integrate(const Layer& layer,
                                     std::span<const double> spikes);

std::vector<double> integrate(const Layer& layer,
                              std::span<const double> spikes);

// Runs the network for input_spikes.size() timesteps. All layer states start
// at u = 0, o = 0. Per timestep the layers are swept in depth order, each
// integrating the same-timestep output of the previous layer and then
// applying the LIF update.
ForwardRecord forward_pass(const SpikingNetwork& net,
                           const std::vector<std::vector<double>>& input_spikes,
                           const LifParams& params,
                           SpikeMode mode = SpikeMode::kBinary);
void forward_pass(const SpikingNetwork& net,
                  const std::vector<std::vector<double>>& input_spikes,
                  const LifParams& params, SpikeMode mode, ForwardRecord& out);

// Converts pixel intensities in [0,1] to a spike train of length T by
// independent Bernoulli draws per pixel per timestep.
std::vector<std::vector<double>> bernoulli_encode(const Tensor& image,
                                                  std::size_t timesteps,
                                                  std::uint64_t rng_seed);
void bernoulli_encode_into(const Tensor& image, std::size_t timesteps,
                           std::uint64_t rng_seed,
                           std::vector<std::vector<double>>& out);

// Average spike rate over the given record layers (default: hidden scope of
// a record produced by `net`). Throws on an empty scope.
SpikeStats measure_spike_rate(const ForwardRecord& record, LayerRange scope);

// Sum of all o values in the scope (fractional in ramp mode).
double record_spike_sum(const ForwardRecord& record, LayerRange scope);
// Number of neurons covered by the scope.
std::size_t scope_neuron_count(const ForwardRecord& record, LayerRange scope);

}  // namespace snnc
