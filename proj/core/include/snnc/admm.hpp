#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "snnc/stbp.hpp"

namespace snnc {

// Result of the layer-wise magnitude projection onto the sparse set:
// z keeps the ceil((1-s)*n) largest-magnitude entries of v, mask marks them.
struct PruneResult {
  Tensor z;
  Tensor mask;  // 1 = kept, 0 = pruned
};

// Keeps the largest-magnitude entries and zeroes the rest. Ties at the
// cutoff magnitude keep the lower flat index. Layer-wise only; callers never
// pool entries across layers.
PruneResult prune_project(const Tensor& v, double sparsity);

// Same projection applied in place (identical kept set, no mask built);
// used by the hard-retraining loops that project after every update.
void prune_inplace(Tensor& w, double sparsity);

// Quantization level set alpha * {0, +-2^0, ..., +-2^(b-1)}: 2b+1 levels.
struct QuantSpec {
  int bits = 2;        // b
  int iterations = 3;  // I
};

struct QuantResult {
  Tensor z;
  double alpha = 1.0;
  bool degenerate = false;  // all entries hit level 0 at some iteration
};

// Optional per-iteration introspection for tests.
struct QuantTrace {
  std::vector<double> residuals;   // ||v - alpha_k * ztilde_k||_2 per iteration
  std::vector<double> alphas;
  std::size_t fixed_point_iteration = 0;  // first k with unchanged assignment
};

// Alternating scale/level fit (alpha starts at 1; per iteration project
// v/alpha to the nearest level, ties to the smaller magnitude, then refit
// alpha = v^T ztilde / ztilde^T ztilde). The residual never increases.
// A projection that sends every element to level 0 means the scale is far
// too large for the data (common when |v| << 1); alpha is then reset so the
// largest element reaches the top level and the projection redone. Only an
// all-zero input stays degenerate: previous alpha kept, early stop, flag
// set.
QuantResult quantize_project(const Tensor& v, const QuantSpec& spec,
                             QuantTrace* trace = nullptr);

// The level of {0, +-2^0, ..., +-2^(b-1)} nearest to x (ties toward the
// smaller magnitude).
double nearest_level(double x, int bits);
std::vector<double> quant_levels(int bits);

// base + (rho/2) * ||w - z + ytilde||^2 for one layer.
double augmented_loss(double base_loss, std::span<const double> w,
                      std::span<const double> z,
                      std::span<const double> ytilde, double rho);

// ytilde <- ytilde + w - z (scaled-multiplier update).
void multiplier_update(Tensor& ytilde, const Tensor& w, const Tensor& z);

// Per-layer ADMM variables for one compressed layer.
struct AdmmState {
  std::size_t layer_index = 0;
  Tensor z;
  Tensor ytilde;
  double rho = 5e-4;
};

// One diagnostics row per compressed layer per ADMM epoch.
struct AdmmDiagRow {
  std::size_t epoch = 0;
  std::size_t layer = 0;
  double w_minus_z_l2 = 0.0;
  std::optional<double> alpha;
  std::size_t z_violations = 0;  // constraint violations in z; always 0
};
using AdmmDiagSink = std::function<void(const AdmmDiagRow&)>;

struct CompressOptions {
  double rho = 5e-4;
  std::size_t admm_epochs = 10;  // N1, ADMM retraining (Step I)
  std::size_t hard_epochs = 10;  // N2, hard projected retraining (Step II)
  std::vector<std::size_t> layer_indices;  // layers to compress
  AdmmDiagSink diag;
  std::size_t epoch_offset = 0;  // continues the global epoch numbering
};

// Layers subject to compression: all but the first and last when the
// network has three or more weight layers, every layer otherwise (a 2-layer
// net has no interior; excluding first and last would compress nothing).
std::vector<std::size_t> default_compressed_layers(const SpikingNetwork& net);

// Algorithm: N1 epochs of retraining under the proximal term with per-epoch
// Z/Ytilde updates, then N2 epochs of hard-projected retraining that
// re-applies the magnitude projection after every weight update. The final
// network satisfies the layer-wise sparsity exactly and carries the masks.
TrainHistory admm_prune(SpikingNetwork& net, const Dataset& dataset,
                        const LifParams& params, const TrainConfig& config,
                        double sparsity, const CompressOptions& options);

// Same two-step schedule with the quantization projection; ends with every
// compressed weight exactly in alpha_l * {0, +-2^0, ..., +-2^(b-1)}.
TrainHistory admm_quantize(SpikingNetwork& net, const Dataset& dataset,
                           const LifParams& params, const TrainConfig& config,
                           const QuantSpec& spec,
                           const CompressOptions& options);

// Pruning & quantization: full admm_prune first (yields the mask), then ADMM
// quantization retraining with updates restricted to the mask support, then
// hard retraining applying mask and quantization after every update.
TrainHistory admm_joint(SpikingNetwork& net, const Dataset& dataset,
                        const LifParams& params, const TrainConfig& config,
                        double sparsity, const QuantSpec& spec,
                        const CompressOptions& options);

// Hard compression (HC) baseline: skips the ADMM phase entirely and runs
// only the projected retraining for N2 epochs.
TrainHistory hard_compress(SpikingNetwork& net, const Dataset& dataset,
                           const LifParams& params, const TrainConfig& config,
                           std::optional<double> sparsity,
                           std::optional<QuantSpec> spec,
                           const CompressOptions& options);

}  // namespace snnc
