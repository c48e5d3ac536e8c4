#include "snnc/stbp.hpp"

#include <algorithm>
#include <cmath>

#include "snnc/parallel.hpp"
#include "snnc/rng.hpp"

namespace snnc {

Gradients Gradients::zeros_like(const SpikingNetwork& net) {
  Gradients g;
  g.layers.reserve(net.num_layers());
  for (const Layer& l : net.layers) g.layers.push_back(Tensor(l.weights.shape));
  return g;
}

void Gradients::add_scaled(const Gradients& other, double scale) {
  check_dims(layers.size() == other.layers.size(),
             "Gradients::add_scaled: layer count mismatch");
  for (std::size_t j = 0; j < layers.size(); ++j)
    for (std::size_t i = 0; i < layers[j].size(); ++i)
      layers[j].v[i] += scale * other.layers[j].v[i];
}

double rate_loss(const ForwardRecord& record, std::span<const double> label,
                 std::size_t timesteps) {
  const auto& out = record.layers.back().o;
  check_dims(!out.empty() && out[0].size() == label.size(),
             "rate_loss: output width does not match label");
  check_dims(record.timesteps() == timesteps,
             "rate_loss: record does not cover T timesteps");
  double loss = 0.0;
  for (std::size_t k = 0; k < label.size(); ++k) {
    double rate = 0.0;
    for (std::size_t t = 0; t < timesteps; ++t) rate += out[t][k];
    rate /= static_cast<double>(timesteps);
    double d = label[k] - rate;
    loss += d * d;
  }
  return loss;
}

std::size_t predict(const ForwardRecord& record) {
  const auto& out = record.layers.back().o;
  std::size_t width = out[0].size();
  std::size_t best = 0;
  double best_rate = -1.0;
  for (std::size_t k = 0; k < width; ++k) {
    double rate = 0.0;
    for (const auto& frame : out) rate += frame[k];
    if (rate > best_rate) {
      best_rate = rate;
      best = k;
    }
  }
  return best;
}

double regularized_loss(double normal_loss, const SpikeStats& stats,
                        double lambda) {
  if (lambda < 0.0) throw Error("regularized_loss: lambda must be >= 0");
  return normal_loss + lambda * stats.avg_rate;
}

namespace {

// dL/d(presyn o) for a layer given dL/du of its output.
void backward_input(const Layer& layer, const std::vector<double>& du,
                    std::vector<double>& dinput) {
  dinput.assign(layer.in_size(), 0.0);
  const double* w = layer.weights.data();
  if (layer.kind == LayerKind::kDense) {
    const std::size_t in = layer.in_size();
    for (std::size_t j = 0; j < layer.out_size(); ++j) {
      double d = du[j];
      if (d == 0.0) continue;
      const double* row = w + j * in;
      for (std::size_t i = 0; i < in; ++i) dinput[i] += row[i] * d;
    }
    return;
  }
  const Shape3& is = layer.in_shape;
  const Shape3& os = layer.out_shape;
  const std::size_t kh = layer.weights.shape[2];
  const std::size_t kw = layer.weights.shape[3];
  for (std::size_t oc = 0; oc < os.c; ++oc)
    for (std::size_t oy = 0; oy < os.h; ++oy)
      for (std::size_t ox = 0; ox < os.w; ++ox) {
        double d = du[(oc * os.h + oy) * os.w + ox];
        if (d == 0.0) continue;
        for (std::size_t ic = 0; ic < is.c; ++ic)
          for (std::size_t ky = 0; ky < kh; ++ky)
            for (std::size_t kx = 0; kx < kw; ++kx) {
              std::size_t iy = oy * layer.stride + ky;
              std::size_t ix = ox * layer.stride + kx;
              dinput[(ic * is.h + iy) * is.w + ix] +=
                  w[((oc * is.c + ic) * kh + ky) * kw + kx] * d;
            }
      }
}

// dW accumulation for one conv timestep: grad_w += du (x) presyn.
void conv_weight_grad(const Layer& layer, const std::vector<double>& presyn,
                      const std::vector<double>& du, Tensor& grad) {
  const Shape3& is = layer.in_shape;
  const Shape3& os = layer.out_shape;
  const std::size_t kh = layer.weights.shape[2];
  const std::size_t kw = layer.weights.shape[3];
  for (std::size_t oc = 0; oc < os.c; ++oc)
    for (std::size_t oy = 0; oy < os.h; ++oy)
      for (std::size_t ox = 0; ox < os.w; ++ox) {
        double d = du[(oc * os.h + oy) * os.w + ox];
        if (d == 0.0) continue;
        for (std::size_t ic = 0; ic < is.c; ++ic)
          for (std::size_t ky = 0; ky < kh; ++ky)
            for (std::size_t kx = 0; kx < kw; ++kx) {
              std::size_t iy = oy * layer.stride + ky;
              std::size_t ix = ox * layer.stride + kx;
              grad.v[((oc * is.c + ic) * kh + ky) * kw + kx] +=
                  d * presyn[(ic * is.h + iy) * is.w + ix];
            }
      }
}

// Adds this sample's weight gradients into `grad`.
//
// The unrolled graph has two incoming paths per spike node o^{t,n}: the
// spatial one into layer n+1 at the same timestep (via the weights), and the
// temporal one into u^{t+1,n} through the reset factor (1 - o). Likewise u
// feeds o at the same node and u^{t+1} through the decay. Sweeping t
// backwards and, inside a timestep, layers top-down gives the adjoints
//   dL/do^{t,n} = W^T dL/du^{t,n+1} - decay * u^{t,n} * dL/du^{t+1,n} [+ dR]
//   dL/du^{t,n} = dL/do^{t,n} * sg(u^{t,n})
//                 + decay * (1 - o^{t,n}) * dL/du^{t+1,n}
//   dW^n       += sum_t dL/du^{t,n+1} (x) o^{t,n}
// with sg the boxcar surrogate, zero future adjoint at t = T, the rate-loss
// derivative 2/T (rate - label) entering at the output layer, and, when
// lambda > 0, the constant lambda / (#scope neurons * T) entering at every
// hidden spike node.
void backward_into(const SpikingNetwork& net, const ForwardRecord& record,
                   std::span<const double> label, const LifParams& params,
                   const BackwardOptions& options, Gradients& grad) {
  const std::size_t L = net.num_layers();
  const std::size_t T = record.timesteps();
  check_dims(grad.layers.size() == L, "backward: gradient/net mismatch");
  check_dims(record.layers.size() == L, "backward: record/net mismatch");
  check_dims(net.output_size() == label.size(),
             "backward: label width mismatch");

  // du_all[j][t] = dL/du of layer j at timestep t, kept for the weight-grad
  // phase so each gradient row is filled across all timesteps in one go.
  static thread_local std::vector<std::vector<std::vector<double>>> du_all;
  static thread_local std::vector<double> dout, rate;
  du_all.assign(L, {});
  for (std::size_t j = 0; j < L; ++j)
    du_all[j].assign(T, std::vector<double>(net.layers[j].out_size()));

  rate.assign(label.size(), 0.0);
  for (const auto& frame : record.layers.back().o)
    for (std::size_t k = 0; k < label.size(); ++k) rate[k] += frame[k];
  for (double& x : rate) x /= static_cast<double>(T);

  const double reg_unit =
      options.lambda > 0.0 && options.reg_scope.count() > 0
          ? options.lambda /
                (static_cast<double>(
                     scope_neuron_count(record, options.reg_scope)) *
                 static_cast<double>(T))
          : 0.0;

  for (std::size_t ti = T; ti-- > 0;) {
    for (std::size_t j = L; j-- > 0;) {
      const Layer& layer = net.layers[j];
      const auto& u = record.layers[j].u[ti];
      const auto& o = record.layers[j].o[ti];
      const bool has_future = ti + 1 < T;

      if (j + 1 == L) {
        dout.assign(layer.out_size(), 0.0);
        for (std::size_t k = 0; k < label.size(); ++k)
          dout[k] = 2.0 / static_cast<double>(T) * (rate[k] - label[k]);
      } else {
        backward_input(net.layers[j + 1], du_all[j + 1][ti], dout);
      }
      if (reg_unit != 0.0 && j >= options.reg_scope.first &&
          j < options.reg_scope.last)
        for (double& d : dout) d += reg_unit;

      auto& du = du_all[j][ti];
      for (std::size_t i = 0; i < layer.out_size(); ++i) {
        double d = dout[i];
        if (has_future) d += du_all[j][ti + 1][i] * (-params.decay * u[i]);
        du[i] = d * surrogate_grad(u[i], params);
        if (has_future)
          du[i] += du_all[j][ti + 1][i] * params.decay * (1.0 - o[i]);
      }
    }
  }

  // Weight gradients: dW^j += sum_t du^t (x) presyn^t, walked row by row for
  // dense layers so a row is touched once per sample, not once per timestep.
  static thread_local std::vector<std::vector<std::size_t>> active;
  for (std::size_t j = 0; j < L; ++j) {
    const Layer& layer = net.layers[j];
    const auto& frames = j == 0 ? record.input : record.layers[j - 1].o;
    if (layer.kind == LayerKind::kDense) {
      const std::size_t in = layer.in_size();
      active.assign(T, {});
      for (std::size_t t = 0; t < T; ++t)
        for (std::size_t k = 0; k < in; ++k)
          if (frames[t][k] != 0.0) active[t].push_back(k);
      // Same four-row blocking as the forward integration.
      const std::size_t out = layer.out_size();
      std::size_t row = 0;
      for (; row + 4 <= out; row += 4) {
        double* g0 = grad.layers[j].data() + row * in;
        double* g1 = g0 + in;
        double* g2 = g1 + in;
        double* g3 = g2 + in;
        for (std::size_t t = 0; t < T; ++t) {
          const double* du_t = du_all[j][t].data();
          double d0 = du_t[row], d1 = du_t[row + 1], d2 = du_t[row + 2],
                 d3 = du_t[row + 3];
          if (d0 == 0.0 && d1 == 0.0 && d2 == 0.0 && d3 == 0.0) continue;
          for (std::size_t k : active[t]) {
            double f = frames[t][k];
            g0[k] += d0 * f;
            g1[k] += d1 * f;
            g2[k] += d2 * f;
            g3[k] += d3 * f;
          }
        }
      }
      for (; row < out; ++row) {
        double* g = grad.layers[j].data() + row * in;
        for (std::size_t t = 0; t < T; ++t) {
          double d = du_all[j][t][row];
          if (d == 0.0) continue;
          for (std::size_t k : active[t]) g[k] += d * frames[t][k];
        }
      }
    } else {
      for (std::size_t t = 0; t < T; ++t)
        conv_weight_grad(layer, frames[t], du_all[j][t], grad.layers[j]);
    }
  }
}

}  // namespace

Gradients backward_pass(const SpikingNetwork& net, const ForwardRecord& record,
                        std::span<const double> label, const LifParams& params,
                        const BackwardOptions& options) {
  Gradients grad = Gradients::zeros_like(net);
  backward_into(net, record, label, params, options, grad);
  return grad;
}

void sgd_step(SpikingNetwork& net, const Gradients& grads,
              double learning_rate) {
  check_dims(grads.layers.size() == net.num_layers(),
             "sgd_step: gradient/net mismatch");
  for (std::size_t j = 0; j < net.num_layers(); ++j) {
    Layer& l = net.layers[j];
    check_dims(grads.layers[j].same_shape(l.weights),
               "sgd_step: gradient shape mismatch");
    if (l.prune_mask) {
      const Tensor& m = *l.prune_mask;
      for (std::size_t i = 0; i < l.weights.size(); ++i)
        l.weights.v[i] = m.v[i] == 0.0
                             ? 0.0
                             : l.weights.v[i] -
                                   learning_rate * grads.layers[j].v[i];
    } else {
      for (std::size_t i = 0; i < l.weights.size(); ++i)
        l.weights.v[i] -= learning_rate * grads.layers[j].v[i];
    }
  }
}

namespace {

// Samples per reduction slot. The chunk layout depends only on the batch
// size, so results are identical for any thread count.
constexpr std::size_t kGradChunk = 13;

struct ChunkAccum {
  Gradients grads;
  double loss_sum = 0.0;
  double spike_sum = 0.0;
  std::size_t correct = 0;

  void reset(const SpikingNetwork& net) {
    if (grads.layers.empty()) {
      grads = Gradients::zeros_like(net);
    } else {
      for (Tensor& t : grads.layers) std::fill(t.v.begin(), t.v.end(), 0.0);
    }
    loss_sum = 0.0;
    spike_sum = 0.0;
    correct = 0;
  }
};

}  // namespace

TrainHistory train(SpikingNetwork& net, const Dataset& dataset,
                   const LifParams& params, const TrainConfig& config,
                   const TrainHooks* hooks, std::size_t epoch_offset) {
  if (dataset.size() == 0) throw Error("train: empty dataset");
  if (config.batch_size == 0) throw Error("train: batch_size must be >= 1");
  if (!(config.learning_rate > 0.0))
    throw Error("train: learning_rate must be > 0");
  params.validate();

  const LayerRange scope = hidden_scope(net);
  std::size_t scope_neurons = 0;
  for (std::size_t j = scope.first; j < scope.last; ++j)
    scope_neurons += net.layers[j].out_size();
  const double rate_div =
      static_cast<double>(scope_neurons) * static_cast<double>(config.timesteps);

  BackwardOptions bopt;
  bopt.lambda = config.lambda;
  bopt.reg_scope = scope;

  TrainHistory history;
  std::vector<ChunkAccum> chunks;
  Gradients batch_grads = Gradients::zeros_like(net);

  for (std::size_t e = 0; e < config.epochs; ++e) {
    const std::size_t epoch = epoch_offset + e;
    auto epoch_batches =
        batches(dataset.size(), config.batch_size,
                derive_seed(config.seed, stream::kShuffle, epoch));

    double epoch_loss = 0.0;
    std::size_t epoch_correct = 0;
    double epoch_spikes = 0.0;

    for (const auto& batch : epoch_batches) {
      const std::size_t bsize = batch.size();
      const std::size_t nchunks = (bsize + kGradChunk - 1) / kGradChunk;
      if (chunks.size() < nchunks) chunks.resize(nchunks);

      parallel_for_chunks(nchunks, config.threads, [&](std::size_t c) {
        ChunkAccum& acc = chunks[c];
        acc.reset(net);
        static thread_local ForwardRecord record;
        static thread_local std::vector<std::vector<double>> spikes;
        std::size_t lo = c * kGradChunk;
        std::size_t hi = std::min(bsize, lo + kGradChunk);
        for (std::size_t s = lo; s < hi; ++s) {
          std::size_t idx = batch[s];
          bernoulli_encode_into(
              dataset.images[idx], config.timesteps,
              derive_seed(config.seed, stream::kEncodeTrain, epoch, idx),
              spikes);
          forward_pass(net, spikes, params, SpikeMode::kBinary, record);
          auto label = dataset.one_hot(idx);
          acc.loss_sum += rate_loss(record, label, config.timesteps);
          if (predict(record) == dataset.labels[idx]) ++acc.correct;
          if (scope_neurons > 0)
            acc.spike_sum += record_spike_sum(record, scope);
          backward_into(net, record, label, params, bopt, acc.grads);
        }
      });

      for (Tensor& t : batch_grads.layers)
        std::fill(t.v.begin(), t.v.end(), 0.0);
      double batch_loss = 0.0;
      double batch_spikes = 0.0;
      for (std::size_t c = 0; c < nchunks; ++c) {
        const ChunkAccum& acc = chunks[c];
        batch_grads.add_scaled(acc.grads, 1.0 / static_cast<double>(bsize));
        batch_loss += acc.loss_sum;
        batch_spikes += acc.spike_sum;
        epoch_correct += acc.correct;
      }
      batch_loss /= static_cast<double>(bsize);
      if (config.lambda > 0.0 && scope_neurons > 0)
        batch_loss += config.lambda * batch_spikes /
                      (static_cast<double>(bsize) * rate_div);
      if (!std::isfinite(batch_loss))
        throw TrainingError("train: non-finite loss, aborting", epoch);

      if (hooks && hooks->grad_term) hooks->grad_term(net, batch_grads);
      sgd_step(net, batch_grads, config.learning_rate);
      if (hooks && hooks->post_step) hooks->post_step(net);

      epoch_loss += batch_loss * static_cast<double>(bsize);
      epoch_spikes += batch_spikes;
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.split = "train";
    stats.loss = epoch_loss / static_cast<double>(dataset.size());
    stats.accuracy =
        static_cast<double>(epoch_correct) / static_cast<double>(dataset.size());
    stats.avg_spike_rate =
        scope_neurons > 0
            ? epoch_spikes / (static_cast<double>(dataset.size()) * rate_div)
            : 0.0;
    history.epochs.push_back(stats);
  }
  return history;
}

EvalResult evaluate(const SpikingNetwork& net, const Dataset& dataset,
                    const LifParams& params, std::size_t timesteps,
                    std::uint64_t seed, unsigned threads) {
  if (dataset.size() == 0) throw Error("evaluate: empty dataset");
  const LayerRange scope = hidden_scope(net);
  std::size_t scope_neurons = 0;
  for (std::size_t j = scope.first; j < scope.last; ++j)
    scope_neurons += net.layers[j].out_size();

  constexpr std::size_t kChunk = 64;
  const std::size_t n = dataset.size();
  const std::size_t nchunks = (n + kChunk - 1) / kChunk;
  struct Acc {
    std::size_t correct = 0;
    double spikes = 0.0;
    double loss = 0.0;
  };
  std::vector<Acc> accs(nchunks);

  parallel_for_chunks(nchunks, threads, [&](std::size_t c) {
    static thread_local ForwardRecord record;
    static thread_local std::vector<std::vector<double>> spikes;
    std::size_t lo = c * kChunk;
    std::size_t hi = std::min(n, lo + kChunk);
    for (std::size_t idx = lo; idx < hi; ++idx) {
      bernoulli_encode_into(dataset.images[idx], timesteps,
                            derive_seed(seed, stream::kEncodeEval, idx),
                            spikes);
      forward_pass(net, spikes, params, SpikeMode::kBinary, record);
      if (predict(record) == dataset.labels[idx]) ++accs[c].correct;
      if (scope_neurons > 0)
        accs[c].spikes += record_spike_sum(record, scope);
      accs[c].loss += rate_loss(record, dataset.one_hot(idx), timesteps);
    }
  });

  EvalResult result;
  double spikes = 0.0;
  std::size_t correct = 0;
  double loss = 0.0;
  for (const Acc& a : accs) {
    correct += a.correct;
    spikes += a.spikes;
    loss += a.loss;
  }
  result.accuracy = static_cast<double>(correct) / static_cast<double>(n);
  result.avg_spike_rate =
      scope_neurons > 0
          ? spikes / (static_cast<double>(n) *
                      static_cast<double>(scope_neurons) *
                      static_cast<double>(timesteps))
          : 0.0;
  result.loss = loss / static_cast<double>(n);
  return result;
}

}  // namespace snnc
