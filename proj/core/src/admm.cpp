#include "snnc/admm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace snnc {

PruneResult prune_project(const Tensor& v, double sparsity) {
  if (!(sparsity >= 0.0 && sparsity < 1.0))
    throw Error("prune_project: sparsity must be in [0,1)");
  const std::size_t n = v.size();
  const std::size_t keep = static_cast<std::size_t>(
      std::ceil((1.0 - sparsity) * static_cast<double>(n)));

  PruneResult result;
  result.z = Tensor(v.shape);
  result.mask = Tensor(v.shape);
  if (keep == n) {
    result.z = v;
    std::fill(result.mask.v.begin(), result.mask.v.end(), 1.0);
    return result;
  }

  // Sort indices by (magnitude desc, index asc) so cutoff ties keep the
  // lower flat index.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::nth_element(order.begin(), order.begin() + keep, order.end(),
                   [&](std::size_t a, std::size_t b) {
                     double ma = std::abs(v.v[a]), mb = std::abs(v.v[b]);
                     if (ma != mb) return ma > mb;
                     return a < b;
                   });
  for (std::size_t k = 0; k < keep; ++k) {
    std::size_t i = order[k];
    result.z.v[i] = v.v[i];
    result.mask.v[i] = 1.0;
  }
  return result;
}

void prune_inplace(Tensor& w, double sparsity) {
  if (!(sparsity >= 0.0 && sparsity < 1.0))
    throw Error("prune_inplace: sparsity must be in [0,1)");
  const std::size_t n = w.size();
  const std::size_t keep = static_cast<std::size_t>(
      std::ceil((1.0 - sparsity) * static_cast<double>(n)));
  if (keep == n) return;

  static thread_local std::vector<double> mags;
  mags.resize(n);
  for (std::size_t i = 0; i < n; ++i) mags[i] = std::abs(w.v[i]);
  std::nth_element(mags.begin(), mags.begin() + static_cast<long>(keep) - 1,
                   mags.end(), std::greater<double>());
  const double cutoff = mags[keep - 1];

  std::size_t above = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (std::abs(w.v[i]) > cutoff) ++above;
  std::size_t at_cutoff_slots = keep - above;  // lowest indices win ties
  for (std::size_t i = 0; i < n; ++i) {
    double a = std::abs(w.v[i]);
    if (a > cutoff) continue;
    if (a == cutoff && at_cutoff_slots > 0) {
      --at_cutoff_slots;
      continue;
    }
    w.v[i] = 0.0;
  }
}

std::vector<double> quant_levels(int bits) {
  if (bits < 1) throw Error("quant_levels: bitwidth must be >= 1");
  std::vector<double> levels;
  levels.push_back(0.0);
  double p = 1.0;
  for (int k = 0; k < bits; ++k) {
    levels.push_back(p);
    levels.push_back(-p);
    p *= 2.0;
  }
  return levels;
}

double nearest_level(double x, int bits) {
  // Midpoint thresholds of {0, 1, 2, 4, ...}: 0.5 between 0 and 1, then
  // 1.5 * 2^k between 2^k and 2^{k+1}. <= keeps ties at the
  // smaller-magnitude level.
  double ax = std::abs(x);
  if (ax <= 0.5) return 0.0;
  double p = 1.0;
  for (int k = 0; k + 1 < bits && ax > 1.5 * p; ++k) p *= 2.0;
  return x < 0.0 ? -p : p;
}

QuantResult quantize_project(const Tensor& v, const QuantSpec& spec,
                             QuantTrace* trace) {
  if (spec.iterations < 1)
    throw Error("quantize_project: iterations must be >= 1");
  if (spec.bits < 1) throw Error("quantize_project: bitwidth must be >= 1");

  QuantResult result;
  result.z = Tensor(v.shape);
  result.alpha = 1.0;

  double vmax = 0.0;
  for (double x : v.v) vmax = std::max(vmax, std::abs(x));
  const double top_level = std::pow(2.0, spec.bits - 1);

  std::vector<double> ztilde(v.size(), 0.0);
  bool have_prev = false;
  for (int it = 0; it < spec.iterations; ++it) {
    double dot_vz = 0.0, dot_zz = 0.0;
    bool changed = false;
    auto project = [&] {
      // four independent accumulator lanes keep the dot products off the
      // FP-add latency chain
      double vz[4] = {0, 0, 0, 0}, zz[4] = {0, 0, 0, 0};
      bool moved = false;
      const std::size_t n = v.size();
      for (std::size_t i = 0; i < n; ++i) {
        double level = nearest_level(v.v[i] / result.alpha, spec.bits);
        moved = moved | (level != ztilde[i]);
        ztilde[i] = level;
        vz[i & 3] += v.v[i] * level;
        zz[i & 3] += level * level;
      }
      dot_vz = (vz[0] + vz[1]) + (vz[2] + vz[3]);
      dot_zz = (zz[0] + zz[1]) + (zz[2] + zz[3]);
      changed = moved;
    };
    project();
    if (dot_zz == 0.0 && vmax > 0.0) {
      // The current scale is so large that every element fell to level 0.
      // Rescale so the largest element hits the top level and redo; only a
      // genuinely all-zero input stays degenerate.
      result.alpha = vmax / top_level;
      project();
    }
    if (dot_zz == 0.0) {
      // Everything collapsed to level 0: keep the previous alpha and stop.
      result.degenerate = true;
      std::fill(result.z.v.begin(), result.z.v.end(), 0.0);
      if (trace) {
        trace->residuals.push_back(l2_norm(v));
        trace->alphas.push_back(result.alpha);
      }
      return result;
    }
    result.alpha = dot_vz / dot_zz;

    bool unchanged = have_prev && !changed;
    if (trace) {
      double res = 0.0;
      for (std::size_t i = 0; i < v.size(); ++i) {
        double d = v.v[i] - result.alpha * ztilde[i];
        res += d * d;
      }
      trace->residuals.push_back(std::sqrt(res));
      trace->alphas.push_back(result.alpha);
      if (unchanged && trace->fixed_point_iteration == 0)
        trace->fixed_point_iteration = static_cast<std::size_t>(it);
    }
    if (unchanged) break;  // alpha is already the refit for this assignment
    have_prev = true;
  }
  for (std::size_t i = 0; i < v.size(); ++i)
    result.z.v[i] = result.alpha * ztilde[i];
  return result;
}

double augmented_loss(double base_loss, std::span<const double> w,
                      std::span<const double> z,
                      std::span<const double> ytilde, double rho) {
  check_dims(w.size() == z.size() && w.size() == ytilde.size(),
             "augmented_loss: shape mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    double d = w[i] - z[i] + ytilde[i];
    sum += d * d;
  }
  return base_loss + 0.5 * rho * sum;
}

void multiplier_update(Tensor& ytilde, const Tensor& w, const Tensor& z) {
  check_dims(ytilde.same_shape(w) && ytilde.same_shape(z),
             "multiplier_update: shape mismatch");
  for (std::size_t i = 0; i < ytilde.size(); ++i)
    ytilde.v[i] += w.v[i] - z.v[i];
}

std::vector<std::size_t> default_compressed_layers(const SpikingNetwork& net) {
  std::vector<std::size_t> idx;
  if (net.num_layers() >= 3) {
    for (std::size_t j = 1; j + 1 < net.num_layers(); ++j) idx.push_back(j);
  } else {
    for (std::size_t j = 0; j < net.num_layers(); ++j) idx.push_back(j);
  }
  return idx;
}

namespace {

std::vector<std::size_t> compressed_layers(const SpikingNetwork& net,
                                           const CompressOptions& options) {
  return options.layer_indices.empty() ? default_compressed_layers(net)
                                       : options.layer_indices;
}

std::size_t count_level_violations(const Tensor& t, int bits, double alpha) {
  std::size_t bad = 0;
  for (double x : t.v)
    if (alpha == 0.0 || x != alpha * nearest_level(x / alpha, bits)) ++bad;
  return bad;
}

std::size_t count_support_violations(const Tensor& t, std::size_t keep) {
  std::size_t nonzero = 0;
  for (double x : t.v)
    if (x != 0.0) ++nonzero;
  return nonzero > keep ? nonzero - keep : 0;
}

// Proximal hook shared by all Step-I phases: adds rho * (W - Z + Ytilde) to
// the gradient of every compressed layer.
TrainHooks proximal_hooks(std::vector<AdmmState>& states) {
  TrainHooks hooks;
  hooks.grad_term = [&states](const SpikingNetwork& net, Gradients& g) {
    for (const AdmmState& st : states) {
      const Tensor& w = net.layers[st.layer_index].weights;
      Tensor& gw = g.layers[st.layer_index];
      for (std::size_t i = 0; i < w.size(); ++i)
        gw.v[i] += st.rho * (w.v[i] - st.z.v[i] + st.ytilde.v[i]);
    }
  };
  return hooks;
}

TrainConfig one_epoch(const TrainConfig& config) {
  TrainConfig c = config;
  c.epochs = 1;
  return c;
}

void append_history(TrainHistory& all, const TrainHistory& part) {
  all.epochs.insert(all.epochs.end(), part.epochs.begin(), part.epochs.end());
}

}  // namespace

TrainHistory admm_prune(SpikingNetwork& net, const Dataset& dataset,
                        const LifParams& params, const TrainConfig& config,
                        double sparsity, const CompressOptions& options) {
  auto layers = compressed_layers(net, options);
  TrainHistory history;
  std::size_t epoch = options.epoch_offset;

  // Step I: ADMM retraining. Z starts as the projection of the pretrained
  // weights, Ytilde at zero; both update once per epoch of W-retraining.
  std::vector<AdmmState> states;
  for (std::size_t j : layers) {
    AdmmState st;
    st.layer_index = j;
    st.rho = options.rho;
    st.z = prune_project(net.layers[j].weights, sparsity).z;
    st.ytilde = Tensor(net.layers[j].weights.shape);
    states.push_back(std::move(st));
  }
  TrainHooks hooks = proximal_hooks(states);
  for (std::size_t e = 0; e < options.admm_epochs; ++e, ++epoch) {
    append_history(history,
                   train(net, dataset, params, one_epoch(config), &hooks,
                         epoch));
    for (AdmmState& st : states) {
      const Tensor& w = net.layers[st.layer_index].weights;
      Tensor v = w;
      for (std::size_t i = 0; i < v.size(); ++i) v.v[i] += st.ytilde.v[i];
      st.z = prune_project(v, sparsity).z;
      multiplier_update(st.ytilde, w, st.z);
      if (options.diag) {
        Tensor diff = w;
        for (std::size_t i = 0; i < diff.size(); ++i) diff.v[i] -= st.z.v[i];
        std::size_t keep = static_cast<std::size_t>(std::ceil(
            (1.0 - sparsity) * static_cast<double>(w.size())));
        options.diag({epoch, st.layer_index, l2_norm(diff), std::nullopt,
                      count_support_violations(st.z, keep)});
      }
    }
  }

  // Step II: hard-pruning retraining; the magnitude projection re-runs after
  // every weight update so the support may still drift, but the exit is
  // exactly feasible.
  TrainHooks hard;
  hard.post_step = [&layers, sparsity](SpikingNetwork& n) {
    for (std::size_t j : layers) prune_inplace(n.layers[j].weights, sparsity);
  };
  hard.post_step(net);
  for (std::size_t e = 0; e < options.hard_epochs; ++e, ++epoch)
    append_history(history,
                   train(net, dataset, params, one_epoch(config), &hard,
                         epoch));

  for (std::size_t j : layers)
    net.layers[j].prune_mask =
        prune_project(net.layers[j].weights, sparsity).mask;
  return history;
}

TrainHistory admm_quantize(SpikingNetwork& net, const Dataset& dataset,
                           const LifParams& params, const TrainConfig& config,
                           const QuantSpec& spec,
                           const CompressOptions& options) {
  auto layers = compressed_layers(net, options);
  TrainHistory history;
  std::size_t epoch = options.epoch_offset;

  std::vector<AdmmState> states;
  for (std::size_t j : layers) {
    AdmmState st;
    st.layer_index = j;
    st.rho = options.rho;
    st.z = quantize_project(net.layers[j].weights, spec).z;
    st.ytilde = Tensor(net.layers[j].weights.shape);
    states.push_back(std::move(st));
  }
  TrainHooks hooks = proximal_hooks(states);
  for (std::size_t e = 0; e < options.admm_epochs; ++e, ++epoch) {
    append_history(history,
                   train(net, dataset, params, one_epoch(config), &hooks,
                         epoch));
    for (AdmmState& st : states) {
      const Tensor& w = net.layers[st.layer_index].weights;
      Tensor v = w;
      for (std::size_t i = 0; i < v.size(); ++i) v.v[i] += st.ytilde.v[i];
      QuantResult q = quantize_project(v, spec);
      st.z = std::move(q.z);
      multiplier_update(st.ytilde, w, st.z);
      if (options.diag) {
        Tensor diff = w;
        for (std::size_t i = 0; i < diff.size(); ++i) diff.v[i] -= st.z.v[i];
        options.diag({epoch, st.layer_index, l2_norm(diff), q.alpha,
                      count_level_violations(st.z, spec.bits, q.alpha)});
      }
    }
  }

  // Step II: hard-quantization retraining. The projection runs once per
  // retraining pass, not per mini-batch update: a single SGD step moves a
  // weight by far less than half a level gap, so snapping after every
  // update would erase nearly all progress. alpha is refit by every
  // projection call.
  auto snap = [&layers, spec](SpikingNetwork& n) {
    for (std::size_t j : layers) {
      QuantResult q = quantize_project(n.layers[j].weights, spec);
      n.layers[j].weights = std::move(q.z);
      n.layers[j].quant_alpha = q.alpha;
      n.layers[j].quant_bits = spec.bits;
    }
  };
  snap(net);
  for (std::size_t e = 0; e < options.hard_epochs; ++e, ++epoch) {
    append_history(history,
                   train(net, dataset, params, one_epoch(config), nullptr,
                         epoch));
    snap(net);
  }
  return history;
}

TrainHistory admm_joint(SpikingNetwork& net, const Dataset& dataset,
                        const LifParams& params, const TrainConfig& config,
                        double sparsity, const QuantSpec& spec,
                        const CompressOptions& options) {
  auto layers = compressed_layers(net, options);

  // Step I: full ADMM pruning; its exit stores the masks on the layers, and
  // sgd_step keeps masked weights at zero from here on.
  TrainHistory history =
      admm_prune(net, dataset, params, config, sparsity, options);
  std::size_t epoch = options.epoch_offset + options.admm_epochs +
                      options.hard_epochs;

  // Step II: ADMM retraining for quantization on the pruned support.
  std::vector<AdmmState> states;
  for (std::size_t j : layers) {
    AdmmState st;
    st.layer_index = j;
    st.rho = options.rho;
    st.z = quantize_project(net.layers[j].weights, spec).z;
    st.ytilde = Tensor(net.layers[j].weights.shape);
    states.push_back(std::move(st));
  }
  TrainHooks hooks = proximal_hooks(states);
  for (std::size_t e = 0; e < options.admm_epochs; ++e, ++epoch) {
    append_history(history,
                   train(net, dataset, params, one_epoch(config), &hooks,
                         epoch));
    for (AdmmState& st : states) {
      const Tensor& w = net.layers[st.layer_index].weights;
      Tensor v = w;
      for (std::size_t i = 0; i < v.size(); ++i) v.v[i] += st.ytilde.v[i];
      QuantResult q = quantize_project(v, spec);
      st.z = std::move(q.z);
      multiplier_update(st.ytilde, w, st.z);
      if (options.diag) {
        Tensor diff = w;
        for (std::size_t i = 0; i < diff.size(); ++i) diff.v[i] -= st.z.v[i];
        options.diag({epoch, st.layer_index, l2_norm(diff), q.alpha,
                      count_level_violations(st.z, spec.bits, q.alpha)});
      }
    }
  }

  // Step III: hard retraining under mask + quantization. The mask is
  // enforced at every update by sgd_step (the layers carry it); the
  // quantization snap runs once per pass, as in Step II of the
  // quantization-only path.
  auto snap = [&layers, spec](SpikingNetwork& n) {
    for (std::size_t j : layers) {
      Layer& l = n.layers[j];
      QuantResult q = quantize_project(l.weights, spec);
      l.weights = std::move(q.z);
      if (l.prune_mask)
        for (std::size_t i = 0; i < l.weights.size(); ++i)
          if (l.prune_mask->v[i] == 0.0) l.weights.v[i] = 0.0;
      l.quant_alpha = q.alpha;
      l.quant_bits = spec.bits;
    }
  };
  snap(net);
  for (std::size_t e = 0; e < options.hard_epochs; ++e, ++epoch) {
    append_history(history,
                   train(net, dataset, params, one_epoch(config), nullptr,
                         epoch));
    snap(net);
  }
  return history;
}

TrainHistory hard_compress(SpikingNetwork& net, const Dataset& dataset,
                           const LifParams& params, const TrainConfig& config,
                           std::optional<double> sparsity,
                           std::optional<QuantSpec> spec,
                           const CompressOptions& options) {
  if (!sparsity && !spec)
    throw Error("hard_compress: need a sparsity or a quantization spec");
  auto layers = compressed_layers(net, options);

  // Projection granularities mirror the ADMM Step-II phases: magnitude
  // re-zeroing after every update, quantization snapping once per pass.
  TrainHooks hard;
  if (sparsity)
    hard.post_step = [&layers, sparsity](SpikingNetwork& n) {
      for (std::size_t j : layers) prune_inplace(n.layers[j].weights, *sparsity);
    };
  auto snap = [&layers, spec](SpikingNetwork& n) {
    if (!spec) return;
    for (std::size_t j : layers) {
      Layer& l = n.layers[j];
      QuantResult q = quantize_project(l.weights, *spec);
      l.weights = std::move(q.z);
      l.quant_alpha = q.alpha;
      l.quant_bits = spec->bits;
    }
  };
  if (hard.post_step) hard.post_step(net);
  snap(net);

  TrainHistory history;
  std::size_t epoch = options.epoch_offset;
  for (std::size_t e = 0; e < options.hard_epochs; ++e, ++epoch) {
    append_history(history,
                   train(net, dataset, params, one_epoch(config),
                         hard.post_step ? &hard : nullptr, epoch));
    snap(net);
  }

  if (sparsity)
    for (std::size_t j : layers)
      net.layers[j].prune_mask =
          prune_project(net.layers[j].weights, *sparsity).mask;
  return history;
}

}  // namespace snnc
