#include "snnc/lif.hpp"

#include <algorithm>
#include <cmath>

namespace snnc {

void LifParams::validate() const {
  if (!(decay >= 0.0 && decay <= 1.0))
    throw Error("LifParams: decay must be in [0,1]");
  if (!(u_th > 0.0)) throw Error("LifParams: u_th must be > 0");
  if (!(surrogate_width > 0.0))
    throw Error("LifParams: surrogate_width must be > 0");
}

double heaviside(double x) {
  if (!std::isfinite(x)) throw NumericError("heaviside: non-finite input");
  return x >= 0.0 ? 1.0 : 0.0;
}

double surrogate_grad(double u, const LifParams& params) {
  if (!std::isfinite(u)) throw NumericError("surrogate_grad: non-finite input");
  const double a = params.surrogate_width;
  const double lo = params.u_th - 0.5 * a;
  const double hi = params.u_th + 0.5 * a;
  return (u >= lo && u < hi) ? 1.0 / a : 0.0;
}

double spike_activation(double u, const LifParams& params, SpikeMode mode) {
  if (mode == SpikeMode::kBinary) return heaviside(u - params.u_th);
  const double a = params.surrogate_width;
  return std::clamp((u - params.u_th) / a + 0.5, 0.0, 1.0);
}

NeuronState lif_step(const NeuronState& state,
                     std::span<const double> weighted_input,
                     const LifParams& params, SpikeMode mode) {
  check_dims(state.u.size() == state.o.size(),
             "lif_step: state u/o length mismatch");
  check_dims(weighted_input.size() == state.u.size(),
             "lif_step: input length does not match state");
  NeuronState next;
  next.u.resize(state.size());
  next.o.resize(state.size());
  for (std::size_t i = 0; i < state.size(); ++i) {
    next.u[i] =
        lif_membrane_update(state.u[i], state.o[i], weighted_input[i],
                            params.decay);
    next.o[i] = spike_activation(next.u[i], params, mode);
  }
  return next;
}

}  // namespace snnc
