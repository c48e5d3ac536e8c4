#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "snnc/errors.hpp"

namespace snnc {

// Iterative LIF neuron constants. Resting and reset potentials are fixed at
// zero and the integration window is a single timestep, so the whole neuron
// is described by three numbers.
struct LifParams {
  double decay = 0.25;           // membrane potential decay factor e^{-dt/tau}, in [0,1]
  double u_th = 0.2;             // firing threshold
  double surrogate_width = 0.5;  // boxcar width a of the pseudo-derivative

  void validate() const;
};

// Membrane potentials and spike outputs of one neuron layer at one timestep.
struct NeuronState {
  std::vector<double> u;
  std::vector<double> o;  // in {0,1} for binary spikes

  std::size_t size() const { return u.size(); }
};

// Spike nonlinearity selector. kBinary is the real model; kRamp replaces the
// step with the piecewise-linear ramp whose exact derivative is the boxcar,
// making the forward pass continuous so gradients can be checked against
// finite differences.
enum class SpikeMode { kBinary, kRamp };

// H(x) = 1 for x >= 0, else 0. Throws NumericError on non-finite input.
double heaviside(double x);

// Boxcar pseudo-derivative of the spike function: 1/a inside the half-open
// window [u_th - a/2, u_th + a/2), 0 outside.
double surrogate_grad(double u, const LifParams& params);

// Spike output for a membrane potential under the selected mode.
// kBinary: H(u - u_th). kRamp: clamp((u - u_th)/a + 1/2, 0, 1).
double spike_activation(double u, const LifParams& params, SpikeMode mode);

// Scalar core of the iterative LIF update:
//   u' = decay * u * (1 - o) + input,   o' = spike(u' - u_th)
// The (1 - o) factor implements reset-to-zero after a spike.
inline double lif_membrane_update(double u, double o, double input,
                                  double decay) {
  return decay * u * (1.0 - o) + input;
}

// One timestep for a whole layer. weighted_input is the dendritic sum
// sum_j w_ij * o_j for the current timestep.
NeuronState lif_step(const NeuronState& state,
                     std::span<const double> weighted_input,
                     const LifParams& params,
                     SpikeMode mode = SpikeMode::kBinary);

}  // namespace snnc
