#include "snnc/network.hpp"

#include <cctype>
#include <cmath>
#include <sstream>

#include "snnc/rng.hpp"

namespace snnc {

namespace {

Shape3 conv_out_shape(const Shape3& in, std::size_t oc, std::size_t k,
                      std::size_t stride) {
  if (in.h < k || in.w < k)
    throw Error("conv layer kernel larger than its input");
  // valid padding
  return Shape3{oc, (in.h - k) / stride + 1, (in.w - k) / stride + 1};
}

Layer make_dense(const Shape3& in, std::size_t out) {
  Layer l;
  l.kind = LayerKind::kDense;
  l.in_shape = {in.count(), 1, 1};
  l.out_shape = {out, 1, 1};
  l.weights = Tensor({out, in.count()});
  return l;
}

Layer make_conv(const Shape3& in, std::size_t oc, std::size_t k,
                std::size_t stride) {
  Layer l;
  l.kind = LayerKind::kConv2d;
  l.in_shape = in;
  l.stride = stride;
  l.out_shape = conv_out_shape(in, oc, k, stride);
  l.weights = Tensor({oc, in.c, k, k});
  return l;
}

}  // namespace

SpikingNetwork SpikingNetwork::from_architecture(const std::string& arch) {
  std::vector<std::string> tokens;
  std::stringstream ss(arch);
  std::string tok;
  while (std::getline(ss, tok, '-'))
    if (!tok.empty()) tokens.push_back(tok);
  if (tokens.size() < 2)
    throw ConfigError("architecture needs an input and at least one layer: " +
                      arch);

  auto parse_num = [&](const std::string& s) -> std::size_t {
    try {
      std::size_t pos = 0;
      unsigned long n = std::stoul(s, &pos);
      if (pos != s.size() || n == 0)
        throw ConfigError("bad architecture token: " + s);
      return n;
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      throw ConfigError("bad architecture token: " + s);
    }
  };

  SpikingNetwork net;
  // input: "784" or "1x28x28"
  if (tokens[0].find('x') != std::string::npos) {
    std::size_t c, h, w;
    char x1, x2;
    std::stringstream in(tokens[0]);
    if (!(in >> c >> x1 >> h >> x2 >> w) || x1 != 'x' || x2 != 'x')
      throw ConfigError("bad input shape: " + tokens[0]);
    net.input_shape = {c, h, w};
  } else {
    net.input_shape = {parse_num(tokens[0]), 1, 1};
  }

  Shape3 cur = net.input_shape;
  for (std::size_t i = 1; i < tokens.size(); ++i) {
    const std::string& t = tokens[i];
    auto cpos = t.find('C');
    if (cpos != std::string::npos) {
      auto spos = t.find('S');
      if (spos == std::string::npos || spos < cpos)
        throw ConfigError("bad conv token (want <out>C<k>S<s>): " + t);
      std::size_t oc = parse_num(t.substr(0, cpos));
      std::size_t k = parse_num(t.substr(cpos + 1, spos - cpos - 1));
      std::size_t s = parse_num(t.substr(spos + 1));
      net.layers.push_back(make_conv(cur, oc, k, s));
    } else {
      net.layers.push_back(make_dense(cur, parse_num(t)));
    }
    cur = net.layers.back().out_shape;
  }
  return net;
}

std::string SpikingNetwork::architecture() const {
  std::ostringstream out;
  if (input_shape.h == 1 && input_shape.w == 1)
    out << input_shape.c;
  else
    out << input_shape.c << 'x' << input_shape.h << 'x' << input_shape.w;
  for (const Layer& l : layers) {
    out << '-';
    if (l.kind == LayerKind::kDense)
      out << l.out_shape.c;
    else
      out << l.out_shape.c << 'C' << l.weights.shape[2] << 'S' << l.stride;
  }
  return out.str();
}

void SpikingNetwork::init_weights(std::uint64_t seed) {
  for (std::size_t j = 0; j < layers.size(); ++j) {
    Layer& l = layers[j];
    std::size_t fan_in = l.kind == LayerKind::kDense
                             ? l.in_size()
                             : l.weights.shape[1] * l.weights.shape[2] *
                                   l.weights.shape[3];
    double k = std::sqrt(3.0 / static_cast<double>(fan_in));
    Rng rng(derive_seed(seed, stream::kWeightInit, j));
    for (double& w : l.weights.v) w = rng.uniform(-k, k);
  }
}

LayerRange hidden_scope(const SpikingNetwork& net) {
  // record.layers[j] holds neuron layer j+1; hidden layers are 1..L-1,
  // i.e. record indices [0, L-1).
  return LayerRange{0, net.num_layers() == 0 ? 0 : net.num_layers() - 1};
}

std::vector<double> dense_integrate(const Layer& layer,
                                    std::span<const double> spikes) {
  check_dims(spikes.size() == layer.in_size(),
             "dense_integrate: input length mismatch");
  const std::size_t out = layer.out_size();
  const std::size_t in = layer.in_size();
  std::vector<double> result(out, 0.0);

  // Binary spikes make this a row gather: collect active inputs once, then
  // sum those columns per output row in ascending index order (identical,
  // bit for bit, to the full sum including the zero terms).
  static thread_local std::vector<std::size_t> active;
  active.clear();
  bool binary = true;
  for (std::size_t j = 0; j < in; ++j) {
    if (spikes[j] != 0.0) {
      active.push_back(j);
      if (spikes[j] != 1.0) binary = false;
    }
  }
  const double* w = layer.weights.data();
  if (binary) {
    for (std::size_t i = 0; i < out; ++i) {
      const double* row = w + i * in;
      double acc = 0.0;
      for (std::size_t j : active) acc += row[j];
      result[i] = acc;
    }
  } else {  // ramp mode: fractional activations
    for (std::size_t i = 0; i < out; ++i) {
      const double* row = w + i * in;
      double acc = 0.0;
      for (std::size_t j : active) acc += row[j] * spikes[j];
      result[i] = acc;
    }
  }
  return result;
}

std::vector<double> conv2d_integrate(const Layer& layer,
                                     std::span<const double> spikes) {
  check_dims(spikes.size() == layer.in_size(),
             "conv2d_integrate: input shape mismatch");
  const Shape3& is = layer.in_shape;
  const Shape3& os = layer.out_shape;
  const std::size_t kh = layer.weights.shape[2];
  const std::size_t kw = layer.weights.shape[3];
  const std::size_t stride = layer.stride;
  std::vector<double> result(os.count(), 0.0);
  const double* w = layer.weights.data();

  for (std::size_t oc = 0; oc < os.c; ++oc) {
    for (std::size_t oy = 0; oy < os.h; ++oy) {
      for (std::size_t ox = 0; ox < os.w; ++ox) {
        double acc = 0.0;
        for (std::size_t ic = 0; ic < is.c; ++ic) {
          for (std::size_t ky = 0; ky < kh; ++ky) {
            for (std::size_t kx = 0; kx < kw; ++kx) {
              std::size_t iy = oy * stride + ky;
              std::size_t ix = ox * stride + kx;
              acc += w[((oc * is.c + ic) * kh + ky) * kw + kx] *
                     spikes[(ic * is.h + iy) * is.w + ix];
            }
          }
        }
        result[(oc * os.h + oy) * os.w + ox] = acc;
      }
    }
  }
  return result;
}

std::vector<double> integrate(const Layer& layer,
                              std::span<const double> spikes) {
  return layer.kind == LayerKind::kDense ? dense_integrate(layer, spikes)
                                         : conv2d_integrate(layer, spikes);
}

// The sweep below is layer-major: layer j's whole time series is finished
// before layer j+1 starts. Eq-wise this is the same schedule as the
// per-timestep depth sweep (u^{t,n} needs only u^{t-1,n}, o^{t-1,n} and
// o^{t,n-1}, all complete by then) but each dense weight row is reused
// across all T timesteps while it is cache-hot.
void forward_pass(const SpikingNetwork& net,
                  const std::vector<std::vector<double>>& input_spikes,
                  const LifParams& params, SpikeMode mode, ForwardRecord& out) {
  const std::size_t T = input_spikes.size();
  for (const auto& frame : input_spikes)
    check_dims(frame.size() == net.input_shape.count(),
               "forward_pass: input frame size mismatch");
  out.input = input_spikes;
  out.layers.resize(net.num_layers());
  for (std::size_t j = 0; j < net.num_layers(); ++j) {
    out.layers[j].u.assign(T, std::vector<double>(net.layers[j].out_size()));
    out.layers[j].o.assign(T, std::vector<double>(net.layers[j].out_size()));
  }

  static thread_local std::vector<std::vector<double>> integ;
  static thread_local std::vector<std::vector<std::size_t>> active;

  for (std::size_t j = 0; j < net.num_layers(); ++j) {
    const Layer& layer = net.layers[j];
    const auto& frames = j == 0 ? out.input : out.layers[j - 1].o;
    integ.assign(T, std::vector<double>(layer.out_size()));

    if (layer.kind == LayerKind::kDense) {
      const std::size_t in = layer.in_size();
      active.assign(T, {});
      bool binary = true;
      for (std::size_t t = 0; t < T; ++t)
        for (std::size_t k = 0; k < in; ++k)
          if (frames[t][k] != 0.0) {
            active[t].push_back(k);
            if (frames[t][k] != 1.0) binary = false;
          }
      // Four rows per pass: four independent accumulator chains instead of
      // one latency-bound chain, with each row still summed in ascending
      // input order.
      const double* w = layer.weights.data();
      const std::size_t out = layer.out_size();
      std::size_t i = 0;
      for (; i + 4 <= out; i += 4) {
        const double* r0 = w + i * in;
        const double* r1 = r0 + in;
        const double* r2 = r1 + in;
        const double* r3 = r2 + in;
        for (std::size_t t = 0; t < T; ++t) {
          double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
          if (binary) {
            for (std::size_t k : active[t]) {
              a0 += r0[k];
              a1 += r1[k];
              a2 += r2[k];
              a3 += r3[k];
            }
          } else {
            for (std::size_t k : active[t]) {
              double f = frames[t][k];
              a0 += r0[k] * f;
              a1 += r1[k] * f;
              a2 += r2[k] * f;
              a3 += r3[k] * f;
            }
          }
          integ[t][i] = a0;
          integ[t][i + 1] = a1;
          integ[t][i + 2] = a2;
          integ[t][i + 3] = a3;
        }
      }
      for (; i < out; ++i) {
        const double* row = w + i * in;
        for (std::size_t t = 0; t < T; ++t) {
          double acc = 0.0;
          if (binary) {
            for (std::size_t k : active[t]) acc += row[k];
          } else {
            for (std::size_t k : active[t]) acc += row[k] * frames[t][k];
          }
          integ[t][i] = acc;
        }
      }
    } else {
      for (std::size_t t = 0; t < T; ++t)
        integ[t] = conv2d_integrate(layer, frames[t]);
    }

    for (std::size_t t = 0; t < T; ++t) {
      auto& u = out.layers[j].u[t];
      auto& o = out.layers[j].o[t];
      for (std::size_t i = 0; i < layer.out_size(); ++i) {
        double u_prev = t == 0 ? 0.0 : out.layers[j].u[t - 1][i];
        double o_prev = t == 0 ? 0.0 : out.layers[j].o[t - 1][i];
        u[i] = lif_membrane_update(u_prev, o_prev, integ[t][i], params.decay);
        o[i] = spike_activation(u[i], params, mode);
      }
    }
  }
}

ForwardRecord forward_pass(const SpikingNetwork& net,
                           const std::vector<std::vector<double>>& input_spikes,
                           const LifParams& params, SpikeMode mode) {
  ForwardRecord record;
  forward_pass(net, input_spikes, params, mode, record);
  return record;
}

void bernoulli_encode_into(const Tensor& image, std::size_t timesteps,
                           std::uint64_t rng_seed,
                           std::vector<std::vector<double>>& out) {
  for (double p : image.v)
    if (!(p >= 0.0 && p <= 1.0))
      throw Error("bernoulli_encode: pixel outside [0,1]");
  Rng rng(rng_seed);
  out.assign(timesteps, std::vector<double>(image.size()));
  for (std::size_t t = 0; t < timesteps; ++t)
    for (std::size_t i = 0; i < image.size(); ++i)
      out[t][i] = rng.next_unit() < image.v[i] ? 1.0 : 0.0;
}

std::vector<std::vector<double>> bernoulli_encode(const Tensor& image,
                                                  std::size_t timesteps,
                                                  std::uint64_t rng_seed) {
  std::vector<std::vector<double>> train;
  bernoulli_encode_into(image, timesteps, rng_seed, train);
  return train;
}

double record_spike_sum(const ForwardRecord& record, LayerRange scope) {
  double total = 0.0;
  for (std::size_t j = scope.first; j < scope.last; ++j)
    for (const auto& frame : record.layers[j].o)
      for (double s : frame) total += s;
  return total;
}

std::size_t scope_neuron_count(const ForwardRecord& record, LayerRange scope) {
  std::size_t n = 0;
  for (std::size_t j = scope.first; j < scope.last; ++j)
    if (!record.layers[j].o.empty()) n += record.layers[j].o[0].size();
  return n;
}

SpikeStats measure_spike_rate(const ForwardRecord& record, LayerRange scope) {
  if (scope.count() == 0 || record.timesteps() == 0)
    throw Error("measure_spike_rate: empty scope");
  const double T = static_cast<double>(record.timesteps());
  SpikeStats stats;
  double total = 0.0;
  for (std::size_t j = scope.first; j < scope.last; ++j) {
    double layer_sum = 0.0;
    for (const auto& frame : record.layers[j].o)
      for (double s : frame) layer_sum += s;
    std::size_t width = record.layers[j].o[0].size();
    stats.per_layer_rate.push_back(layer_sum /
                                   (static_cast<double>(width) * T));
    total += layer_sum;
  }
  std::size_t neurons = scope_neuron_count(record, scope);
  stats.avg_rate = total / (static_cast<double>(neurons) * T);
  stats.total_spikes = static_cast<std::uint64_t>(total + 0.5);
  return stats;
}

}  // namespace snnc
