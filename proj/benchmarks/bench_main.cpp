// Microbenchmarks for the training hot paths. Build with
// -DSNNC_BUILD_BENCHMARKS=ON (default when google-benchmark is installed)
// and run build/benchmarks/snnc_benchmarks.

#include <benchmark/benchmark.h>

#include "snnc/admm.hpp"
#include "snnc/rng.hpp"
#include "snnc/stbp.hpp"

namespace {

using namespace snnc;

SpikingNetwork mlp() {
  SpikingNetwork net = SpikingNetwork::from_architecture("784-400-10");
  net.init_weights(1);
  return net;
}

std::vector<std::vector<double>> spike_train(std::size_t T, std::size_t n,
                                             double rate) {
  Rng rng(7);
  std::vector<std::vector<double>> s(T, std::vector<double>(n, 0.0));
  for (auto& frame : s)
    for (double& x : frame) x = rng.next_unit() < rate ? 1.0 : 0.0;
  return s;
}

void BM_ForwardPassMlp(benchmark::State& state) {
  SpikingNetwork net = mlp();
  LifParams params;
  auto input = spike_train(10, 784, 0.13);
  ForwardRecord record;
  for (auto _ : state) {
    forward_pass(net, input, params, SpikeMode::kBinary, record);
    benchmark::DoNotOptimize(record.layers.back().o[9][0]);
  }
}
BENCHMARK(BM_ForwardPassMlp);

void BM_BackwardPassMlp(benchmark::State& state) {
  SpikingNetwork net = mlp();
  LifParams params;
  auto input = spike_train(10, 784, 0.13);
  ForwardRecord record = forward_pass(net, input, params);
  std::vector<double> label(10, 0.0);
  label[3] = 1.0;
  BackwardOptions opt;
  opt.reg_scope = hidden_scope(net);
  for (auto _ : state) {
    Gradients g = backward_pass(net, record, label, params, opt);
    benchmark::DoNotOptimize(g.layers[0].v[0]);
  }
}
BENCHMARK(BM_BackwardPassMlp);

void BM_PruneProject(benchmark::State& state) {
  Tensor v({400, 784});
  Rng rng(3);
  for (double& x : v.v) x = rng.uniform(-1.0, 1.0);
  for (auto _ : state) {
    auto r = prune_project(v, 0.75);
    benchmark::DoNotOptimize(r.z.v[0]);
  }
}
BENCHMARK(BM_PruneProject);

void BM_QuantizeProject(benchmark::State& state) {
  Tensor v({400, 784});
  Rng rng(3);
  for (double& x : v.v) x = rng.uniform(-1.0, 1.0);
  QuantSpec spec{2, 3};
  for (auto _ : state) {
    auto r = quantize_project(v, spec);
    benchmark::DoNotOptimize(r.alpha);
  }
}
BENCHMARK(BM_QuantizeProject);

void BM_BernoulliEncode(benchmark::State& state) {
  Tensor image({784});
  Rng rng(5);
  for (double& x : image.v) x = rng.next_unit() * 0.5;
  std::vector<std::vector<double>> out;
  for (auto _ : state) {
    bernoulli_encode_into(image, 10, 11, out);
    benchmark::DoNotOptimize(out[9][0]);
  }
}
BENCHMARK(BM_BernoulliEncode);

}  // namespace

BENCHMARK_MAIN();
