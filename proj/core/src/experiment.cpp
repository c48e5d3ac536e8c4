#include "snnc/experiment.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "snnc/rng.hpp"

namespace snnc {

namespace fs = std::filesystem;

ExperimentPaths::ExperimentPaths(const std::string& dir)
    : out_dir(dir),
      baseline_ckpt(dir + "/baseline.ckpt"),
      model_ckpt(dir + "/model.ckpt"),
      history_csv(dir + "/history.csv"),
      admm_diag_csv(dir + "/admm_diag.csv"),
      report_csv(dir + "/report.csv") {}

Dataset load_split(const ExperimentConfig& config, const std::string& split) {
  Dataset d;
  if (config.dataset == "mnist") {
    std::string prefix = config.data_dir + "/";
    if (split == "train")
      d = load_idx(prefix + "train-images-idx3-ubyte",
                   prefix + "train-labels-idx1-ubyte");
    else
      d = load_idx(prefix + "t10k-images-idx3-ubyte",
                   prefix + "t10k-labels-idx1-ubyte");
  } else {
    std::size_t n = split == "train" ? config.synthetic_samples
                                     : std::max<std::size_t>(
                                           2, config.synthetic_samples / 4);
    d = synthetic_two_class(
        n, derive_seed(config.seed, stream::kSynthetic,
                       split == "train" ? 0 : 1));
  }
  d.split = split;
  std::size_t limit =
      split == "train" ? config.train_limit : config.test_limit;
  if (limit > 0) d = d.head(limit);
  return d;
}

TrainConfig train_config_for(const ExperimentConfig& config,
                             std::size_t epochs, double lambda) {
  TrainConfig t;
  t.timesteps = config.timesteps;
  t.epochs = epochs;
  t.batch_size = config.batch_size;
  t.learning_rate = config.learning_rate;
  t.lambda = lambda;
  t.seed = config.seed;
  t.threads = config.threads;
  return t;
}

std::vector<std::size_t> compression_layers(const ExperimentConfig& config,
                                            const SpikingNetwork& net) {
  switch (config.scope) {
    case CompressScope::kAll: {
      std::vector<std::size_t> all(net.num_layers());
      for (std::size_t j = 0; j < all.size(); ++j) all[j] = j;
      return all;
    }
    case CompressScope::kInterior: {
      std::vector<std::size_t> interior;
      for (std::size_t j = 1; j + 1 < net.num_layers(); ++j)
        interior.push_back(j);
      if (interior.empty())
        throw ConfigError("scope=interior but the network has no interior");
      return interior;
    }
    case CompressScope::kAuto:
      return default_compressed_layers(net);
  }
  return {};
}

namespace {

void append_history_csv(const std::string& path, const TrainHistory& history) {
  bool fresh = !fs::exists(path);
  std::ofstream out(path, std::ios::app);
  if (!out) throw Error("cannot open " + path);
  if (fresh) out << "epoch,split,loss,accuracy,avg_spike_rate\n";
  char buf[160];
  for (const EpochStats& e : history.epochs) {
    std::snprintf(buf, sizeof(buf), "%zu,%s,%.8f,%.6f,%.6f\n", e.epoch,
                  e.split.c_str(), e.loss, e.accuracy, e.avg_spike_rate);
    out << buf;
  }
}

void append_test_row(const std::string& path, std::size_t epoch,
                     const EvalResult& eval) {
  TrainHistory h;
  EpochStats row;
  row.epoch = epoch;
  row.split = "test";
  row.loss = eval.loss;
  row.accuracy = eval.accuracy;
  row.avg_spike_rate = eval.avg_spike_rate;
  h.epochs.push_back(row);
  append_history_csv(path, h);
}

class DiagWriter {
 public:
  DiagWriter(const std::string& path) : path_(path) {}
  AdmmDiagSink sink() {
    return [this](const AdmmDiagRow& row) {
      bool fresh = !fs::exists(path_);
      std::ofstream out(path_, std::ios::app);
      if (fresh) out << "epoch,layer,w_minus_z_l2,alpha,z_violations\n";
      char buf[160];
      if (row.alpha)
        std::snprintf(buf, sizeof(buf), "%zu,%zu,%.8f,%.8f,%zu\n", row.epoch,
                      row.layer, row.w_minus_z_l2, *row.alpha,
                      row.z_violations);
      else
        std::snprintf(buf, sizeof(buf), "%zu,%zu,%.8f,,%zu\n", row.epoch,
                      row.layer, row.w_minus_z_l2, row.z_violations);
      out << buf;
    };
  }

 private:
  std::string path_;
};

}  // namespace

void pretrain(const ExperimentConfig& config) {
  config.validate();
  ExperimentPaths paths(config.out_dir);
  fs::create_directories(paths.out_dir);
  for (const auto& p : {paths.history_csv, paths.admm_diag_csv})
    fs::remove(p);

  Dataset train_set = load_split(config, "train");
  SpikingNetwork net = SpikingNetwork::from_architecture(config.arch);
  net.init_weights(config.seed);

  if (config.eval_each_epoch) {
    Dataset test_set = load_split(config, "test");
    for (std::size_t e = 0; e < config.epochs_pretrain; ++e) {
      TrainConfig tc = train_config_for(config, 1, 0.0);
      append_history_csv(paths.history_csv,
                         train(net, train_set, config.lif, tc, nullptr, e));
      EvalResult eval = evaluate(net, test_set, config.lif, config.timesteps,
                                 config.seed, config.threads);
      append_test_row(paths.history_csv, e + 1, eval);
    }
  } else {
    TrainConfig tc = train_config_for(config, config.epochs_pretrain, 0.0);
    append_history_csv(paths.history_csv,
                       train(net, train_set, config.lif, tc));
    if (config.epochs_pretrain > 0) {
      Dataset test_set = load_split(config, "test");
      EvalResult eval = evaluate(net, test_set, config.lif, config.timesteps,
                                 config.seed, config.threads);
      append_test_row(paths.history_csv, config.epochs_pretrain, eval);
    }
  }

  CheckpointMeta meta{config.arch, config.seed, config.epochs_pretrain};
  save_checkpoint(paths.baseline_ckpt, net, meta);
  save_checkpoint(paths.model_ckpt, net, meta);
}

void compress(const ExperimentConfig& config) {
  config.validate();
  ExperimentPaths paths(config.out_dir);
  Checkpoint baseline = load_checkpoint(paths.baseline_ckpt);
  SpikingNetwork net = std::move(baseline.net);

  Dataset train_set = load_split(config, "train");
  double lambda = mode_regularizes(config.mode) ? config.lambda : 0.0;
  TrainConfig tc = train_config_for(config, 1, lambda);

  CompressOptions options;
  options.rho = config.rho;
  options.admm_epochs = config.epochs_admm;
  options.hard_epochs = config.epochs_hard;
  options.layer_indices = compression_layers(config, net);
  options.epoch_offset = baseline.meta.epoch;
  DiagWriter diag(paths.admm_diag_csv);
  options.diag = diag.sink();

  QuantSpec spec{config.bits, config.quant_iterations};
  TrainHistory history;
  std::size_t stage_epochs = 0;

  switch (config.mode) {
    case CompressMode::kNone:
      break;
    case CompressMode::kPrune:
    case CompressMode::kPruneRegularize:
      history = admm_prune(net, train_set, config.lif, tc, config.sparsity,
                           options);
      stage_epochs = options.admm_epochs + options.hard_epochs;
      break;
    case CompressMode::kQuantize:
    case CompressMode::kQuantizeRegularize:
      history = admm_quantize(net, train_set, config.lif, tc, spec, options);
      stage_epochs = options.admm_epochs + options.hard_epochs;
      break;
    case CompressMode::kPruneQuantize:
    case CompressMode::kAll:
      history = admm_joint(net, train_set, config.lif, tc, config.sparsity,
                           spec, options);
      stage_epochs = 2 * (options.admm_epochs + options.hard_epochs);
      break;
    case CompressMode::kRegularize: {
      TrainConfig rc = train_config_for(
          config, config.epochs_admm + config.epochs_hard, config.lambda);
      history = train(net, train_set, config.lif, rc, nullptr,
                      baseline.meta.epoch);
      stage_epochs = rc.epochs;
      break;
    }
  }
  append_history_csv(paths.history_csv, history);

  CheckpointMeta meta{config.arch, config.seed,
                      baseline.meta.epoch + stage_epochs};
  save_checkpoint(paths.model_ckpt, net, meta);

  Dataset test_set = load_split(config, "test");
  EvalResult eval = evaluate(net, test_set, config.lif, config.timesteps,
                             config.seed, config.threads);
  append_test_row(paths.history_csv, meta.epoch, eval);
}

EvalResult evaluate_checkpoint(const ExperimentConfig& config,
                               const std::string& ckpt_path) {
  Checkpoint ck = load_checkpoint(ckpt_path);
  Dataset test_set = load_split(config, "test");
  return evaluate(ck.net, test_set, config.lif, config.timesteps, config.seed,
                  config.threads);
}

CompressionReport write_report(const ExperimentConfig& config) {
  config.validate();
  ExperimentPaths paths(config.out_dir);

  EvalResult base = evaluate_checkpoint(config, paths.baseline_ckpt);
  EvalResult comp = evaluate_checkpoint(config, paths.model_ckpt);

  double s = mode_prunes(config.mode) ? config.sparsity : 0.0;
  int b = mode_quantizes(config.mode) ? config.bits : config.baseline_bits;
  double lambda = mode_regularizes(config.mode) ? config.lambda : 0.0;

  CompressionReport report =
      make_report(lambda, s, b, config.baseline_bits, base.avg_spike_rate,
                  comp.avg_spike_rate, base.accuracy, comp.accuracy);

  std::ofstream out(paths.report_csv);
  if (!out) throw Error("cannot open " + paths.report_csv);
  write_report_csv(out, report);
  return report;
}

CompressionReport run_experiment(const ExperimentConfig& config) {
  pretrain(config);
  compress(config);
  return write_report(config);
}

}  // namespace snnc
