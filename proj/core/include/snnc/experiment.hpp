#pragma once

#include <string>

#include "snnc/admm.hpp"
#include "snnc/checkpoint.hpp"
#include "snnc/config.hpp"
#include "snnc/data.hpp"
#include "snnc/metrics.hpp"
#include "snnc/stbp.hpp"

namespace snnc {

// Output file layout inside config.out_dir.
struct ExperimentPaths {
  explicit ExperimentPaths(const std::string& out_dir);
  std::string out_dir;
  std::string baseline_ckpt;  // pretrained weights
  std::string model_ckpt;     // compressed weights
  std::string history_csv;
  std::string admm_diag_csv;
  std::string report_csv;
};

// Loads the split named by the config ("train"/"test"), applying
// train_limit/test_limit.
Dataset load_split(const ExperimentConfig& config, const std::string& split);

TrainConfig train_config_for(const ExperimentConfig& config,
                             std::size_t epochs, double lambda);
std::vector<std::size_t> compression_layers(const ExperimentConfig& config,
                                            const SpikingNetwork& net);

// Stage 1: trains a fresh network for N0 epochs and writes baseline.ckpt
// (model.ckpt starts as a copy) plus the training history.
void pretrain(const ExperimentConfig& config);

// Stage 2: loads baseline.ckpt, runs the configured compression pipeline and
// writes model.ckpt, appending to history.csv and admm_diag.csv.
void compress(const ExperimentConfig& config);

// Evaluates a checkpoint on the test split.
EvalResult evaluate_checkpoint(const ExperimentConfig& config,
                               const std::string& ckpt_path);

// Stage 3: evaluates baseline and compressed checkpoints and writes
// report.csv. Returns the assembled report.
CompressionReport write_report(const ExperimentConfig& config);

// The whole pipeline: pretrain, compress, report.
CompressionReport run_experiment(const ExperimentConfig& config);

}  // namespace snnc
