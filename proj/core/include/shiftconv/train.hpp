/* Copyright 2026 The ShiftConvNet Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "shiftconv/checkpoint.hpp"
#include "shiftconv/config_file.hpp"
#include "shiftconv/dataset.hpp"
#include "shiftconv/losses.hpp"
#include "shiftconv/network.hpp"
#include "shiftconv/synth.hpp"

namespace shiftconv {

struct TrainConfig {
  double base_lr = 2e-4;
  long lr_warm_iters = 100000;   // iterations at base_lr
  long lr_decay_period = 50000;  // halving period afterwards
  double lr_floor = 3e-5;
  long stage1_iters = 0;
  long stage2_iters = 0;
  int batch_size = 1;
  std::uint64_t seed = 0;
  int log_interval = 100;
  long checkpoint_interval = 0;  // 0: no periodic checkpoints
  std::string checkpoint_dir;
  LossConfig loss{};
  NetworkConfig net{};

  std::string data_root;  // empty: use the synthetic set below
  SynthConfig synth{};
  int synth_count = 4;

  int eval_warmup = 2;
  int eval_forwards = 10;
  int eval_rounds = 3;  // timed windows; the fastest window's mean is reported
  long ablate_iters = 100;
  int threads = 1;

  void validate() const;
};

// Recognised keys mirror the field names (network fields by their own names,
// e.g. feat_channels = 16,16,32,32; synthetic data as synth_<field>).
// "network = desk" selects NetworkConfig::desk() before other keys apply.
TrainConfig parse_train_config(const KeyValueFile& kv);
TrainConfig load_train_config(const std::filesystem::path& path);

// base_lr before lr_warm_iters; then halved once on entering the decay phase
// and once more every lr_decay_period iterations; never below lr_floor.
double lr_schedule(long iteration, const TrainConfig& cfg);

// Index into the dataset for the k-th sample drawn at `iteration`: a fixed
// shuffled permutation per epoch derived from the seed.
int sample_index(long iteration, int k, int batch_size, int dataset_size, std::uint64_t seed);

struct LogEntry {
  long iteration;
  double lr;
  double loss;
  double epe;
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<LogEntry> log;
  std::vector<double> losses;  // one per iteration run
};

// Runs `iterations` optimisation steps of the given stage (1: coarse output
// with the stage-1 loss, refine disabled; 2: refine enabled with the stage-2
// loss), continuing from `resume` when given, else from a fresh
// initialisation seeded by cfg.seed. Non-finite loss raises NumericalError.
TrainResult train_stage(int stage, const TrainConfig& cfg, const std::vector<StereoSample>& data,
                        const Checkpoint* resume, long iterations, std::ostream* log = nullptr);

// Disparity for one sample (refined when the network has refinement enabled).
using Predictor = std::function<DisparityMap(const StereoSample&)>;
Predictor network_predictor(const Network<float>& net);

struct SampleReport {
  std::string id;
  double epe;
  double d1;  // fraction
};

struct EvalReport {
  std::string variant;
  int filters = 0;
  double epe = 0.0;
  double d1 = 0.0;  // fraction
  double mean_forward_seconds = 0.0;
  std::vector<SampleReport> samples;
};

struct EvalOptions {
  int warmup = 2;
  int forwards = 10;
  bool time_forward = true;
  int rounds = 1;
};

// Dataset-level EPE/D1 are pixel-weighted over all samples. Wall time is the
// mean of options.forwards timed predictions on the first sample after
// options.warmup untimed ones; with several rounds the fastest round's mean.
EvalReport evaluate(const Predictor& predict, const std::vector<DatasetEntry>& data,
                    const EvalOptions& options = {});
EvalReport evaluate(const Network<float>& net, const std::vector<DatasetEntry>& data,
                    const EvalOptions& options = {});

std::string format_eval_table(const EvalReport& report);
std::string format_eval_csv(const EvalReport& report);

// Mean forward wall time of a network on one input after warmup, the fastest of
// `rounds` timed windows of `forwards` runs each.
double time_forward(const Network<float>& net, const StereoSample& sample, int warmup, int forwards,
                    int rounds = 1);

struct AblationRow {
  std::string variant;      // conv_then_concat, concat_then_conv or correlation
  int filters = 0;          // matching-clue filters (0 for correlation)
  double forward_seconds = 0.0;
  double epe = 0.0;
  long iterations = 0;
  std::uint64_t seed = 0;
  std::size_t parameters = 0;
};

// Network configs of the ablation matrix in report order: both shift-conv
// variants with 8, 12, 16 filters, then the correlation cost volume.
std::vector<std::pair<std::string, NetworkConfig>> ablation_configs(const NetworkConfig& base);

// Trains every configuration with stage 1 for cfg.ablate_iters iterations
// under the same seed and evaluates it on the training data.
std::vector<AblationRow> ablation_suite(const TrainConfig& cfg, const std::vector<DatasetEntry>& data,
                                        std::ostream* log = nullptr);

// Forward-time only: untrained networks for the same matrix.
std::vector<AblationRow> bench_suite(const TrainConfig& cfg, const StereoSample& sample);

std::string format_ablation_table(const std::vector<AblationRow>& rows);
std::string format_ablation_csv(const std::vector<AblationRow>& rows);

// Training data as configured: the dataset at data_root, else synthetic pairs.
std::vector<DatasetEntry> load_training_data(const TrainConfig& cfg);
std::vector<StereoSample> samples_of(const std::vector<DatasetEntry>& entries);

}  // namespace shiftconv
