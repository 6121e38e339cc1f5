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

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "shiftconv/checkpoint.hpp"
#include "shiftconv/codecs.hpp"
#include "shiftconv/dataset.hpp"
#include "shiftconv/errors.hpp"
#include "shiftconv/ops.hpp"
#include "shiftconv/synth.hpp"
#include "shiftconv/train.hpp"

namespace fs = std::filesystem;
using namespace shiftconv;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

// Flag-level misuse detected after CLI11 parsing.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

TrainConfig config_or_default(const std::string& path) {
  return path.empty() ? TrainConfig{} : load_train_config(path);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path + " for writing");
  out << text;
  if (!out) throw DataError("failed writing " + path);
}

// Network config for a checkpoint: refinement follows the stage tag.
NetworkConfig network_for(const TrainConfig& cfg, const Checkpoint& ckpt,
                          const std::string& costvol) {
  NetworkConfig n = cfg.net;
  n.refine_enabled = ckpt.stage == 2;
  if (!costvol.empty()) n.cost_volume = parse_cost_volume(costvol);
  return n;
}

StereoSample load_pair(const std::string& left_path, const std::string& right_path) {
  StereoSample s;
  s.left = read_pnm(read_file(left_path));
  s.right = read_pnm(read_file(right_path));
  if (s.left.shape() != s.right.shape()) {
    throw DataError("left image " + s.left.shape().str() + " and right image " +
                    s.right.shape().str() + " differ in shape");
  }
  return s;
}

struct GenArgs {
  std::string out;
  std::string config;
  int count = 4;
  std::optional<std::uint64_t> seed;
  std::optional<int> width, height, channels, shapes, disp_min, disp_max;
};

int run_gen(const GenArgs& a) {
  TrainConfig cfg = config_or_default(a.config);
  SynthConfig& s = cfg.synth;
  if (a.seed) s.seed = *a.seed;
  if (a.width) s.width = *a.width;
  if (a.height) s.height = *a.height;
  if (a.channels) s.channels = *a.channels;
  if (a.shapes) s.num_shapes = *a.shapes;
  if (a.disp_min) s.disp_min = *a.disp_min;
  if (a.disp_max) s.disp_max = *a.disp_max;
  try {
    s.validate();
  } catch (const ContractError& e) {
    throw UsageError(e.what());
  }
  write_synthetic_dataset(a.out, s, a.count);
  std::cout << "wrote " << a.count << " pairs (" << s.width << "x" << s.height << ", seed "
            << s.seed << ") to " << a.out << "\n";
  return kExitOk;
}

struct TrainArgs {
  int stage = 1;
  std::string config;
  std::string resume;
  std::string out;
  std::string log;
  bool from_scratch = false;
};

int run_train(const TrainArgs& a) {
  const TrainConfig cfg = load_train_config(a.config);
  std::optional<Checkpoint> resume;
  if (!a.resume.empty()) resume = checkpoint_load(a.resume);

  long iterations = 0;
  if (a.stage == 1) {
    if (resume && resume->stage != 1) {
      throw UsageError("stage 1 cannot resume from a stage-" + std::to_string(resume->stage) +
                       " checkpoint");
    }
    const long done = resume ? static_cast<long>(resume->iteration) : 0;
    iterations = std::max(0L, cfg.stage1_iters - done);
  } else {
    if (!resume && !a.from_scratch) {
      throw UsageError("stage 2 needs --resume <stage-1 checkpoint> or --from-scratch");
    }
    if (resume && a.from_scratch) throw UsageError("--resume and --from-scratch are exclusive");
    if (!resume) {
      iterations = cfg.stage2_iters;
    } else if (resume->stage == 1) {
      iterations = cfg.stage2_iters;
    } else {
      const long done = static_cast<long>(resume->iteration);
      iterations = std::max(0L, cfg.stage1_iters + cfg.stage2_iters - done);
    }
  }

  const auto data = samples_of(load_training_data(cfg));
  std::ofstream log_file;
  std::ostream* log = &std::cout;
  if (!a.log.empty()) {
    log_file.open(a.log, std::ios::app);
    if (!log_file) throw DataError("cannot open log file " + a.log);
    log = &log_file;
  }
  if (!cfg.checkpoint_dir.empty()) fs::create_directories(cfg.checkpoint_dir);
  const auto result =
      train_stage(a.stage, cfg, data, resume ? &*resume : nullptr, iterations, log);

  std::string out = a.out;
  if (out.empty()) {
    const fs::path dir = cfg.checkpoint_dir.empty() ? fs::path(".") : fs::path(cfg.checkpoint_dir);
    out = (dir / ("stage" + std::to_string(a.stage) + "_final.scnc")).string();
  }
  checkpoint_save(result.checkpoint, out);
  std::cout << "saved checkpoint (stage " << a.stage << ", iteration "
            << result.checkpoint.iteration << ") to " << out << "\n";
  return kExitOk;
}

struct EvalArgs {
  std::string ckpt;
  std::string data;
  std::string config;
  std::string costvol;
  std::string csv;
  int warmup = 2;
  int forwards = 10;
  int rounds = 1;
};

int run_eval(const EvalArgs& a) {
  const TrainConfig cfg = config_or_default(a.config);
  ops::set_num_threads(cfg.threads);
  const Checkpoint ckpt = checkpoint_load(a.ckpt);
  const auto state = restore_checkpoint(ckpt, network_for(cfg, ckpt, a.costvol));
  const auto data = load_dataset(a.data);
  if (data.empty()) throw DataError("no samples found under " + a.data);
  const auto report = evaluate(state.net, data, EvalOptions{a.warmup, a.forwards, true, a.rounds});
  std::cout << format_eval_table(report);
  if (!a.csv.empty()) write_text(a.csv, format_eval_csv(report));
  return kExitOk;
}

struct AblateArgs {
  std::string config;
  std::string csv;
  bool quiet = false;
};

int run_ablate(const AblateArgs& a) {
  const TrainConfig cfg = load_train_config(a.config);
  const auto data = load_training_data(cfg);
  const auto rows = ablation_suite(cfg, data, a.quiet ? nullptr : &std::cerr);
  std::cout << format_ablation_table(rows);
  if (!a.csv.empty()) write_text(a.csv, format_ablation_csv(rows));
  return kExitOk;
}

struct InferArgs {
  std::string ckpt;
  std::string left;
  std::string right;
  std::string out;
  std::string config;
  std::string pfm;
  std::optional<double> disp_cap;
};

int run_infer(const InferArgs& a) {
  const TrainConfig cfg = config_or_default(a.config);
  ops::set_num_threads(cfg.threads);
  const Checkpoint ckpt = checkpoint_load(a.ckpt);
  const auto state = restore_checkpoint(ckpt, network_for(cfg, ckpt, ""));
  const StereoSample s = load_pair(a.left, a.right);
  if (s.left.shape().c != state.net.config().image_channels) {
    throw DataError("images have " + std::to_string(s.left.shape().c) +
                    " channels, network expects " +
                    std::to_string(state.net.config().image_channels));
  }
  try {
    state.net.config().validate_input(s.left.shape().h, s.left.shape().w);
  } catch (const ContractError& e) {
    throw DataError(e.what());
  }
  const DisparityMap disp = network_predictor(state.net)(s);
  const double cap = a.disp_cap.value_or(4.0 * state.net.config().shift_cfg.maxdisp);
  if (!(cap > 0.0)) throw UsageError("--disp-cap must be positive");
  write_file(a.out, disparity_to_pgm(disp, cap));
  if (!a.pfm.empty()) write_file(a.pfm, write_pfm(disp.to_tensor<float>()));
  std::cout << "wrote " << disp.width() << "x" << disp.height() << " disparity to " << a.out
            << "\n";
  return kExitOk;
}

struct BenchArgs {
  std::string config;
  std::string csv;
};

int run_bench(const BenchArgs& a) {
  const TrainConfig cfg = load_train_config(a.config);
  const auto data = load_training_data(cfg);
  const auto rows = bench_suite(cfg, data.front().sample);
  std::cout << format_ablation_table(rows);
  if (!a.csv.empty()) write_text(a.csv, format_ablation_csv(rows));
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stereo disparity estimation with shift-convolution cost volumes"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "Write a synthetic stereo dataset to a directory");
  gen_cmd->add_option("--out", gen.out, "Dataset root")->required();
  gen_cmd->add_option("--count", gen.count, "Number of pairs")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--config", gen.config, "Config file supplying synth_* defaults");
  gen_cmd->add_option("--seed", gen.seed, "Generator seed");
  gen_cmd->add_option("--width", gen.width, "Image width");
  gen_cmd->add_option("--height", gen.height, "Image height");
  gen_cmd->add_option("--channels", gen.channels, "1 or 3");
  gen_cmd->add_option("--shapes", gen.shapes, "Foreground rectangles per pair");
  gen_cmd->add_option("--disp-min", gen.disp_min, "Smallest foreground disparity");
  gen_cmd->add_option("--disp-max", gen.disp_max, "Largest foreground disparity");

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Run training stage 1 or 2");
  train_cmd->add_option("--stage", train.stage, "Training stage")->required()->check(
      CLI::IsMember({1, 2}));
  train_cmd->add_option("--config", train.config, "Config file")->required();
  train_cmd->add_option("--resume", train.resume, "Checkpoint to continue from");
  train_cmd->add_flag("--from-scratch", train.from_scratch,
                      "Allow stage 2 without a stage-1 checkpoint");
  train_cmd->add_option("--out", train.out, "Final checkpoint path");
  train_cmd->add_option("--log", train.log, "Append the training log to this file");

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset");
  eval_cmd->add_option("--ckpt", eval.ckpt, "Checkpoint")->required();
  eval_cmd->add_option("--data", eval.data, "Dataset root")->required();
  eval_cmd->add_option("--config", eval.config, "Config the checkpoint was trained with");
  eval_cmd->add_option("--costvol", eval.costvol, "Cost volume kind")
      ->check(CLI::IsMember({"shiftconv", "corr"}));
  eval_cmd->add_option("--csv", eval.csv, "Also write the report as CSV");
  eval_cmd->add_option("--warmup", eval.warmup, "Untimed forwards")->check(CLI::Range(2, 1000));
  eval_cmd->add_option("--forwards", eval.forwards, "Timed forwards")
      ->check(CLI::Range(10, 100000));
  eval_cmd->add_option("--rounds", eval.rounds, "Timed windows, the fastest is reported")
      ->check(CLI::Range(1, 1000));

  AblateArgs ablate;
  auto* ablate_cmd = app.add_subcommand("ablate", "Train and compare the cost-volume variants");
  ablate_cmd->add_option("--config", ablate.config, "Config file")->required();
  ablate_cmd->add_option("--csv", ablate.csv, "Also write the report as CSV");
  ablate_cmd->add_flag("--quiet", ablate.quiet, "Suppress training logs");

  InferArgs infer;
  auto* infer_cmd = app.add_subcommand("infer", "Predict disparity for one image pair");
  infer_cmd->add_option("--ckpt", infer.ckpt, "Checkpoint")->required();
  infer_cmd->add_option("--left", infer.left, "Left image (PGM/PPM)")->required();
  infer_cmd->add_option("--right", infer.right, "Right image (PGM/PPM)")->required();
  infer_cmd->add_option("--out", infer.out, "Output PGM")->required();
  infer_cmd->add_option("--disp-cap", infer.disp_cap,
                        "Disparity mapped to white (default 4 * maxdisp)");
  infer_cmd->add_option("--config", infer.config, "Config the checkpoint was trained with");
  infer_cmd->add_option("--pfm", infer.pfm, "Also write raw disparities as PFM");

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "Forward-time the cost-volume variants");
  bench_cmd->add_option("--config", bench.config, "Config file")->required();
  bench_cmd->add_option("--csv", bench.csv, "Also write the report as CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen_cmd) return run_gen(gen);
    if (*train_cmd) return run_train(train);
    if (*eval_cmd) return run_eval(eval);
    if (*ablate_cmd) return run_ablate(ablate);
    if (*infer_cmd) return run_infer(infer);
    if (*bench_cmd) return run_bench(bench);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kExitData;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const ContractError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
