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

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "shiftconv/checkpoint.hpp"
#include "shiftconv/optimizer.hpp"
#include "shiftconv/train.hpp"

namespace shiftconv {
namespace {

namespace fs = std::filesystem;

// A small network on 64x64 synthetic pairs keeps every step cheap.
TrainConfig tiny_config() {
  TrainConfig cfg;
  cfg.net = NetworkConfig::desk();
  cfg.net.feat_channels = {4, 4, 6, 6};
  cfg.net.redir_channels = 4;
  cfg.net.encode_channels = {8, 8, 8, 8};
  cfg.net.decode_channels = {8, 8, 6, 6, 4, 4};
  cfg.net.shift_cfg.maxdisp = 3;
  cfg.net.shift_cfg.clue_filters = 4;
  cfg.synth.width = 64;
  cfg.synth.height = 64;
  cfg.synth.disp_min = 1;
  cfg.synth.disp_max = 10;
  cfg.synth.seed = 11;
  cfg.synth_count = 3;
  cfg.base_lr = 1e-3;
  cfg.seed = 4;
  cfg.log_interval = 2;
  return cfg;
}

const char* kTinyConfigText =
    "network = desk\n"
    "feat_channels = 4,4,6,6\n"
    "redir_channels = 4\n"
    "encode_channels = 8,8,8,8\n"
    "decode_channels = 8,8,6,6,4,4\n"
    "maxdisp = 3\n"
    "clue_filters = 4\n"
    "synth_width = 64\n"
    "synth_height = 64\n"
    "synth_disp_min = 1\n"
    "synth_disp_max = 10\n"
    "synth_seed = 11\n"
    "synth_count = 3\n"
    "base_lr = 1e-3\n"
    "seed = 4\n"
    "log_interval = 2\n";

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("shiftconv_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

TEST(LrSchedule, Values) {
  const TrainConfig cfg;
  EXPECT_EQ(lr_schedule(0, cfg), 2e-4);
  EXPECT_EQ(lr_schedule(99999, cfg), 2e-4);
  EXPECT_EQ(lr_schedule(100000, cfg), 1e-4);
  EXPECT_EQ(lr_schedule(149999, cfg), 1e-4);
  EXPECT_EQ(lr_schedule(150000, cfg), 5e-5);
  EXPECT_EQ(lr_schedule(200000, cfg), 3e-5);
  EXPECT_EQ(lr_schedule(300000, cfg), 3e-5);
  EXPECT_EQ(lr_schedule(1L << 40, cfg), 3e-5);
}

TEST(LrSchedule, NonIncreasingAndBounded) {
  TrainConfig cfg;
  cfg.lr_warm_iters = 50;
  cfg.lr_decay_period = 7;
  cfg.lr_floor = 1e-6;
  double last = cfg.base_lr;
  for (long it = 0; it < 400; ++it) {
    const double lr = lr_schedule(it, cfg);
    EXPECT_LE(lr, last);
    EXPECT_GE(lr, cfg.lr_floor);
    EXPECT_LE(lr, cfg.base_lr);
    last = lr;
  }
  EXPECT_EQ(last, cfg.lr_floor);
}

TEST(SampleOrder, EachEpochIsAPermutation) {
  for (long epoch = 0; epoch < 3; ++epoch) {
    std::set<int> seen;
    for (long it = 7 * epoch; it < 7 * (epoch + 1); ++it) seen.insert(sample_index(it, 0, 1, 7, 5));
    EXPECT_EQ(seen.size(), 7u);
  }
  std::vector<int> a, b, c;
  for (long it = 0; it < 14; ++it) {
    a.push_back(sample_index(it, 0, 1, 7, 5));
    b.push_back(sample_index(it, 0, 1, 7, 5));
    c.push_back(sample_index(it, 0, 1, 7, 6));
  }
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  EXPECT_NE(std::vector<int>(a.begin(), a.begin() + 7), std::vector<int>(a.begin() + 7, a.end()));
}

ParameterStore<float> scalar_param(float value) {
  ParameterStore<float> p;
  p.add("x", Tensor<float>(Shape{1, 1, 1, 1}, value), true);
  return p;
}

TEST(Adam, FirstStepMovesByLearningRate) {
  auto p = scalar_param(1.0f);
  Adam opt(p);
  p.get("x")->grad = Tensor<float>(Shape{1, 1, 1, 1}, 1.0f);
  opt.step(p, 0.1);
  // m_hat = 1, v_hat = 1: update = lr / (1 + eps).
  const double expected = 1.0 - 0.1 / (1.0 + Adam::kEpsilon);
  EXPECT_NEAR(p.get("x")->value[0], expected, 1e-7);
  EXPECT_EQ(opt.steps(), 1u);

  // Constant gradient keeps the step size at lr.
  for (int i = 0; i < 4; ++i) opt.step(p, 0.1);
  EXPECT_NEAR(p.get("x")->value[0], 1.0 - 0.5, 1e-5);
}

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
  auto p = scalar_param(0.75f);
  Adam opt(p);
  p.get("x")->grad = Tensor<float>(Shape{1, 1, 1, 1}, 0.0f);
  opt.step(p, 0.1);
  EXPECT_EQ(p.get("x")->value[0], 0.75f);
  p.zero_grad();
  opt.step(p, 0.1);  // no gradient at all
  EXPECT_EQ(p.get("x")->value[0], 0.75f);
}

TEST(Adam, NonFiniteGradientAbortsStep) {
  ParameterStore<float> p;
  p.add("a.weight", Tensor<float>(Shape{1, 1, 1, 2}, 1.0f), true);
  p.add("b.weight", Tensor<float>(Shape{1, 1, 1, 2}, 1.0f), true);
  Adam opt(p);
  p.get("a.weight")->grad = Tensor<float>(Shape{1, 1, 1, 2}, 1.0f);
  p.get("b.weight")->grad = Tensor<float>(Shape{1, 1, 1, 2}, std::nanf(""));
  try {
    opt.step(p, 0.1);
    FAIL() << "NaN gradient accepted";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("b.weight"), std::string::npos);
  }
  EXPECT_EQ(p.get("a.weight")->value[0], 1.0f);
  EXPECT_EQ(opt.steps(), 0u);
  EXPECT_EQ(opt.first_moments()[0][0], 0.0f);
}

class Training : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    cfg_ = new TrainConfig(tiny_config());
    data_ = new std::vector<DatasetEntry>(load_training_data(*cfg_));
  }
  static void TearDownTestSuite() {
    delete cfg_;
    delete data_;
  }
  static std::vector<StereoSample> samples() { return samples_of(*data_); }

  static TrainConfig* cfg_;
  static std::vector<DatasetEntry>* data_;
};
TrainConfig* Training::cfg_ = nullptr;
std::vector<DatasetEntry>* Training::data_ = nullptr;

TEST_F(Training, ZeroIterationsGivesInitialisation) {
  const auto r = train_stage(1, *cfg_, samples(), nullptr, 0);
  Network<float> init(cfg_->net, cfg_->seed);
  const auto expected = make_checkpoint(init, Adam(init.params()), 0, 1);
  EXPECT_EQ(r.checkpoint, expected);
  EXPECT_TRUE(r.losses.empty());
}

TEST_F(Training, DeterministicAndLogged) {
  std::ostringstream log;
  const auto a = train_stage(1, *cfg_, samples(), nullptr, 5, &log);
  const auto b = train_stage(1, *cfg_, samples(), nullptr, 5);
  EXPECT_EQ(a.losses, b.losses);
  EXPECT_EQ(a.checkpoint, b.checkpoint);
  EXPECT_EQ(a.checkpoint.iteration, 5u);
  ASSERT_EQ(a.log.size(), 3u);  // 2, 4 and the final iteration
  EXPECT_EQ(a.log[2].iteration, 5);
  const std::string text = log.str();
  EXPECT_NE(text.find("# stage=1"), std::string::npos);
  EXPECT_NE(text.find("iter=2 lr=0.001 loss="), std::string::npos);
  EXPECT_NE(text.find("iter=5 "), std::string::npos);
}

TEST_F(Training, ResumeMatchesStraightRun) {
  const auto straight = train_stage(1, *cfg_, samples(), nullptr, 6);
  const auto first = train_stage(1, *cfg_, samples(), nullptr, 3);
  const Checkpoint reloaded = parse_checkpoint(serialize_checkpoint(first.checkpoint));
  const auto second = train_stage(1, *cfg_, samples(), &reloaded, 3);
  EXPECT_EQ(second.checkpoint, straight.checkpoint);
  std::vector<double> joined = first.losses;
  joined.insert(joined.end(), second.losses.begin(), second.losses.end());
  EXPECT_EQ(joined, straight.losses);

  // Stage 2 continues across the same boundary.
  const auto s2_straight = train_stage(2, *cfg_, samples(), &straight.checkpoint, 4);
  const auto s2_a = train_stage(2, *cfg_, samples(), &straight.checkpoint, 2);
  const auto s2_b = train_stage(2, *cfg_, samples(), &s2_a.checkpoint, 2);
  EXPECT_EQ(s2_b.checkpoint, s2_straight.checkpoint);
  EXPECT_EQ(s2_b.checkpoint.stage, 2u);
  EXPECT_EQ(s2_b.checkpoint.iteration, 10u);
}

TEST_F(Training, PeriodicCheckpoints) {
  TrainConfig cfg = *cfg_;
  const auto dir = scratch_dir("periodic");
  cfg.checkpoint_interval = 2;
  cfg.checkpoint_dir = dir.string();
  const auto r = train_stage(1, cfg, samples(), nullptr, 4);
  EXPECT_TRUE(fs::exists(dir / "stage1_2.scnc"));
  EXPECT_EQ(checkpoint_load(dir / "stage1_4.scnc"), r.checkpoint);
  fs::remove_all(dir);
}

TEST_F(Training, NonFiniteLossReportsIteration) {
  auto data = samples();
  data[0].left[0] = std::nanf("");
  data[1].left[0] = std::nanf("");
  data[2].left[0] = std::nanf("");
  try {
    train_stage(1, *cfg_, data, nullptr, 2);
    FAIL() << "NaN input trained";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("iteration 0"), std::string::npos) << e.what();
  }
}

TEST_F(Training, CheckpointFileRoundTrip) {
  const auto r = train_stage(1, *cfg_, samples(), nullptr, 2);
  const auto dir = scratch_dir("ckpt");
  checkpoint_save(r.checkpoint, dir / "a.scnc");
  const auto loaded = checkpoint_load(dir / "a.scnc");
  EXPECT_EQ(loaded, r.checkpoint);
  checkpoint_save(loaded, dir / "b.scnc");
  EXPECT_EQ(read_file(dir / "a.scnc"), read_file(dir / "b.scnc"));
  fs::remove_all(dir);
}

TEST_F(Training, CheckpointErrors) {
  const auto r = train_stage(1, *cfg_, samples(), nullptr, 1);
  const Bytes bytes = serialize_checkpoint(r.checkpoint);

  // Cut inside the values of the first tensor.
  const Bytes cut(bytes.begin(), bytes.begin() + 20 + 4 + 17 + 16 + 40);
  try {
    parse_checkpoint(cut);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("feat.conv1.weight"), std::string::npos) << e.what();
  }
  Bytes magic = bytes;
  magic[0] = 'X';
  EXPECT_THROW(parse_checkpoint(magic), ParseError);
  Bytes version = bytes;
  version[4] = 9;
  try {
    parse_checkpoint(version);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 4u);
  }

  NetworkConfig other = cfg_->net;
  other.shift_cfg.clue_filters = 6;
  try {
    restore_checkpoint(r.checkpoint, other);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("costvol.weight"), std::string::npos) << e.what();
  }
  Checkpoint no_moments = r.checkpoint;
  no_moments.tensors.resize(no_moments.tensors.size() - 1);
  EXPECT_THROW(restore_checkpoint(no_moments, cfg_->net), DataError);
}

TEST_F(Training, EvaluateOracleAndDeterminism) {
  const EvalOptions quick{2, 10, false};
  const auto perfect = evaluate([](const StereoSample& s) { return s.gt_disp; }, *data_, quick);
  EXPECT_EQ(perfect.epe, 0.0);
  EXPECT_EQ(perfect.d1, 0.0);
  EXPECT_EQ(perfect.samples.size(), data_->size());

  const auto r = train_stage(1, *cfg_, samples(), nullptr, 2);
  const auto state = restore_checkpoint(r.checkpoint, cfg_->net);
  const auto before = make_checkpoint(state.net, state.opt, 2, 1);
  const auto a = evaluate(state.net, *data_);
  const auto b = evaluate(state.net, *data_);
  EXPECT_EQ(a.epe, b.epe);
  EXPECT_EQ(a.d1, b.d1);
  EXPECT_GT(a.mean_forward_seconds, 0.0);
  EXPECT_EQ(make_checkpoint(state.net, state.opt, 2, 1), before);

  const std::string table = format_eval_table(a);
  EXPECT_NE(table.find("EPE"), std::string::npos);
  EXPECT_NE(table.find(data_->front().id), std::string::npos);
  const std::string csv = format_eval_csv(a);
  EXPECT_EQ(csv.rfind("sample,epe,d1_percent\n", 0), 0u) << csv;
  EXPECT_NE(csv.find("\nALL,"), std::string::npos) << csv;
}

TEST_F(Training, AblationMatrix) {
  TrainConfig cfg = *cfg_;
  cfg.ablate_iters = 2;
  const auto rows = ablation_suite(cfg, *data_);
  ASSERT_EQ(rows.size(), 7u);
  std::set<std::pair<std::string, int>> cells;
  for (const auto& row : rows) {
    cells.insert({row.variant, row.filters});
    EXPECT_EQ(row.seed, cfg.seed);
    EXPECT_EQ(row.iterations, 2);
    EXPECT_GT(row.forward_seconds, 0.0);
    EXPECT_TRUE(std::isfinite(row.epe));
  }
  EXPECT_EQ(cells.size(), 7u);
  EXPECT_EQ(rows.back().variant, "correlation");
  EXPECT_EQ(rows.front().filters, 8);
  EXPECT_NE(format_ablation_table(rows).find("concat_then_conv"), std::string::npos);
  const std::string csv = format_ablation_csv(rows);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 8);
}

TEST(TrainConfigFile, ParsesAndRejects) {
  const auto cfg = parse_train_config(KeyValueFile::parse(kTinyConfigText));
  EXPECT_EQ(cfg.net.feat_channels, (std::array<int, 4>{4, 4, 6, 6}));
  EXPECT_EQ(cfg.net.shift_cfg.maxdisp, 3);
  EXPECT_EQ(cfg.synth.width, 64);
  EXPECT_EQ(cfg.base_lr, 1e-3);
  EXPECT_THROW(parse_train_config(KeyValueFile::parse("lerning_rate = 1\n")), DataError);
  EXPECT_THROW(parse_train_config(KeyValueFile::parse("base_lr = 1e-6\n")), DataError);
  EXPECT_THROW(parse_train_config(KeyValueFile::parse("feat_channels = 1,2\n")), DataError);
  EXPECT_THROW(parse_train_config(KeyValueFile::parse("network = huge\n")), DataError);
  EXPECT_THROW(parse_train_config(KeyValueFile::parse("seed = x\n")), ParseError);
  EXPECT_EQ(parse_train_config(KeyValueFile::parse("eval_rounds = 5\n")).eval_rounds, 5);
  EXPECT_THROW(parse_train_config(KeyValueFile::parse("eval_rounds = 0\n")), DataError);
  EXPECT_NO_THROW(load_train_config(SHIFTCONV_SOURCE_DIR "/configs/desk.conf"));
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(SHIFTCONV_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Cli, ExitCodesAndWorkflow) {
  const auto dir = scratch_dir("cli");
  const std::string d = dir.string();
  {
    std::ofstream(dir / "tiny.conf") << kTinyConfigText << "stage1_iters = 2\nstage2_iters = 1\n"
                                     << "checkpoint_dir = " << d << "/runs\n";
    std::ofstream(dir / "broken.conf") << "no_such_key = 1\n";
    std::string diverge = kTinyConfigText;
    diverge.replace(diverge.find("base_lr = 1e-3"), 14, "base_lr = 1e30");
    std::ofstream(dir / "diverge.conf") << diverge << "stage1_iters = 40\n";
  }
  EXPECT_EQ(run_cli(""), 1);
  EXPECT_EQ(run_cli("--help"), 0);
  EXPECT_EQ(run_cli("train --stage 3 --config " + d + "/tiny.conf"), 1);
  EXPECT_EQ(run_cli("train --stage 2 --config " + d + "/tiny.conf"), 1);
  EXPECT_EQ(run_cli("train --stage 1 --config " + d + "/broken.conf"), 2);
  EXPECT_EQ(run_cli("train --stage 1 --config " + d + "/missing.conf"), 2);

  EXPECT_EQ(run_cli("gen --out " + d + "/data --count 2 --config " + d + "/tiny.conf"), 0);
  EXPECT_TRUE(fs::exists(dir / "data" / "disp" / "000001.pfm"));
  EXPECT_EQ(run_cli("train --stage 1 --config " + d + "/tiny.conf"), 0);
  EXPECT_TRUE(fs::exists(dir / "runs" / "stage1_final.scnc"));
  EXPECT_EQ(run_cli("train --stage 2 --config " + d + "/tiny.conf --resume " + d +
                    "/runs/stage1_final.scnc"),
            0);
  EXPECT_EQ(checkpoint_load(dir / "runs" / "stage2_final.scnc").iteration, 3u);
  EXPECT_EQ(run_cli("eval --ckpt " + d + "/runs/stage2_final.scnc --data " + d + "/data --config " +
                    d + "/tiny.conf --csv " + d + "/eval.csv"),
            0);
  EXPECT_TRUE(fs::exists(dir / "eval.csv"));
  EXPECT_EQ(run_cli("eval --ckpt " + d + "/runs/stage2_final.scnc --data " + d + "/data"), 2);
  EXPECT_EQ(run_cli("eval --ckpt " + d + "/nothing.scnc --data " + d + "/data"), 2);
  EXPECT_EQ(run_cli("infer --ckpt " + d + "/runs/stage1_final.scnc --config " + d +
                    "/tiny.conf --left " + d + "/data/left/000000.ppm --right " + d +
                    "/data/right/000000.ppm --out " + d + "/disp.pgm"),
            0);
  EXPECT_TRUE(fs::exists(dir / "disp.pgm"));
  EXPECT_EQ(run_cli("train --stage 1 --config " + d + "/diverge.conf --out " + d + "/x.scnc"), 3);
  fs::remove_all(dir);
}

}  // namespace
}  // namespace shiftconv
