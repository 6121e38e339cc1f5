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

#include "shiftconv/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>

#include "shiftconv/ops.hpp"
#include "shiftconv/resize.hpp"

namespace shiftconv {

void TrainConfig::validate() const {
  if (!(lr_floor > 0.0) || base_lr < lr_floor) {
    throw ContractError("TrainConfig: need base_lr >= lr_floor > 0");
  }
  if (lr_warm_iters < 0 || lr_decay_period < 1) {
    throw ContractError("TrainConfig: lr_warm_iters must be >= 0 and lr_decay_period >= 1");
  }
  if (stage1_iters < 0 || stage2_iters < 0 || ablate_iters < 0) {
    throw ContractError("TrainConfig: iteration counts must be >= 0");
  }
  if (batch_size < 1) throw ContractError("TrainConfig: batch_size must be >= 1");
  if (log_interval < 1) throw ContractError("TrainConfig: log_interval must be >= 1");
  if (checkpoint_interval < 0) throw ContractError("TrainConfig: checkpoint_interval must be >= 0");
  if (eval_warmup < 2 || eval_forwards < 10) {
    throw ContractError("TrainConfig: timing needs eval_warmup >= 2 and eval_forwards >= 10");
  }
  if (eval_rounds < 1) throw ContractError("TrainConfig: eval_rounds must be >= 1");
  if (synth_count < 1) throw ContractError("TrainConfig: synth_count must be >= 1");
  if (threads < 1) throw ContractError("TrainConfig: threads must be >= 1");
  loss.validate();
  net.validate();
  if (data_root.empty()) synth.validate();
}

namespace {

template <std::size_t N>
std::array<int, N> fixed_ints(const KeyValueFile& kv, const std::string& key) {
  const auto v = kv.get_ints(key);
  if (v.size() != N) {
    throw DataError("config key '" + key + "' needs exactly " + std::to_string(N) +
                    " comma-separated values, got " + std::to_string(v.size()));
  }
  std::array<int, N> out{};
  std::copy(v.begin(), v.end(), out.begin());
  return out;
}

}  // namespace

TrainConfig parse_train_config(const KeyValueFile& kv) {
  TrainConfig c;
  if (kv.has("network")) {
    const std::string& preset = kv.get("network");
    if (preset == "desk") {
      c.net = NetworkConfig::desk();
    } else if (preset != "default") {
      throw DataError("config key 'network': unknown preset '" + preset + "' (desk or default)");
    }
  }
  for (const auto& [key, value] : kv.values()) {
    if (key == "network") continue;
    else if (key == "base_lr") c.base_lr = kv.get_double(key);
    else if (key == "lr_warm_iters") c.lr_warm_iters = kv.get_long(key);
    else if (key == "lr_decay_period") c.lr_decay_period = kv.get_long(key);
    else if (key == "lr_floor") c.lr_floor = kv.get_double(key);
    else if (key == "stage1_iters") c.stage1_iters = kv.get_long(key);
    else if (key == "stage2_iters") c.stage2_iters = kv.get_long(key);
    else if (key == "batch_size") c.batch_size = static_cast<int>(kv.get_long(key));
    else if (key == "seed") c.seed = static_cast<std::uint64_t>(kv.get_long(key));
    else if (key == "log_interval") c.log_interval = static_cast<int>(kv.get_long(key));
    else if (key == "checkpoint_interval") c.checkpoint_interval = kv.get_long(key);
    else if (key == "checkpoint_dir") c.checkpoint_dir = value;
    else if (key == "alpha1") c.loss.alpha1 = kv.get_double(key);
    else if (key == "alpha2") c.loss.alpha2 = kv.get_double(key);
    else if (key == "beta2") c.loss.beta2 = kv.get_double(key);
    else if (key == "image_channels") c.net.image_channels = static_cast<int>(kv.get_long(key));
    else if (key == "feat_channels") c.net.feat_channels = fixed_ints<4>(kv, key);
    else if (key == "redir_channels") c.net.redir_channels = static_cast<int>(kv.get_long(key));
    else if (key == "encode_channels") c.net.encode_channels = fixed_ints<4>(kv, key);
    else if (key == "decode_channels") c.net.decode_channels = fixed_ints<6>(kv, key);
    else if (key == "maxdisp") c.net.shift_cfg.maxdisp = static_cast<int>(kv.get_long(key));
    else if (key == "clue_filters") c.net.shift_cfg.clue_filters = static_cast<int>(kv.get_long(key));
    else if (key == "variant") c.net.shift_cfg.variant = parse_variant(value);
    else if (key == "both_directions") c.net.shift_cfg.both_directions = kv.get_bool(key);
    else if (key == "cost_volume") c.net.cost_volume = parse_cost_volume(value);
    else if (key == "refine_enabled") c.net.refine_enabled = kv.get_bool(key);
    else if (key == "small_map_scale") c.net.small_map_scale = static_cast<int>(kv.get_long(key));
    else if (key == "data_root") c.data_root = value;
    else if (key == "synth_count") c.synth_count = static_cast<int>(kv.get_long(key));
    else if (key == "synth_width") c.synth.width = static_cast<int>(kv.get_long(key));
    else if (key == "synth_height") c.synth.height = static_cast<int>(kv.get_long(key));
    else if (key == "synth_channels") c.synth.channels = static_cast<int>(kv.get_long(key));
    else if (key == "synth_shapes") c.synth.num_shapes = static_cast<int>(kv.get_long(key));
    else if (key == "synth_disp_min") c.synth.disp_min = static_cast<int>(kv.get_long(key));
    else if (key == "synth_disp_max") c.synth.disp_max = static_cast<int>(kv.get_long(key));
    else if (key == "synth_background_disp") c.synth.background_disp = static_cast<int>(kv.get_long(key));
    else if (key == "synth_seed") c.synth.seed = static_cast<std::uint64_t>(kv.get_long(key));
    else if (key == "eval_warmup") c.eval_warmup = static_cast<int>(kv.get_long(key));
    else if (key == "eval_forwards") c.eval_forwards = static_cast<int>(kv.get_long(key));
    else if (key == "eval_rounds") c.eval_rounds = static_cast<int>(kv.get_long(key));
    else if (key == "ablate_iters") c.ablate_iters = kv.get_long(key);
    else if (key == "threads") c.threads = static_cast<int>(kv.get_long(key));
    else throw DataError("unknown config key '" + key + "'");
  }
  try {
    c.validate();
  } catch (const ContractError& e) {
    throw DataError(e.what());
  }
  return c;
}

TrainConfig load_train_config(const std::filesystem::path& path) {
  return parse_train_config(KeyValueFile::load(path));
}

double lr_schedule(long iteration, const TrainConfig& cfg) {
  if (iteration < cfg.lr_warm_iters) return cfg.base_lr;
  const long halvings = 1 + (iteration - cfg.lr_warm_iters) / cfg.lr_decay_period;
  // Past ~1000 halvings the value underflows; the floor applies long before.
  const double lr = std::ldexp(cfg.base_lr, -static_cast<int>(std::min(halvings, 1000L)));
  return std::max(lr, cfg.lr_floor);
}

int sample_index(long iteration, int k, int batch_size, int dataset_size, std::uint64_t seed) {
  const long draw = iteration * batch_size + k;
  const long epoch = draw / dataset_size;
  const int pos = static_cast<int>(draw % dataset_size);
  std::vector<int> order(dataset_size);
  std::iota(order.begin(), order.end(), 0);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch), static_cast<std::uint32_t>(epoch >> 32)};
  std::mt19937_64 rng(seq);
  // Fisher-Yates with an explicit draw so the order does not depend on the
  // standard library's shuffle implementation.
  for (int i = dataset_size - 1; i > 0; --i) {
    const int j = static_cast<int>(rng() % static_cast<std::uint64_t>(i + 1));
    std::swap(order[i], order[j]);
  }
  return order[pos];
}

namespace {

Tensor<float> stack(const std::vector<Tensor<float>>& parts) {
  return stack_batch<float>(std::span<const Tensor<float>>(parts));
}

double batch_epe(const Tensor<float>& pred, const Tensor<float>& gt) {
  double total = 0.0;
  for (int n = 0; n < pred.shape().n; ++n) {
    total += epe(DisparityMap::from_tensor(pred, n), DisparityMap::from_tensor(gt, n));
  }
  return total / pred.shape().n;
}

}  // namespace

TrainResult train_stage(int stage, const TrainConfig& cfg, const std::vector<StereoSample>& data,
                        const Checkpoint* resume, long iterations, std::ostream* log) {
  if (stage != 1 && stage != 2) throw ContractError("train_stage: stage must be 1 or 2");
  if (iterations < 0) throw ContractError("train_stage: iterations must be >= 0");
  if (data.empty()) throw DataError("train_stage: no training data");
  cfg.validate();
  ops::set_num_threads(cfg.threads);

  NetworkConfig ncfg = cfg.net;
  ncfg.refine_enabled = stage == 2;
  std::optional<Network<float>> net;
  Adam opt;
  long first = 0;
  if (resume) {
    auto restored = restore_checkpoint(*resume, ncfg);
    net.emplace(std::move(restored.net));
    opt = std::move(restored.opt);
    first = static_cast<long>(resume->iteration);
  } else {
    net.emplace(ncfg, cfg.seed);
    opt = Adam(net->params());
  }
  const auto decayed = net->params().decayed();
  const int scale = ncfg.small_map_scale;

  TrainResult result;
  result.losses.reserve(iterations);
  if (log) {
    *log << "# stage=" << stage << " start_iter=" << first << " iterations=" << iterations
         << " data_order_seed=" << cfg.seed << " samples=" << data.size() << "\n";
  }
  for (long i = 0; i < iterations; ++i) {
    const long iter = first + i;
    std::vector<Tensor<float>> lefts, rights, gts;
    for (int k = 0; k < cfg.batch_size; ++k) {
      const auto& s = data[sample_index(iter, k, cfg.batch_size, static_cast<int>(data.size()),
                                        cfg.seed)];
      lefts.push_back(s.left);
      rights.push_back(s.right);
      gts.push_back(s.gt_disp.to_tensor<float>());
    }
    const Tensor<float> gt = stack(gts);

    Graph<float> g;
    const auto out = net->forward(g, stack(lefts), stack(rights), stage == 2);
    Var<float> loss;
    Var<float> pred;
    if (stage == 1) {
      pred = out.coarse;
      loss = loss1(g, out.coarse, gt, decayed, cfg.loss);
    } else {
      pred = out.refined;
      const Tensor<float> small_gt =
          resize_nearest(gt, gt.shape().h / scale, gt.shape().w / scale, true);
      loss = loss2(g, out.refined, gt, out.small, small_gt, decayed, cfg.loss);
    }
    const double loss_value = loss->value[0];
    if (!std::isfinite(loss_value)) {
      throw NumericalError("non-finite loss at iteration " + std::to_string(iter));
    }
    const double lr = lr_schedule(iter, cfg);
    g.backward(loss);
    try {
      opt.step(net->params(), lr);
    } catch (const NumericalError& e) {
      throw NumericalError(std::string(e.what()) + " at iteration " + std::to_string(iter));
    }
    net->params().zero_grad();
    result.losses.push_back(loss_value);

    const long done = iter + 1;
    if (done % cfg.log_interval == 0 || i + 1 == iterations) {
      const LogEntry entry{done, lr, loss_value, batch_epe(pred->value, gt)};
      result.log.push_back(entry);
      if (log) {
        char line[160];
        std::snprintf(line, sizeof line, "iter=%ld lr=%.6g loss=%.6g epe=%.6g\n", entry.iteration,
                      entry.lr, entry.loss, entry.epe);
        *log << line << std::flush;
      }
    }
    if (cfg.checkpoint_interval > 0 && !cfg.checkpoint_dir.empty() &&
        done % cfg.checkpoint_interval == 0) {
      checkpoint_save(make_checkpoint(*net, opt, done, stage),
                      std::filesystem::path(cfg.checkpoint_dir) /
                          ("stage" + std::to_string(stage) + "_" + std::to_string(done) + ".scnc"));
    }
  }
  result.checkpoint = make_checkpoint(*net, opt, first + iterations, stage);
  return result;
}

namespace {

template <class Fn>
double fastest_window_mean(Fn&& run, int warmup, int forwards, int rounds) {
  for (int i = 0; i < warmup; ++i) run();
  const int n = std::max(forwards, 1);
  double best = std::numeric_limits<double>::infinity();
  for (int r = 0; r < std::max(rounds, 1); ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < n; ++i) run();
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
    best = std::min(best, dt.count() / n);
  }
  return best;
}

}  // namespace

Predictor network_predictor(const Network<float>& net) {
  return [&net](const StereoSample& s) {
    Graph<float> g(false);
    const auto out = net.forward(g, s.left, s.right);
    return DisparityMap::from_tensor(out.refined ? out.refined->value : out.coarse->value);
  };
}

EvalReport evaluate(const Predictor& predict, const std::vector<DatasetEntry>& data,
                    const EvalOptions& options) {
  if (data.empty()) throw DataError("evaluate: empty dataset");
  EvalReport report;
  double err_sum = 0.0;
  std::size_t bad = 0;
  std::size_t count = 0;
  for (const auto& entry : data) {
    const DisparityMap pred = predict(entry.sample);
    const DisparityMap& gt = entry.sample.gt_disp;
    const PixelMask mask = valid_mask(gt);
    const std::size_t n = static_cast<std::size_t>(std::count(mask.begin(), mask.end(), 1));
    const double e = epe(pred, gt, mask);
    const double d1 = d1_rate(pred, gt, mask);
    report.samples.push_back({entry.id, e, d1});
    err_sum += e * static_cast<double>(n);
    bad += static_cast<std::size_t>(std::llround(d1 * static_cast<double>(n)));
    count += n;
  }
  report.epe = err_sum / static_cast<double>(count);
  report.d1 = static_cast<double>(bad) / static_cast<double>(count);

  if (options.time_forward && options.forwards > 0) {
    const StereoSample& s = data.front().sample;
    report.mean_forward_seconds = fastest_window_mean([&] { predict(s); }, options.warmup,
                                                      options.forwards, options.rounds);
  }
  return report;
}

EvalReport evaluate(const Network<float>& net, const std::vector<DatasetEntry>& data,
                    const EvalOptions& options) {
  EvalReport r = evaluate(network_predictor(net), data, options);
  const auto& cfg = net.config();
  if (cfg.cost_volume == CostVolumeKind::Correlation) {
    r.variant = "correlation";
  } else {
    r.variant = to_string(cfg.shift_cfg.variant);
    r.filters = cfg.shift_cfg.clue_filters;
  }
  return r;
}

std::string format_eval_table(const EvalReport& report) {
  std::ostringstream os;
  char line[200];
  std::snprintf(line, sizeof line, "%-20s %8s %12s %10s %10s\n", "variant", "filters", "time_s",
                "EPE", "D1_%");
  os << line;
  std::snprintf(line, sizeof line, "%-20s %8d %12.4f %10.4f %10.2f\n", report.variant.c_str(),
                report.filters, report.mean_forward_seconds, report.epe, 100.0 * report.d1);
  os << line << "\n";
  std::snprintf(line, sizeof line, "%-20s %10s %10s\n", "sample", "EPE", "D1_%");
  os << line;
  for (const auto& s : report.samples) {
    std::snprintf(line, sizeof line, "%-20s %10.4f %10.2f\n", s.id.c_str(), s.epe, 100.0 * s.d1);
    os << line;
  }
  return os.str();
}

std::string format_eval_csv(const EvalReport& report) {
  std::ostringstream os;
  char line[200];
  os << "sample,epe,d1_percent\n";
  for (const auto& s : report.samples) {
    std::snprintf(line, sizeof line, "%s,%.9g,%.9g\n", s.id.c_str(), s.epe, 100.0 * s.d1);
    os << line;
  }
  std::snprintf(line, sizeof line, "ALL,%.9g,%.9g\n", report.epe, 100.0 * report.d1);
  os << line;
  std::snprintf(line, sizeof line, "# variant=%s filters=%d mean_forward_s=%.9g\n",
                report.variant.c_str(), report.filters, report.mean_forward_seconds);
  os << line;
  return os.str();
}

double time_forward(const Network<float>& net, const StereoSample& sample, int warmup,
                    int forwards, int rounds) {
  return fastest_window_mean(
      [&] {
        Graph<float> g(false);
        net.forward(g, sample.left, sample.right);
      },
      warmup, forwards, rounds);
}

std::vector<std::pair<std::string, NetworkConfig>> ablation_configs(const NetworkConfig& base) {
  std::vector<std::pair<std::string, NetworkConfig>> out;
  for (auto variant :
       {ShiftConvVariant::ConvPerScaleThenConcat, ShiftConvVariant::ConcatAllThenConv}) {
    for (int filters : {8, 12, 16}) {
      NetworkConfig c = base;
      c.cost_volume = CostVolumeKind::ShiftConv;
      c.shift_cfg.variant = variant;
      c.shift_cfg.clue_filters = filters;
      c.refine_enabled = false;
      out.emplace_back(to_string(variant), c);
    }
  }
  NetworkConfig corr = base;
  corr.cost_volume = CostVolumeKind::Correlation;
  corr.refine_enabled = false;
  out.emplace_back("correlation", corr);
  return out;
}

std::vector<AblationRow> ablation_suite(const TrainConfig& cfg,
                                        const std::vector<DatasetEntry>& data, std::ostream* log) {
  const auto samples = samples_of(data);
  std::vector<AblationRow> rows;
  for (const auto& [label, ncfg] : ablation_configs(cfg.net)) {
    TrainConfig c = cfg;
    c.net = ncfg;
    if (log) {
      *log << "# ablation variant=" << label << " filters="
           << (ncfg.cost_volume == CostVolumeKind::Correlation ? 0 : ncfg.shift_cfg.clue_filters)
           << " seed=" << c.seed << " iterations=" << c.ablate_iters << "\n";
    }
    const auto trained = train_stage(1, c, samples, nullptr, c.ablate_iters, log);
    const auto state = restore_checkpoint(trained.checkpoint, ncfg);
    const auto report = evaluate(state.net, data, EvalOptions{c.eval_warmup, c.eval_forwards, true, c.eval_rounds});
    AblationRow row;
    row.variant = label;
    row.filters = ncfg.cost_volume == CostVolumeKind::Correlation ? 0 : ncfg.shift_cfg.clue_filters;
    row.forward_seconds = report.mean_forward_seconds;
    row.epe = report.epe;
    row.iterations = c.ablate_iters;
    row.seed = c.seed;
    row.parameters = state.net.params().scalar_count();
    rows.push_back(row);
  }
  return rows;
}

std::vector<AblationRow> bench_suite(const TrainConfig& cfg, const StereoSample& sample) {
  ops::set_num_threads(cfg.threads);
  std::vector<AblationRow> rows;
  for (const auto& [label, ncfg] : ablation_configs(cfg.net)) {
    Network<float> net(ncfg, cfg.seed);
    AblationRow row;
    row.variant = label;
    row.filters = ncfg.cost_volume == CostVolumeKind::Correlation ? 0 : ncfg.shift_cfg.clue_filters;
    row.forward_seconds = time_forward(net, sample, cfg.eval_warmup, cfg.eval_forwards, cfg.eval_rounds);
    row.epe = std::nan("");
    row.seed = cfg.seed;
    row.parameters = net.params().scalar_count();
    rows.push_back(row);
  }
  return rows;
}

std::string format_ablation_table(const std::vector<AblationRow>& rows) {
  std::ostringstream os;
  char line[200];
  std::snprintf(line, sizeof line, "%-20s %8s %12s %10s %10s %12s %8s\n", "variant", "filters",
                "time_s", "EPE", "iters", "params", "seed");
  os << line;
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%-20s %8d %12.4f %10.4f %10ld %12zu %8llu\n",
                  r.variant.c_str(), r.filters, r.forward_seconds, r.epe, r.iterations,
                  r.parameters, static_cast<unsigned long long>(r.seed));
    os << line;
  }
  return os.str();
}

std::string format_ablation_csv(const std::vector<AblationRow>& rows) {
  std::ostringstream os;
  os << "variant,filters,time_s,epe,iterations,parameters,seed\n";
  char line[200];
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%s,%d,%.9g,%.9g,%ld,%zu,%llu\n", r.variant.c_str(), r.filters,
                  r.forward_seconds, r.epe, r.iterations, r.parameters,
                  static_cast<unsigned long long>(r.seed));
    os << line;
  }
  return os.str();
}

std::vector<DatasetEntry> load_training_data(const TrainConfig& cfg) {
  if (!cfg.data_root.empty()) return load_dataset(cfg.data_root);
  std::vector<DatasetEntry> out;
  const auto samples = synthetic_samples(cfg.synth, cfg.synth_count);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    char id[16];
    std::snprintf(id, sizeof id, "%06zu", i);
    out.push_back({id, samples[i]});
  }
  return out;
}

std::vector<StereoSample> samples_of(const std::vector<DatasetEntry>& entries) {
  std::vector<StereoSample> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.sample);
  return out;
}

}  // namespace shiftconv
