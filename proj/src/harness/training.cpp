// Copyright 2026 The Madam Authors
// SPDX-License-Identifier: Apache-2.0

#include "madam/harness/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <random>

#include "madam/harness/schedule.hpp"
#include "madam/lns.hpp"
#include "madam/theory.hpp"

namespace madam::harness {

using nlohmann::json;

namespace {

constexpr std::size_t kGammaRows = 256;

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

bool all_finite(const std::vector<Tensor>& ts) {
  return std::all_of(ts.begin(), ts.end(), [](const Tensor& t) { return t.all_finite(); });
}

std::vector<std::int8_t> sign_pattern(const std::vector<Tensor>& params) {
  std::vector<std::int8_t> out;
  for (const auto& t : params)
    for (double v : t.data()) out.push_back(static_cast<std::int8_t>(sign(v)));
  return out;
}

// A multiplicative step can underflow a weight to zero but never carry it
// across zero. Zeros are counted; flips are a bug.
void check_signs(const std::vector<std::int8_t>& initial, const std::vector<Tensor>& params, std::size_t epoch,
                 std::size_t& zeroed) {
  const std::vector<std::int8_t> now = sign_pattern(params);
  zeroed = 0;
  for (std::size_t i = 0; i < now.size(); ++i) {
    if (now[i] * initial[i] < 0)
      throw SignPatternError("weight " + std::to_string(i) + " changed sign during epoch " + std::to_string(epoch));
    zeroed += now[i] == 0 && initial[i] != 0;
  }
}

struct Evaluator {
  const Split& split;
  Dataset gamma_batch;

  explicit Evaluator(const Split& s) : split(s) {
    std::vector<std::size_t> rows(std::min(kGammaRows, s.train.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    gamma_batch = s.train.subset(rows);
  }

  EpochRecord evaluate(const Mlp& net, std::size_t epoch, double lr) const {
    EpochRecord r;
    r.epoch = epoch;
    r.learning_rate = lr;
    r.train_loss = loss(net, split.train);
    const Tensor out = predict(net, split.test.inputs);
    r.eval_loss = loss(out, split.test);
    if (split.test.kind == TaskKind::Classification) r.eval_accuracy = accuracy(out, split.test.labels);
    for (const auto& l : net.layers()) r.weight_norms.push_back(frobenius_norm(l.weight));
    if (std::isfinite(r.train_loss)) {
      try {
        r.cos_gamma = theory::cos_gamma(net, backward(net, gamma_batch));
      } catch (const DegenerateAngleError&) {
        // Vanishing gradient on the probe batch; leave cos gamma unreported.
      }
    }
    return r;
  }
};

double final_metric(const EpochRecord& r, TaskKind kind) {
  return kind == TaskKind::Classification ? 1.0 - r.eval_accuracy.value_or(0.0) : r.eval_loss;
}

class OutputSink {
 public:
  OutputSink(const ExperimentConfig& config, bool enabled) {
    if (!enabled || config.output_dir.empty()) return;
    dir_ = config.output_dir;
    std::filesystem::create_directories(dir_);
    metrics_.open(dir_ / "metrics.jsonl", std::ios::trunc);
    if (!metrics_) throw std::ios_base::failure("cannot write " + (dir_ / "metrics.jsonl").string());
    std::ofstream(dir_ / "config.json") << to_json(config).dump(2) << "\n";
  }

  void epoch(const EpochRecord& r) {
    if (!metrics_.is_open()) return;
    metrics_ << to_json(r).dump() << "\n";
    metrics_.flush();
  }

  void finish(const TrialRecord& record, const TrainResult& result, const Optimizer& opt) {
    if (dir_.empty()) return;
    std::ofstream(dir_ / "summary.json") << to_json(record).dump(2) << "\n";
    if (result.checkpoint) {
      save_checkpoint(dir_ / "checkpoint.lns", *result.checkpoint);
      return;
    }
    json layers = json::array();
    const auto* madam = dynamic_cast<const MadamOptimizer*>(&opt);
    for (std::size_t k = 0; k < result.model.depth(); ++k) {
      const auto& l = result.model.layer(k);
      json entry = {{"weight_shape", l.weight.shape()}, {"weight", l.weight.values()}, {"bias", l.bias.values()}};
      if (madam) {
        entry["weight_gbar_sq"] = madam->state().gbar_sq[2 * k].values();
        entry["bias_gbar_sq"] = madam->state().gbar_sq[2 * k + 1].values();
      }
      layers.push_back(std::move(entry));
    }
    std::ofstream(dir_ / "checkpoint.json") << json{{"layers", layers}}.dump() << "\n";
  }

 private:
  std::filesystem::path dir_;
  std::ofstream metrics_;
};

}  // namespace

json to_json(const EpochRecord& r) {
  json j = {{"epoch", r.epoch},
            {"train_loss", finite_or_null(r.train_loss)},
            {"eval_loss", finite_or_null(r.eval_loss)},
            {"learning_rate", r.learning_rate},
            {"cos_gamma", r.cos_gamma},
            {"weight_norms", r.weight_norms}};
  j["eval_accuracy"] = r.eval_accuracy ? json(*r.eval_accuracy) : json(nullptr);
  return j;
}

json to_json(const TrialRecord& r) {
  json epochs = json::array();
  for (const auto& e : r.epochs) epochs.push_back(to_json(e));
  json j = {{"config_hash", r.config_hash},
            {"optimizer", r.optimizer},
            {"initial_eta", r.initial_eta},
            {"initial", to_json(r.initial)},
            {"epochs", epochs},
            {"diverged", r.diverged},
            {"decays", r.decays},
            {"underflowed_weights", r.underflowed_weights},
            {"final_metric", finite_or_null(r.final_metric)},
            {"metric_name", r.metric_name},
            {"wall_seconds", r.wall_seconds}};
  j["bits"] = r.bits ? json(*r.bits) : json(nullptr);
  return j;
}

Split load_task(const TaskConfig& task) {
  Dataset data;
  if (task.dataset == "csv") {
    data = load_dataset(task.path, task.kind);
  } else {
    GeneratorParams p;
    p.kind = parse_dataset_kind(task.dataset);
    p.n = task.n;
    p.noise = task.noise;
    p.seed = task.seed;
    p.dim = task.dim;
    p.classes = task.classes;
    data = generate_dataset(p).data;
  }
  return train_test_split(data, task.test_fraction, task.seed + 1);
}

std::vector<double> sigma_star_per_tensor(const Mlp& net, double multiplier, double bias_std) {
  std::vector<double> out;
  for (const auto& l : net.layers()) {
    out.push_back(multiplier / std::sqrt(static_cast<double>(l.fan_in())));
    out.push_back(multiplier * bias_std);
  }
  return out;
}

std::pair<double, double> ladder_step_sizes(double eta, double eta_star_ratio, double eta0) {
  const double e = snap_to_rungs(eta, eta0);
  const double e_star = std::max(e, snap_to_rungs(eta_star_ratio * e, eta0));
  return {e, e_star};
}

TrainResult run_training(const ExperimentConfig& config, const TrainOptions& options) {
  config.validate();
  const auto started = std::chrono::steady_clock::now();
  const Split split = load_task(config.task);
  const TaskKind kind = split.train.kind;
  const Evaluator evaluator(split);

  std::vector<std::size_t> widths{split.train.input_width()};
  widths.insert(widths.end(), config.model.hidden.begin(), config.model.hidden.end());
  widths.push_back(split.train.output_width());

  std::mt19937_64 rng(config.seed);
  Mlp net = Mlp::random_normal(widths, rng, config.model.leak, kBiasInitStd);
  const auto& oc = config.optimizer;
  const std::vector<double> sigma = sigma_star_per_tensor(net, oc.sigma_star_multiplier, kBiasInitStd);

  std::vector<Tensor> params = flatten_params(net);
  std::unique_ptr<Optimizer> opt;
  LnsMadamOptimizer* ladder = nullptr;
  double eta_floor = 0.0;
  if (config.lns.enabled) {
    std::vector<LnsTensor> weights;
    for (std::size_t i = 0; i < params.size(); ++i) {
      const LnsSpec spec{config.lns.bits, config.lns.eta0, sigma[i]};
      weights.push_back(ladder_init(spec, params[i].shape(), rng));
    }
    const auto [eta, eta_star] = ladder_step_sizes(oc.eta, oc.eta_star_ratio, config.lns.eta0);
    MadamState state = make_lns_madam_state(weights, eta, eta_star / eta, oc.beta);
    auto owned = std::make_unique<LnsMadamOptimizer>(std::move(weights), std::move(state));
    ladder = owned.get();
    params = ladder->decoded();
    opt = std::move(owned);
    eta_floor = config.lns.eta_floor.value_or(config.lns.eta0);
  } else if (oc.name == "madam") {
    opt = std::make_unique<MadamOptimizer>(
        MadamState::for_params(params, sigma, oc.eta, oc.eta_star_ratio, oc.beta));
  } else if (oc.name == "sgd") {
    opt = std::make_unique<SgdOptimizer>(SgdState::for_params(params, oc.eta, oc.momentum, oc.weight_decay));
  } else if (oc.name == "adam") {
    opt = std::make_unique<AdamOptimizer>(
        AdamState::for_params(params, oc.eta, oc.beta1, oc.beta2, oc.adam_eps, oc.weight_decay));
  } else {
    opt = std::make_unique<LarsOptimizer>(oc.eta);
  }
  assign_params(net, params);

  TrainResult result;
  TrialRecord& record = result.record;
  record.config_hash = config_hash(config);
  record.optimizer = opt->name();
  record.initial_eta = opt->learning_rate();
  if (config.lns.enabled) record.bits = config.lns.bits;
  record.metric_name = kind == TaskKind::Classification ? "test_error" : "test_mse";

  OutputSink sink(config, options.write_outputs);
  record.initial = evaluator.evaluate(net, 0, opt->learning_rate());
  sink.epoch(record.initial);
  if (options.observer) options.observer(record.initial, net, *opt);
  const std::vector<std::int8_t> initial_signs = sign_pattern(params);

  PlateauDetector plateau(config.schedule.patience, config.schedule.min_rel_improvement);
  if (config.schedule.decay == "plateau") plateau.observe(record.initial.eval_loss);

  const std::size_t n = split.train.size();
  const std::size_t batch = std::min(config.schedule.batch_size, n);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  for (std::size_t epoch = 1; epoch <= config.schedule.epochs && !record.diverged; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < n; start += batch) {
      const std::vector<std::size_t> rows(order.begin() + static_cast<std::ptrdiff_t>(start),
                                          order.begin() + static_cast<std::ptrdiff_t>(std::min(n, start + batch)));
      const GradientBundle grads = backward(net, split.train.subset(rows));
      const std::vector<Tensor> g = flatten_grads(grads);
      if (!std::isfinite(grads.loss_value) || !all_finite(g)) {
        record.diverged = true;
        break;
      }
      opt->step(params, g);
      if (!all_finite(params)) {
        record.diverged = true;
        break;
      }
      assign_params(net, params);
    }
    if (record.diverged) break;

    EpochRecord er = evaluator.evaluate(net, epoch, opt->learning_rate());
    if (!std::isfinite(er.train_loss) || !std::isfinite(er.eval_loss)) record.diverged = true;
    if (opt->multiplicative()) check_signs(initial_signs, params, epoch, record.underflowed_weights);
    record.epochs.push_back(er);
    sink.epoch(er);
    if (options.observer) options.observer(er, net, *opt);

    if (!record.diverged && config.schedule.decay == "plateau" && plateau.observe(er.eval_loss)) {
      const double lr = opt->learning_rate();
      const double next = ladder ? decay_lns(lr, config.schedule.decay_factor, config.lns.eta0, eta_floor)
                                 : decay_float(lr, config.schedule.decay_factor);
      if (next < lr) {
        opt->set_learning_rate(next);
        ++record.decays;
      }
    }
  }

  const EpochRecord& last = record.epochs.empty() ? record.initial : record.epochs.back();
  record.final_metric = record.diverged ? std::numeric_limits<double>::infinity() : final_metric(last, kind);
  record.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  result.model = net;
  if (ladder) {
    LnsCheckpoint ckpt;
    const auto& ws = ladder->weights();
    for (std::size_t i = 0; i < ws.size(); ++i) {
      const std::string name = "layer" + std::to_string(i / 2) + (i % 2 ? ".bias" : ".weight");
      const auto& gbar = ladder->state().gbar_sq[i];
      ckpt.layers.push_back({name, ws[i].reshaped({ws[i].size()}), gbar.reshaped({gbar.size()})});
    }
    result.checkpoint = std::move(ckpt);
  }
  sink.finish(record, result, *opt);
  return result;
}

TrialRecord train(const ExperimentConfig& config) { return run_training(config).record; }

}  // namespace madam::harness
