// Copyright 2026 The Madam Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include "madam/harness/training.hpp"
#include "madam/lns.hpp"

using namespace madam;
using namespace madam::harness;

namespace {

ExperimentConfig small(std::size_t epochs = 5) {
  ExperimentConfig c;
  c.task.n = 200;
  c.model.hidden = {8};
  c.schedule.epochs = epochs;
  c.schedule.batch_size = 16;
  return c;
}

std::size_t count_lines(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) n += !line.empty();
  return n;
}

}  // namespace

TEST_CASE("zero epochs evaluates the initial model only") {
  const TrialRecord r = train(small(0));
  CHECK(r.epochs.empty());
  CHECK(r.initial.epoch == 0);
  CHECK(std::isfinite(r.initial.eval_loss));
  CHECK(r.initial.eval_accuracy.has_value());
  CHECK(r.final_metric == doctest::Approx(1.0 - *r.initial.eval_accuracy));
  CHECK(r.metric_name == "test_error");
}

TEST_CASE("training is deterministic") {
  for (const char* opt : {"madam", "sgd", "adam", "lars"}) {
    ExperimentConfig c = small();
    c.optimizer.name = opt;
    const TrialRecord a = train(c), b = train(c);
    CHECK(a.final_metric == b.final_metric);
    CHECK(a.epochs.back().train_loss == b.epochs.back().train_loss);
    CHECK(a.config_hash == b.config_hash);
    CHECK(a.epochs.size() == 5);
    c.seed = 1;
    CHECK(train(c).epochs.back().train_loss != a.epochs.back().train_loss);
  }
}

TEST_CASE("madam training reduces the loss on two moons") {
  ExperimentConfig c = small(30);
  c.task.n = 400;
  c.model.hidden = {16, 16};
  const TrialRecord r = train(c);
  CHECK_FALSE(r.diverged);
  CHECK(r.epochs.back().train_loss < 0.5 * r.initial.train_loss);
  CHECK(r.final_metric < 0.2);
}

TEST_CASE("regression reports test mse") {
  ExperimentConfig c = small();
  c.task.dataset = "random_regression";
  c.task.dim = 3;
  const TrialRecord r = train(c);
  CHECK(r.metric_name == "test_mse");
  CHECK_FALSE(r.initial.eval_accuracy.has_value());
  CHECK(r.final_metric == r.epochs.back().eval_loss);
}

TEST_CASE("ladder runs keep weights on the ladder and signs frozen") {
  ExperimentConfig c = small(8);
  c.lns.enabled = true;
  c.lns.bits = 8;
  c.lns.eta0 = 4.095 / 255;
  c.optimizer.eta = c.lns.eta0;
  std::vector<std::vector<std::int8_t>> first;
  std::size_t calls = 0;
  TrainOptions opts;
  opts.observer = [&](const EpochRecord&, const Mlp&, const Optimizer& opt) {
    const auto* lns = dynamic_cast<const LnsMadamOptimizer*>(&opt);
    REQUIRE(lns != nullptr);
    ++calls;
    std::vector<std::vector<std::int8_t>> signs;
    for (const LnsTensor& t : lns->weights()) {
      t.validate();
      CHECK(t.spec.bits == 8);
      signs.push_back(t.signs);
    }
    if (first.empty()) first = signs;
    CHECK(signs == first);
  };
  const TrainResult res = run_training(c, opts);
  CHECK(calls == 9);
  CHECK(res.record.bits == 8);
  REQUIRE(res.checkpoint.has_value());
  CHECK(res.checkpoint->layers.size() == 4);
  CHECK(res.checkpoint->layers[0].name == "layer0.weight");
  CHECK(res.checkpoint->layers[0].gbar_sq.has_value());

  // The returned model is exactly the decoded ladder.
  const auto params = flatten_params(res.model);
  for (std::size_t i = 0; i < params.size(); ++i)
    CHECK(params[i].values() == decode(res.checkpoint->layers[i].weights).values());
}

TEST_CASE("float madam keeps signs and the magnitude cap") {
  ExperimentConfig c = small(10);
  c.optimizer.eta = 0.05;
  std::vector<Tensor> first;
  double cap_violation = 0.0;
  TrainOptions opts;
  opts.observer = [&](const EpochRecord& er, const Mlp& net, const Optimizer&) {
    const auto p = flatten_params(net);
    if (first.empty()) first = p;
    const auto caps = sigma_star_per_tensor(net, c.optimizer.sigma_star_multiplier, kBiasInitStd);
    for (std::size_t i = 0; i < p.size(); ++i) {
      for (std::size_t j = 0; j < p[i].size(); ++j) {
        CHECK(std::signbit(p[i][j]) == std::signbit(first[i][j]));
        // The cap applies from the first step on; the initial draw may exceed it.
        if (er.epoch > 0) cap_violation = std::max(cap_violation, std::abs(p[i][j]) - caps[i]);
      }
    }
  };
  run_training(c, opts);
  CHECK(cap_violation <= 1e-15);
}

TEST_CASE("sigma star per tensor") {
  const Mlp net({{Tensor::zeros({3, 4}), Tensor::zeros({3})}, {Tensor::zeros({2, 3}), Tensor::zeros({2})}});
  const auto s = sigma_star_per_tensor(net, 3.0, 0.1);
  REQUIRE(s.size() == 4);
  CHECK(s[0] == doctest::Approx(3.0 / 2.0));
  CHECK(s[1] == doctest::Approx(0.3));
  CHECK(s[2] == doctest::Approx(3.0 / std::sqrt(3.0)));
}

TEST_CASE("ladder step sizes") {
  const auto [eta, eta_star] = ladder_step_sizes(0.0104, 8.0, 0.001);
  CHECK(eta == doctest::Approx(0.010));
  CHECK(eta_star == doctest::Approx(0.080));
  const auto [tiny, tiny_star] = ladder_step_sizes(1e-6, 8.0, 0.001);
  CHECK(tiny == doctest::Approx(0.001));
  CHECK(tiny_star == doctest::Approx(0.008));
}

TEST_CASE("divergence is recorded") {
  ExperimentConfig c = small();
  c.optimizer.name = "sgd";
  c.optimizer.eta = 1e3;
  c.task.dataset = "random_regression";
  const TrialRecord r = train(c);
  CHECK(r.diverged);
  CHECK(std::isinf(r.final_metric));
  CHECK(to_json(r)["final_metric"].is_null());
}

TEST_CASE("plateau decay lowers the rate") {
  ExperimentConfig c = small(40);
  c.optimizer.eta = 0.2;
  c.schedule.decay = "plateau";
  c.schedule.patience = 2;
  const TrialRecord r = train(c);
  CHECK(r.decays > 0);
  CHECK(r.epochs.back().learning_rate < 0.2);
}

TEST_CASE("output files") {
  const auto dir = std::filesystem::temp_directory_path() / "madam_test_training_out";
  std::filesystem::remove_all(dir);
  ExperimentConfig c = small(3);
  c.output_dir = dir.string();
  c.lns.enabled = true;
  train(c);
  CHECK(std::filesystem::exists(dir / "config.json"));
  CHECK(std::filesystem::exists(dir / "summary.json"));
  CHECK(count_lines(dir / "metrics.jsonl") == 4);
  const LnsCheckpoint ck = load_checkpoint(dir / "checkpoint.lns", 12);
  CHECK(ck.layers.size() == 4);

  // Float runs write the JSON weights instead.
  c.lns.enabled = false;
  std::filesystem::remove_all(dir);
  train(c);
  CHECK(std::filesystem::exists(dir / "checkpoint.json"));
  CHECK_FALSE(std::filesystem::exists(dir / "checkpoint.lns"));
  std::filesystem::remove_all(dir);
}
