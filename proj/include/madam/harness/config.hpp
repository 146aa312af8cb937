// Copyright 2026 The Madam Authors
// SPDX-License-Identifier: Apache-2.0
//
// Experiment configuration. The file form is JSON; every field is optional and
// falls back to the defaults below. Unknown keys are rejected. See README.md
// for the schema.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "madam/net.hpp"

namespace madam::harness {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TaskConfig {
  std::string dataset = "two_moons";  // generator name, or "csv"
  std::string path;                   // CSV file when dataset == "csv"
  TaskKind kind = TaskKind::Classification;  // used for CSV; generators imply it
  std::size_t n = 1000;
  double noise = 0.1;
  std::size_t dim = 2;
  std::size_t classes = 3;
  double test_fraction = 0.3;
  std::uint64_t seed = 0;  // data generation and split
};

struct ModelConfig {
  std::vector<std::size_t> hidden{32, 32};
  double leak = Mlp::kDefaultLeak;
};

struct OptimizerConfig {
  std::string name = "madam";  // madam | sgd | adam | lars
  double eta = 0.01;
  double eta_star_ratio = 8.0;
  double beta = 0.999;
  double sigma_star_multiplier = 3.0;
  double momentum = 0.9;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double weight_decay = 0.0;
};

struct LnsConfig {
  bool enabled = false;
  int bits = 12;
  double eta0 = 0.001;
  std::optional<double> eta_floor;  // defaults to eta0
};

struct ScheduleConfig {
  std::size_t epochs = 200;
  std::size_t batch_size = 32;
  std::string decay = "none";  // none | plateau
  double decay_factor = 10.0;
  std::size_t patience = 5;
  double min_rel_improvement = 0.001;
};

struct ExperimentConfig {
  TaskConfig task;
  ModelConfig model;
  OptimizerConfig optimizer;
  LnsConfig lns;
  ScheduleConfig schedule;
  std::uint64_t seed = 0;  // initialisation and batch order
  std::string output_dir;

  /// Throws ConfigError when a field is outside its documented range.
  void validate() const;
};

nlohmann::json to_json(const ExperimentConfig& config);
/// Throws ConfigError on unknown keys or wrongly typed values.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

/// 16 hex digits of FNV-1a over the canonical JSON, output_dir excluded.
std::string config_hash(const ExperimentConfig& config);

}  // namespace madam::harness
