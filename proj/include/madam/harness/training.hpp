// Copyright 2026 The Madam Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "madam/checkpoint.hpp"
#include "madam/harness/config.hpp"
#include "madam/harness/datasets.hpp"
#include "madam/net.hpp"
#include "madam/optimizers.hpp"

namespace madam::harness {

/// A multiplicative optimizer carried a weight across zero.
class SignPatternError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double eval_loss = 0.0;
  std::optional<double> eval_accuracy;  // classification only
  double learning_rate = 0.0;
  std::vector<double> cos_gamma;     // per layer
  std::vector<double> weight_norms;  // per layer, weight matrix only
};

struct TrialRecord {
  std::string config_hash;
  std::string optimizer;
  double initial_eta = 0.0;
  std::optional<int> bits;  // set for ladder runs
  EpochRecord initial;      // before any step
  std::vector<EpochRecord> epochs;
  bool diverged = false;
  std::size_t decays = 0;
  /// Weights of a multiplicative run that reached exactly zero by underflow.
  std::size_t underflowed_weights = 0;
  /// Test error for classification, test MSE for regression; +inf when
  /// diverged.
  double final_metric = 0.0;
  std::string metric_name;
  double wall_seconds = 0.0;
};

nlohmann::json to_json(const EpochRecord& record);
nlohmann::json to_json(const TrialRecord& record);

/// Called after every epoch (and once for the initial evaluation).
using EpochObserver = std::function<void(const EpochRecord&, const Mlp&, const Optimizer&)>;

struct TrainOptions {
  EpochObserver observer;
  /// Write metrics.jsonl, summary.json, and a checkpoint into
  /// config.output_dir when it is set.
  bool write_outputs = true;
};

struct TrainResult {
  TrialRecord record;
  Mlp model;
  std::optional<LnsCheckpoint> checkpoint;  // ladder runs only
};

/// Loads or generates the task data and splits it.
Split load_task(const TaskConfig& task);

/// sigma_star per parameter tensor: multiplier times the initialisation
/// scale (1/sqrt(fan_in) for weights, bias_std for biases).
std::vector<double> sigma_star_per_tensor(const Mlp& net, double multiplier, double bias_std);

/// Eta and eta_star rounded to whole rungs of eta0 for a ladder run.
std::pair<double, double> ladder_step_sizes(double eta, double eta_star_ratio, double eta0);

TrainResult run_training(const ExperimentConfig& config, const TrainOptions& options = {});

/// Runs one trial and returns its record. Divergence is recorded, not thrown.
TrialRecord train(const ExperimentConfig& config);

inline constexpr double kBiasInitStd = 0.1;

}  // namespace madam::harness
