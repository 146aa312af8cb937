// Copyright 2026 The Madam Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "madam/harness/config.hpp"
#include "madam/harness/training.hpp"

namespace madam::harness {

/// 1-2-5 steps from lo to hi inclusive, e.g. 1e-4, 2e-4, 5e-4, ..., 1.
std::vector<double> log_grid_125(double lo, double hi);

struct GridCell {
  std::string optimizer;
  double eta = 0.0;
  TrialRecord record;
  /// best / this within the optimizer's row; 1.0 for the winner, 0 when
  /// diverged.
  double normalized_score = 0.0;
};

struct GridResult {
  std::vector<GridCell> cells;  // optimizer-major, eta ascending within each

  bool all_diverged() const;
  /// Winning eta for one optimizer; throws std::out_of_range if it has no
  /// finite cell.
  double best_eta(const std::string& optimizer) const;
};

/// Scores one optimizer's row given its final metrics (lower is better,
/// +inf for diverged cells). The smallest eta attaining the best metric
/// scores exactly 1.0; any other cell with an equal metric scores just below
/// 1.0 so the winner stays unique.
std::vector<double> normalize_scores(const std::vector<double>& final_metrics);

/// Runs one fixed-eta trial per (optimizer, eta). Decay is disabled in every
/// cell. threads = 0 uses the hardware concurrency.
GridResult grid_search(const ExperimentConfig& base, const std::vector<std::string>& optimizers,
                       const std::vector<double>& etas, std::size_t threads = 1);

/// Columns optimizer,eta,final_metric,normalized_score,diverged.
std::string grid_csv(const GridResult& grid);
nlohmann::json to_json(const GridResult& grid);

struct BitwidthRow {
  std::string label;  // "float" or "B=12" etc.
  std::optional<int> bits;
  double eta0 = 0.0;
  double dynamic_range = 0.0;
  std::vector<double> metrics;  // one per seed
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
};

struct BitwidthComparison {
  std::vector<BitwidthRow> rows;  // float first, then each B in the order given
  /// mean(highest B) <= mean(lowest B) + tolerance.
  bool monotone = false;
  double tolerance = 0.0;
};

/// Trains float Madam and ladder Madam at every B with eta0(B) chosen to keep
/// the dynamic range of config.lns (bits, eta0) fixed. Each row is repeated
/// over `seeds` consecutive seeds starting at config.seed.
BitwidthComparison compare_bitwidths(const ExperimentConfig& config, const std::vector<int>& bits = {12, 10, 8},
                                     std::size_t seeds = 3, double tolerance = 0.02);

std::string bitwidth_csv(const BitwidthComparison& cmp);
nlohmann::json to_json(const BitwidthComparison& cmp);

}  // namespace madam::harness
