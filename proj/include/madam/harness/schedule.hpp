// Copyright 2026 The Madam Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace madam::harness {

/// Decay-on-plateau trigger. The first observation sets the baseline. A later
/// observation counts as an improvement only if it beats the best value so
/// far by the relative margin min_rel_improvement. After `patience`
/// consecutive non-improving observations the detector signals and restarts
/// its count.
class PlateauDetector {
 public:
  static constexpr std::size_t kDefaultPatience = 5;
  static constexpr double kDefaultMinRelImprovement = 0.001;

  explicit PlateauDetector(std::size_t patience = kDefaultPatience,
                           double min_rel_improvement = kDefaultMinRelImprovement);

  /// Returns true when this observation completes a plateau.
  bool observe(double value);

  double best() const { return best_; }
  std::size_t stale_count() const { return stale_; }

 private:
  std::size_t patience_;
  double min_rel_;
  double best_ = std::numeric_limits<double>::infinity();
  bool started_ = false;
  std::size_t stale_ = 0;
};

/// Signal for each entry of a history when fed through a fresh detector.
std::vector<bool> plateau_signals(std::span<const double> history,
                                  std::size_t patience = PlateauDetector::kDefaultPatience,
                                  double min_rel_improvement = PlateauDetector::kDefaultMinRelImprovement);

/// Float path: eta / factor.
double decay_float(double eta, double factor);

/// Ladder path: eta / factor rounded to a whole number of rungs, never below
/// floor (itself rounded to rungs, at least one rung).
double decay_lns(double eta, double factor, double eta0, std::optional<double> floor = std::nullopt);

}  // namespace madam::harness
