// Copyright 2026 The Madam Authors
// SPDX-License-Identifier: Apache-2.0

#include "madam/harness/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "madam/lns.hpp"

namespace madam::harness {

PlateauDetector::PlateauDetector(std::size_t patience, double min_rel_improvement)
    : patience_(patience), min_rel_(min_rel_improvement) {
  if (patience_ < 1) throw std::invalid_argument("plateau patience must be at least 1");
  if (!(min_rel_ >= 0.0)) throw std::invalid_argument("plateau min relative improvement must be nonnegative");
}

bool PlateauDetector::observe(double value) {
  if (!started_) {
    started_ = true;
    best_ = value;
    return false;
  }
  if (value < best_ - min_rel_ * std::abs(best_)) {
    best_ = value;
    stale_ = 0;
    return false;
  }
  if (++stale_ >= patience_) {
    stale_ = 0;
    return true;
  }
  return false;
}

std::vector<bool> plateau_signals(std::span<const double> history, std::size_t patience, double min_rel_improvement) {
  PlateauDetector det(patience, min_rel_improvement);
  std::vector<bool> out;
  out.reserve(history.size());
  for (double v : history) out.push_back(det.observe(v));
  return out;
}

double decay_float(double eta, double factor) { return eta / factor; }

double decay_lns(double eta, double factor, double eta0, std::optional<double> floor) {
  const double lowest = snap_to_rungs(floor.value_or(eta0), eta0);
  return std::max(lowest, snap_to_rungs(eta / factor, eta0));
}

}  // namespace madam::harness
