// Copyright 2026 The Madam Authors
// SPDX-License-Identifier: Apache-2.0

#include "madam/harness/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <limits>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "madam/lns.hpp"

namespace madam::harness {

using nlohmann::json;

namespace {

std::string format_g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

// Full precision, so a tied runner-up does not print as 1.
std::string score_text(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

std::vector<double> log_grid_125(double lo, double hi) {
  if (!(lo > 0.0) || !(hi >= lo)) throw std::invalid_argument("log grid needs 0 < lo <= hi");
  std::vector<double> out;
  const int e0 = static_cast<int>(std::floor(std::log10(lo))) - 1;
  const int e1 = static_cast<int>(std::ceil(std::log10(hi))) + 1;
  for (int e = e0; e <= e1; ++e) {
    for (int m : {1, 2, 5}) {
      // Parse the decimal literal so 5e-3 is the double nearest 0.005.
      const double v = std::stod(std::to_string(m) + "e" + std::to_string(e));
      if (v >= lo * (1 - 1e-12) && v <= hi * (1 + 1e-12)) out.push_back(v);
    }
  }
  return out;
}

std::vector<double> normalize_scores(const std::vector<double>& metrics) {
  std::vector<double> scores(metrics.size(), 0.0);
  double best = std::numeric_limits<double>::infinity();
  for (double m : metrics)
    if (std::isfinite(m)) best = std::min(best, m);
  if (!std::isfinite(best)) return scores;
  bool winner_taken = false;
  for (std::size_t i = 0; i < metrics.size(); ++i) {
    const double m = metrics[i];
    if (!std::isfinite(m)) continue;
    if (m == best) {
      scores[i] = winner_taken ? std::nextafter(1.0, 0.0) : 1.0;
      winner_taken = true;
    } else {
      scores[i] = best / m;  // m > best >= 0
    }
  }
  return scores;
}

bool GridResult::all_diverged() const {
  return std::all_of(cells.begin(), cells.end(), [](const GridCell& c) { return c.record.diverged; });
}

double GridResult::best_eta(const std::string& optimizer) const {
  for (const auto& c : cells)
    if (c.optimizer == optimizer && c.normalized_score == 1.0) return c.eta;
  throw std::out_of_range("no finite grid cell for optimizer '" + optimizer + "'");
}

GridResult grid_search(const ExperimentConfig& base, const std::vector<std::string>& optimizers,
                       const std::vector<double>& etas, std::size_t threads) {
  if (optimizers.empty() || etas.empty()) throw ConfigError("grid needs at least one optimizer and one eta");
  std::vector<double> sorted = etas;
  std::sort(sorted.begin(), sorted.end());

  GridResult grid;
  std::vector<ExperimentConfig> configs;
  for (const auto& name : optimizers) {
    for (double eta : sorted) {
      ExperimentConfig c = base;
      c.optimizer.name = name;
      c.optimizer.eta = eta;
      c.schedule.decay = "none";
      if (name != "madam") c.lns.enabled = false;
      if (!base.output_dir.empty())
        c.output_dir = (std::filesystem::path(base.output_dir) / (name + "_eta" + format_g(eta))).string();
      c.validate();
      configs.push_back(std::move(c));
      grid.cells.push_back({name, eta, {}, 0.0});
    }
  }

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, configs.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < configs.size();) {
      try {
        grid.cells[i].record = train(configs[i]);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  for (std::size_t r = 0; r < optimizers.size(); ++r) {
    std::vector<double> metrics;
    for (std::size_t j = 0; j < sorted.size(); ++j) metrics.push_back(grid.cells[r * sorted.size() + j].record.final_metric);
    const std::vector<double> scores = normalize_scores(metrics);
    for (std::size_t j = 0; j < sorted.size(); ++j) grid.cells[r * sorted.size() + j].normalized_score = scores[j];
  }
  return grid;
}

std::string grid_csv(const GridResult& grid) {
  std::ostringstream out;
  out << "optimizer,eta,final_metric,normalized_score,diverged\n";
  for (const auto& c : grid.cells) {
    out << c.optimizer << ',' << format_g(c.eta) << ','
        << (std::isfinite(c.record.final_metric) ? format_g(c.record.final_metric) : "inf") << ','
        << score_text(c.normalized_score) << ',' << (c.record.diverged ? "true" : "false") << '\n';
  }
  return out.str();
}

json to_json(const GridResult& grid) {
  json cells = json::array();
  for (const auto& c : grid.cells) {
    cells.push_back({{"optimizer", c.optimizer},
                     {"eta", c.eta},
                     {"final_metric", finite_or_null(c.record.final_metric)},
                     {"normalized_score", c.normalized_score},
                     {"diverged", c.record.diverged},
                     {"config_hash", c.record.config_hash}});
  }
  return {{"cells", cells}, {"all_diverged", grid.all_diverged()}};
}

BitwidthComparison compare_bitwidths(const ExperimentConfig& config, const std::vector<int>& bits, std::size_t seeds,
                                     double tolerance) {
  if (bits.empty() || seeds == 0) throw ConfigError("bit-width comparison needs bits and at least one seed");
  const LnsSpec reference{config.lns.bits, config.lns.eta0, 1.0};
  reference.validate();
  const double log_range = static_cast<double>(reference.max_level()) * reference.eta0;

  auto run_row = [&](BitwidthRow row, const ExperimentConfig& c) {
    for (std::size_t s = 0; s < seeds; ++s) {
      ExperimentConfig trial = c;
      trial.seed = config.seed + s;
      if (!config.output_dir.empty())
        trial.output_dir =
            (std::filesystem::path(config.output_dir) / (row.label + "_seed" + std::to_string(trial.seed))).string();
      row.metrics.push_back(train(trial).final_metric);
    }
    row.mean = 0.0;
    for (double m : row.metrics) row.mean += m;
    row.mean /= static_cast<double>(row.metrics.size());
    row.min = *std::min_element(row.metrics.begin(), row.metrics.end());
    row.max = *std::max_element(row.metrics.begin(), row.metrics.end());
    return row;
  };

  BitwidthComparison cmp;
  cmp.tolerance = tolerance;
  ExperimentConfig fp = config;
  fp.optimizer.name = "madam";
  fp.lns.enabled = false;
  cmp.rows.push_back(run_row({"float", std::nullopt, 0.0, 0.0, {}, 0, 0, 0}, fp));
  for (int b : bits) {
    ExperimentConfig q = fp;
    q.lns.enabled = true;
    q.lns.bits = b;
    q.lns.eta0 = eta0_for_range(b, std::exp(log_range));
    const LnsSpec spec{b, q.lns.eta0, 1.0};
    cmp.rows.push_back(run_row({"B=" + std::to_string(b), b, q.lns.eta0, spec.dynamic_range(), {}, 0, 0, 0}, q));
  }

  const BitwidthRow* hi = nullptr;
  const BitwidthRow* lo = nullptr;
  for (const auto& r : cmp.rows) {
    if (!r.bits) continue;
    if (!hi || *r.bits > *hi->bits) hi = &r;
    if (!lo || *r.bits < *lo->bits) lo = &r;
  }
  cmp.monotone = hi && lo && hi->mean <= lo->mean + tolerance;
  return cmp;
}

std::string bitwidth_csv(const BitwidthComparison& cmp) {
  std::ostringstream out;
  out << "label,bits,eta0,dynamic_range,mean,min,max\n";
  for (const auto& r : cmp.rows) {
    out << r.label << ',' << (r.bits ? std::to_string(*r.bits) : "") << ',' << format_g(r.eta0) << ','
        << format_g(r.dynamic_range) << ',' << format_g(r.mean) << ',' << format_g(r.min) << ',' << format_g(r.max)
        << '\n';
  }
  return out.str();
}

json to_json(const BitwidthComparison& cmp) {
  json rows = json::array();
  for (const auto& r : cmp.rows) {
    json j = {{"label", r.label},
              {"eta0", r.eta0},
              {"dynamic_range", r.dynamic_range},
              {"metrics", json::array()},
              {"mean", finite_or_null(r.mean)},
              {"min", finite_or_null(r.min)},
              {"max", finite_or_null(r.max)}};
    for (double m : r.metrics) j["metrics"].push_back(finite_or_null(m));
    j["bits"] = r.bits ? json(*r.bits) : json(nullptr);
    rows.push_back(std::move(j));
  }
  return {{"rows", rows}, {"monotone", cmp.monotone}, {"tolerance", cmp.tolerance}};
}

}  // namespace madam::harness
