// Copyright 2026 The Madam Authors
// SPDX-License-Identifier: Apache-2.0
//
// End-to-end acceptance checks. Prints one PASS/FAIL line per check and exits
// nonzero if any check fails. Every threshold is a named constant below.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "../support/fd_oracle.hpp"
#include "madam/checkpoint.hpp"
#include "madam/harness/experiments.hpp"
#include "madam/harness/training.hpp"
#include "madam/lns.hpp"
#include "madam/net.hpp"
#include "madam/optimizers.hpp"
#include "madam/theory.hpp"

using namespace madam;

namespace {

// Gradient check.
constexpr int kGradNets = 100;
constexpr double kGradTol = 1e-6;
// Step identities.
constexpr int kIdentityNets = 100;
constexpr double kAngleTol = 1e-9;
constexpr double kRelStepTol = 1e-12;
// Eta bound for a deep net.
constexpr double kBoundLo = 0.0124, kBoundHi = 0.0125;
// Gaussian angle constant.
constexpr std::size_t kMcDim = 1000000, kMcTrials = 10;
constexpr double kMcTol = 0.005;
// Empirical descent.
constexpr int kDescentNets = 200;
constexpr double kDescentMinFraction = 0.95;
// First-order descent inequality.
constexpr int kGapInstances = 1000;
constexpr int kGapTSamples = 64;
constexpr double kGapSlackTol = 1e-9;
// Float invariants.
constexpr int kInvariantSteps = 10000;
constexpr double kLogStepTol = 1e-12;
// Ladder closure and storage.
constexpr int kLadderSteps = 10000;
constexpr int kRoundTrips = 100;
constexpr double kRange = 60.0, kRangeTol = 0.1;
// Quantized vs float tracking.
constexpr double kFineEta0 = 1e-6;
constexpr int kTrackSteps = 100;
constexpr double kTrackTolRungs = 10.0;
// Learning-rate grid.
const std::set<double> kMadamWindow{0.005, 0.01, 0.02};
constexpr double kSgdMinSpread = 10.0;
// Trainability.
constexpr double kFloatMinAccuracy = 0.95;
constexpr double kLadderMaxGap = 0.02;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

// ---------------------------------------------------------------------------

Outcome gradient_check() {
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<std::size_t> width(1, 16), depth(1, 4);
  double worst = 0.0;
  int done = 0, skipped = 0;
  while (done < kGradNets) {
    std::vector<std::size_t> widths{width(rng)};
    const std::size_t layers = depth(rng);
    for (std::size_t k = 0; k < layers; ++k) widths.push_back(width(rng));
    const TaskKind kind = done % 2 ? TaskKind::Classification : TaskKind::Regression;
    if (kind == TaskKind::Classification) widths.back() = std::max<std::size_t>(widths.back(), 2);
    const Mlp net = madam::testing::uniform_mlp(widths, rng);
    const Dataset batch = theory::random_batch(8, widths.front(), widths.back(), kind, rng);
    // A probe that crosses the relu kink does not measure a derivative.
    const auto numeric = madam::testing::numeric_gradient(net, batch);
    if (numeric.crossed_kink) {
      ++skipped;
      continue;
    }
    const auto a = flatten_grads(backward(net, batch));
    worst = std::max(worst, madam::testing::max_relative_error(a, numeric.grad));
    ++done;
  }
  return {worst < kGradTol, "max rel err " + fmt("%.3g", worst) + ", " + std::to_string(skipped) + " kink-crossing redraws"};
}

Outcome step_identities() {
  std::mt19937_64 rng(202);
  std::uniform_int_distribution<std::size_t> width(2, 16);
  std::uniform_real_distribution<double> log_eta(std::log(1e-3), std::log(0.5));
  double angle = 0.0, rel = 0.0;
  for (int i = 0; i < kIdentityNets; ++i) {
    const std::vector<std::size_t> widths{width(rng), width(rng), width(rng), width(rng)};
    const TaskKind kind = i % 2 ? TaskKind::Classification : TaskKind::Regression;
    const auto inst = theory::random_instance(widths, 8, kind, rng);
    for (const Tensor& p : flatten_params(inst.net))
      for (double v : p.data())
        if (v == 0.0) return {false, "random net has a zero weight"};
    const auto c = theory::verify_madam_descent(inst.net, inst.batch, std::exp(log_eta(rng)));
    angle = std::max(angle, c.max_angle_error);
    rel = std::max(rel, c.max_relative_step_error);
  }
  return {angle <= kAngleTol && rel <= kRelStepTol,
          "max |theta-gamma| " + fmt("%.3g", angle) + ", max |rel step - eta| " + fmt("%.3g", rel)};
}

Outcome deep_bound() {
  const double b = theory::theorem1_eta_bound(40, 0.64);
  return {b >= kBoundLo && b <= kBoundHi, "bound(40, 0.64) = " + fmt("%.6f", b)};
}

Outcome gaussian_constant() {
  const auto e = theory::gaussian_cos_gamma_mc(kMcDim, kMcTrials, 404);
  const double target = 2.0 / std::numbers::pi;
  return {std::abs(e.mean - target) <= kMcTol,
          "mean " + fmt("%.5f", e.mean) + " vs 2/pi " + fmt("%.5f", target) + ", stderr " + fmt("%.2g", e.stderr_)};
}

Outcome empirical_descent() {
  std::mt19937_64 rng(505);
  int down = 0;
  for (int i = 0; i < kDescentNets; ++i) {
    const TaskKind kind = i % 2 ? TaskKind::Classification : TaskKind::Regression;
    const auto inst = theory::random_instance({16, 16, 16, 16}, 16, kind, rng);
    const auto cg = theory::cos_gamma(inst.net, backward(inst.net, inst.batch));
    const double eta = 0.5 * theory::theorem1_eta_bound(3, *std::min_element(cg.begin(), cg.end()));
    down += theory::verify_madam_descent(inst.net, inst.batch, eta).loss_decreased();
  }
  const double frac = static_cast<double>(down) / kDescentNets;
  return {frac >= kDescentMinFraction, std::to_string(down) + "/" + std::to_string(kDescentNets) + " steps descended"};
}

Outcome descent_inequality() {
  std::mt19937_64 rng(606);
  std::uniform_int_distribution<std::size_t> width(2, 6), depth(1, 3);
  std::uniform_real_distribution<double> log_eta(std::log(1e-3), std::log(0.2));
  double worst = 1e300;
  int held = 0;
  for (int i = 0; i < kGapInstances; ++i) {
    std::vector<std::size_t> widths{width(rng)};
    const std::size_t layers = depth(rng);
    for (std::size_t k = 0; k < layers; ++k) widths.push_back(width(rng));
    const TaskKind kind = i % 2 ? TaskKind::Classification : TaskKind::Regression;
    const auto inst = theory::random_instance(widths, 4, kind, rng);
    const GradientBundle g = backward(inst.net, inst.batch);
    Perturbation delta;
    if (i % 3 == 0) {
      // Arbitrary direction of relative size eta.
      std::normal_distribution<double> n(0.0, 1.0);
      delta = zero_perturbation(inst.net);
      const double eta = std::exp(log_eta(rng));
      for (std::size_t k = 0; k < delta.size(); ++k) {
        for (double& v : delta[k].weight.data()) v = n(rng);
        for (double& v : delta[k].bias.data()) v = n(rng);
        const double s = eta * frobenius_norm(layer_group(inst.net.layer(k))) / frobenius_norm(layer_group(delta[k]));
        delta[k].weight = scale(delta[k].weight, s);
        delta[k].bias = scale(delta[k].bias, s);
      }
    } else {
      delta = theory::mult_sign_perturbation(inst.net, g, std::exp(log_eta(rng)));
    }
    const auto r = theory::descent_gap(inst.net, delta, inst.batch, kGapTSamples);
    worst = std::min(worst, r.slack);
    held += r.slack >= -kGapSlackTol;
  }
  return {held == kGapInstances,
          std::to_string(held) + "/" + std::to_string(kGapInstances) + " held, worst slack " + fmt("%.3g", worst)};
}

Outcome float_invariants() {
  std::mt19937_64 rng(707);
  std::size_t flips = 0;
  double worst_log = 0.0, worst_cap = -1e300;
  double eta_star_seen = 0.0;
  const double etas[] = {0.001, 0.01, 0.05};
  for (double eta : etas) {
    auto inst = theory::random_instance({6, 12, 12, 3}, 64, TaskKind::Classification, rng);
    std::vector<Tensor> params = flatten_params(inst.net);
    const auto caps = harness::sigma_star_per_tensor(inst.net, 3.0, harness::kBiasInitStd);
    for (std::size_t i = 0; i < params.size(); ++i) params[i] = clamp(params[i], caps[i]);
    MadamState state = MadamState::for_params(params, caps, eta);
    eta_star_seen = std::max(eta_star_seen, state.eta_star);
    std::uniform_int_distribution<std::size_t> row(0, inst.batch.size() - 1);
    for (int step = 0; step < kInvariantSteps; ++step) {
      std::vector<std::size_t> rows(8);
      for (auto& r : rows) r = row(rng);
      assign_params(inst.net, params);
      const auto grads = flatten_grads(backward(inst.net, inst.batch.subset(rows)));
      const std::vector<Tensor> before = params;
      madam_step(state, params, grads);
      for (std::size_t i = 0; i < params.size(); ++i) {
        for (std::size_t j = 0; j < params[i].size(); ++j) {
          const double w0 = before[i][j], w1 = params[i][j];
          if (w1 == 0.0 || std::signbit(w0) != std::signbit(w1)) {
            ++flips;
            continue;
          }
          worst_log = std::max(worst_log, std::abs(std::log(w1 / w0)) - state.eta_star);
          worst_cap = std::max(worst_cap, std::abs(w1) - caps[i]);
        }
      }
    }
  }
  const bool ok = flips == 0 && worst_log <= kLogStepTol && worst_cap <= 0.0;
  return {ok, std::to_string(flips) + " sign changes, max |log step| - eta* " + fmt("%.3g", worst_log) +
                  ", max |w| - sigma* " + fmt("%.3g", worst_cap)};
}

bool on_ladder(const LnsTensor& t, const Tensor& values) {
  const double top = static_cast<double>(t.spec.max_level());
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t.levels[i] > top || (t.signs[i] != 1 && t.signs[i] != -1)) return false;
    const double expect = t.signs[i] * t.spec.sigma_star * std::exp(-static_cast<double>(t.levels[i]) * t.spec.eta0);
    if (values[i] != expect) return false;
  }
  return true;
}

Outcome ladder_closure() {
  std::mt19937_64 rng(808);
  // 10^4 quantized steps driven by real gradients.
  auto inst = theory::random_instance({4, 10, 10, 3}, 64, TaskKind::Classification, rng);
  std::vector<LnsTensor> weights;
  for (const Tensor& p : flatten_params(inst.net)) weights.push_back(ladder_init({12, 0.001, 1.0}, p.shape(), rng));
  MadamState state = make_lns_madam_state(weights, 0.01, 8.0, 0.999);
  std::vector<std::vector<std::int8_t>> signs0;
  for (const auto& w : weights) signs0.push_back(w.signs);
  std::uniform_int_distribution<std::size_t> row(0, inst.batch.size() - 1);
  bool closed = true, frozen = true;
  for (int step = 0; step < kLadderSteps; ++step) {
    std::vector<Tensor> params;
    for (const auto& w : weights) params.push_back(decode(w));
    assign_params(inst.net, params);
    std::vector<std::size_t> rows(8);
    for (auto& r : rows) r = row(rng);
    quantized_madam_step(state, weights, flatten_grads(backward(inst.net, inst.batch.subset(rows))));
    for (std::size_t i = 0; i < weights.size(); ++i) {
      closed = closed && on_ladder(weights[i], decode(weights[i]));
      frozen = frozen && weights[i].signs == signs0[i];
    }
  }

  int exact = 0;
  std::uniform_int_distribution<int> bits(2, 24);
  std::uniform_int_distribution<std::size_t> len(1, 300);
  for (int t = 0; t < kRoundTrips; ++t) {
    LnsCheckpoint c;
    const std::size_t layers = 1 + rng() % 5;
    const int b = bits(rng);
    const LnsSpec spec{b, 4.0 / static_cast<double>((std::uint64_t{1} << b) - 1), 0.1 + 0.01 * static_cast<double>(t)};
    for (std::size_t k = 0; k < layers; ++k) {
      CheckpointLayer l{"t" + std::to_string(t) + "/" + std::to_string(k), ladder_init(spec, {len(rng)}, rng), {}};
      if (rng() % 2) {
        Tensor g({l.weights.size()});
        std::uniform_real_distribution<double> u(0.0, 10.0);
        for (double& v : g.data()) v = u(rng);
        l.gbar_sq = g;
      }
      c.layers.push_back(std::move(l));
    }
    const auto bytes = serialize(c);
    exact += deserialize(bytes) == c && serialize(deserialize(bytes)) == bytes;
  }

  const double range = LnsSpec{12, 0.001, 1.0}.dynamic_range();
  const bool range_ok = std::abs(range - kRange) <= kRangeTol && std::round(range * 10.0) / 10.0 == kRange;
  return {closed && frozen && exact == kRoundTrips && range_ok,
          std::string(closed ? "on ladder" : "OFF ladder") + (frozen ? ", signs frozen" : ", SIGN CHANGE") + ", " +
              std::to_string(exact) + "/" + std::to_string(kRoundTrips) + " bit-exact round trips, range " +
              fmt("%.4f", range)};
}

Outcome quantized_tracking() {
  std::mt19937_64 rng(909);
  const LnsSpec spec{24, kFineEta0, 1.0};
  std::vector<LnsTensor> q{ladder_init(spec, {64}, rng)};
  // Mid-ladder start, far from both ends.
  for (auto& k : q[0].levels) k = 3000000 + k % 1000000;
  std::vector<Tensor> f{decode(q[0])};
  MadamState qs = make_lns_madam_state(q, 0.01, 8.0, 0.999);
  MadamState fs = MadamState::for_params(f, {1.0}, 0.01, 8.0, 0.999);
  std::normal_distribution<double> n(0.0, 1.0);
  bool saturated = false;
  for (int step = 0; step < kTrackSteps; ++step) {
    Tensor g({64});
    for (double& v : g.data()) v = n(rng);
    quantized_madam_step(qs, q, std::vector<Tensor>{g});
    madam_step(fs, f, std::vector<Tensor>{g});
    for (std::size_t i = 0; i < 64; ++i) {
      saturated = saturated || q[0].levels[i] == 0 || q[0].levels[i] == spec.max_level();
      saturated = saturated || std::abs(f[0][i]) >= 1.0;
    }
  }
  const Tensor d = decode(q[0]);
  double worst = 0.0;
  for (std::size_t i = 0; i < 64; ++i) worst = std::max(worst, std::abs(d[i] / f[0][i] - 1.0));
  return {!saturated && worst < kTrackTolRungs * kFineEta0,
          std::string(saturated ? "SATURATED, " : "") + "max rel err " + fmt("%.2f", worst / kFineEta0) + " eta0"};
}

harness::ExperimentConfig grid_task(const std::string& dataset) {
  harness::ExperimentConfig c;
  c.task.dataset = dataset;
  c.task.n = 1000;
  c.model.hidden = {32, 32};
  c.seed = 0;
  if (dataset == "two_moons") {
    c.task.noise = 0.2;
    c.schedule.epochs = 30;
    c.schedule.batch_size = 32;
  } else if (dataset == "gaussian_blobs") {
    c.task.dim = 2;
    c.task.classes = 6;
    c.task.noise = 1.0;
    c.schedule.epochs = 20;
    c.schedule.batch_size = 8;
  } else {
    c.task.dim = 5;
    c.task.noise = 0.1;
    c.schedule.epochs = 20;
    c.schedule.batch_size = 128;
  }
  return c;
}

Outcome lr_insensitivity() {
  const auto etas = harness::log_grid_125(1e-4, 1.0);
  std::ostringstream detail;
  bool madam_ok = true;
  double sgd_lo = 1e300, sgd_hi = 0.0;
  for (const char* task : {"two_moons", "gaussian_blobs", "random_regression"}) {
    const auto grid = harness::grid_search(grid_task(task), {"madam", "sgd"}, etas);
    const double m = grid.best_eta("madam"), s = grid.best_eta("sgd");
    madam_ok = madam_ok && kMadamWindow.count(m);
    sgd_lo = std::min(sgd_lo, s);
    sgd_hi = std::max(sgd_hi, s);
    detail << task << " madam " << m << " sgd " << s << "; ";
  }
  const double spread = sgd_hi / sgd_lo;
  detail << "sgd spread " << fmt("%.3g", spread) << "x";
  return {madam_ok && spread >= kSgdMinSpread * (1 - 1e-9), detail.str()};
}

Outcome trainability() {
  harness::ExperimentConfig c;
  c.task.dataset = "two_moons";
  c.model.hidden = {32, 32};
  c.optimizer.eta = 0.01;
  c.schedule.epochs = 200;
  const auto fl = harness::train(c);
  c.lns.enabled = true;
  c.lns.bits = 12;
  c.lns.eta0 = 0.001;
  const auto q = harness::train(c);
  const double fa = fl.diverged ? 0.0 : 1.0 - fl.final_metric;
  const double qa = q.diverged ? 0.0 : 1.0 - q.final_metric;
  return {fa >= kFloatMinAccuracy && fa - qa <= kLadderMaxGap,
          "float acc " + fmt("%.4f", fa) + ", 12-bit acc " + fmt("%.4f", qa)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> checks{
      {"gradients match finite differences", gradient_check},
      {"sign-step angle and size identities", step_identities},
      {"depth-40 eta bound", deep_bound},
      {"gaussian cos gamma constant", gaussian_constant},
      {"bounded multiplicative steps descend", empirical_descent},
      {"first-order descent inequality", descent_inequality},
      {"madam sign, step and magnitude invariants", float_invariants},
      {"ladder closure, storage, dynamic range", ladder_closure},
      {"quantized steps track float madam", quantized_tracking},
      {"learning-rate insensitivity grid", lr_insensitivity},
      {"two moons trainability, float and 12-bit", trainability},
  };
  int failed = 0;
  for (std::size_t i = 0; i < checks.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = checks[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !o.pass;
    std::printf("%s %2zu %s: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", i + 1, checks[i].first.c_str(), o.detail.c_str(),
                secs);
    std::fflush(stdout);
  }
  std::printf("%d/%zu passed\n", static_cast<int>(checks.size()) - failed, checks.size());
  return failed == 0 ? 0 : 1;
}
