// Copyright 2026 The Madam Authors
// SPDX-License-Identifier: Apache-2.0

#include "madam/theory.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "madam/optimizers.hpp"

namespace madam::theory {

namespace {

Tensor group(const Perturbation& delta, std::size_t k) { return layer_group(delta.at(k)); }

void require_matching(const Mlp& net, const Perturbation& delta) {
  if (delta.size() != net.depth()) throw DimensionError("perturbation depth does not match network");
  for (std::size_t k = 0; k < net.depth(); ++k) {
    if (delta[k].weight.shape() != net.layer(k).weight.shape() || delta[k].bias.shape() != net.layer(k).bias.shape())
      throw DimensionError("perturbation shape mismatch at layer " + std::to_string(k));
  }
}

}  // namespace

std::vector<double> relative_perturbations(const Mlp& net, const Perturbation& delta) {
  require_matching(net, delta);
  std::vector<double> out;
  for (std::size_t k = 0; k < net.depth(); ++k) {
    const double wn = frobenius_norm(layer_group(net.layer(k)));
    if (wn == 0.0) throw std::domain_error("layer " + std::to_string(k) + " has zero norm");
    out.push_back(frobenius_norm(group(delta, k)) / wn);
  }
  return out;
}

double drt_bound(const Mlp& net, const Perturbation& delta) {
  double prod = 1.0;
  for (double r : relative_perturbations(net, delta)) prod *= 1.0 + r;
  return prod - 1.0;
}

std::vector<double> measure_breakdown(const Mlp& net, const Perturbation& delta, const Dataset& batch,
                                      int t_samples) {
  if (t_samples < 2) throw std::invalid_argument("measure_breakdown: need at least 2 t samples");
  require_matching(net, delta);
  const GradientBundle base = backward(net, batch);
  std::vector<Tensor> g0;
  std::vector<double> g0_norm;
  for (std::size_t k = 0; k < net.depth(); ++k) {
    g0.push_back(layer_group(base.per_layer[k]));
    g0_norm.push_back(frobenius_norm(g0.back()));
    if (g0_norm.back() == 0.0) throw std::domain_error("zero gradient at layer " + std::to_string(k));
  }
  std::vector<double> worst(net.depth(), 0.0);
  for (int i = 1; i < t_samples; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(t_samples - 1);
    const GradientBundle gt = gradient_at_perturbed(net, delta, t, batch);
    for (std::size_t k = 0; k < net.depth(); ++k) {
      const double d = frobenius_norm(layer_group(gt.per_layer[k]) - g0[k]) / g0_norm[k];
      worst[k] = std::max(worst[k], d);
    }
  }
  return worst;
}

DescentReport descent_gap(const Mlp& net, const Perturbation& delta, const Dataset& batch, int t_samples) {
  require_matching(net, delta);
  const GradientBundle base = backward(net, batch);
  const std::vector<double> breakdown = measure_breakdown(net, delta, batch, t_samples);
  const double drt = drt_bound(net, delta);

  DescentReport report;
  report.t_samples = t_samples;
  report.loss_before = base.loss_value;
  report.loss_after = loss(net.perturbed(delta), batch);
  report.actual_change = report.loss_after - report.loss_before;

  double bound = 0.0;
  for (std::size_t k = 0; k < net.depth(); ++k) {
    LayerDescent ld;
    const Tensor g = layer_group(base.per_layer[k]);
    const Tensor d = group(delta, k);
    ld.grad_norm = frobenius_norm(g);
    ld.delta_norm = frobenius_norm(d);
    if (ld.delta_norm > 0.0) ld.cos_theta = std::cos(angle_between(d, -g));
    ld.breakdown = breakdown[k];
    ld.bracket = ld.cos_theta - ld.breakdown;
    ld.drt_bound = drt;
    bound -= ld.grad_norm * ld.delta_norm * ld.bracket;
    report.layers.push_back(ld);
  }
  report.lemma_bound = bound;
  report.slack = bound - report.actual_change;
  return report;
}

double theorem1_eta_bound(int depth, double cos_gamma_min) {
  if (depth < 1) throw std::invalid_argument("theorem1_eta_bound: depth must be at least 1");
  if (!(cos_gamma_min >= 0.0 && cos_gamma_min <= 1.0))
    throw std::invalid_argument("theorem1_eta_bound: cos gamma must lie in [0, 1]");
  return std::pow(1.0 + cos_gamma_min, 1.0 / static_cast<double>(depth)) - 1.0;
}

std::vector<double> cos_gamma(const Mlp& net, const GradientBundle& grads) {
  if (grads.per_layer.size() != net.depth()) throw DimensionError("cos_gamma: gradient depth mismatch");
  std::vector<double> out;
  for (std::size_t k = 0; k < net.depth(); ++k) {
    const Tensor w = abs(layer_group(net.layer(k)));
    const Tensor g = abs(layer_group(grads.per_layer[k]));
    out.push_back(std::clamp(std::cos(angle_between(w, g)), 0.0, 1.0));
  }
  return out;
}

MonteCarloEstimate gaussian_cos_gamma_mc(std::size_t dim, std::size_t trials, std::uint64_t seed) {
  if (dim < 1) throw std::invalid_argument("gaussian_cos_gamma_mc: dim must be positive");
  if (trials < 1) throw std::invalid_argument("gaussian_cos_gamma_mc: need at least one trial");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<double> samples;
  for (std::size_t t = 0; t < trials; ++t) {
    double xy = 0.0, xx = 0.0, yy = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
      const double x = normal(rng);
      const double y = normal(rng);
      xy += std::abs(x) * std::abs(y);
      xx += x * x;
      yy += y * y;
    }
    samples.push_back(std::min(1.0, xy / (std::sqrt(xx) * std::sqrt(yy))));
  }
  double mean = 0.0;
  for (double s : samples) mean += s;
  mean /= static_cast<double>(trials);
  double var = 0.0;
  for (double s : samples) var += (s - mean) * (s - mean);
  MonteCarloEstimate est{mean, 0.0};
  if (trials > 1) est.stderr_ = std::sqrt(var / static_cast<double>(trials - 1) / static_cast<double>(trials));
  return est;
}

Perturbation mult_sign_perturbation(const Mlp& net, const GradientBundle& grads, double eta) {
  Perturbation delta;
  for (std::size_t k = 0; k < net.depth(); ++k) {
    const auto& l = net.layer(k);
    const auto& g = grads.per_layer.at(k);
    delta.push_back({scale(mul(abs(l.weight), sign(g.weight)), -eta), scale(mul(abs(l.bias), sign(g.bias)), -eta)});
  }
  return delta;
}

MadamDescentCheck verify_madam_descent(const Mlp& net, const Dataset& batch, double eta) {
  const GradientBundle grads = backward(net, batch);
  Mlp stepped = net;
  for (std::size_t k = 0; k < net.depth(); ++k) {
    auto& l = stepped.layers()[k];
    l.weight = mult_sign_step(l.weight, grads.per_layer[k].weight, eta);
    l.bias = mult_sign_step(l.bias, grads.per_layer[k].bias, eta);
  }

  MadamDescentCheck check;
  check.eta = eta;
  check.loss_before = grads.loss_value;
  check.loss_after = loss(stepped, batch);
  for (std::size_t k = 0; k < net.depth(); ++k) {
    const Tensor w = layer_group(net.layer(k));
    const Tensor step = layer_group(stepped.layer(k)) - w;
    const Tensor g = layer_group(grads.per_layer[k]);
    const double theta = angle_between(step, -g);
    const double gamma = angle_between(abs(w), abs(g));
    const double rel = frobenius_norm(step) / frobenius_norm(w);
    check.theta.push_back(theta);
    check.gamma.push_back(gamma);
    check.relative_step.push_back(rel);
    check.max_angle_error = std::max(check.max_angle_error, std::abs(theta - gamma));
    check.max_relative_step_error = std::max(check.max_relative_step_error, std::abs(rel - eta));
  }
  return check;
}

Dataset random_batch(std::size_t rows, std::size_t in, std::size_t out, TaskKind kind, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Dataset d;
  d.kind = kind;
  d.inputs = Tensor({rows, in});
  for (double& x : d.inputs.data()) x = normal(rng);
  if (kind == TaskKind::Regression) {
    d.targets = Tensor({rows, out});
    for (double& y : d.targets.data()) y = normal(rng);
  } else {
    std::uniform_int_distribution<std::size_t> label(0, out - 1);
    d.num_classes = out;
    for (std::size_t i = 0; i < rows; ++i) d.labels.push_back(label(rng));
  }
  return d;
}

Instance random_instance(const std::vector<std::size_t>& widths, std::size_t rows, TaskKind kind,
                         std::mt19937_64& rng, double leak) {
  Mlp net = Mlp::random_normal(widths, rng, leak);
  Dataset batch = random_batch(rows, widths.front(), widths.back(), kind, rng);
  return {std::move(net), std::move(batch)};
}

nlohmann::json to_json(const DescentReport& report) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : report.layers) {
    layers.push_back({{"grad_norm", l.grad_norm},
                      {"delta_norm", l.delta_norm},
                      {"cos_theta", l.cos_theta},
                      {"breakdown", l.breakdown},
                      {"bracket", l.bracket},
                      {"drt_bound", l.drt_bound}});
  }
  return {{"layers", layers},
          {"loss_before", report.loss_before},
          {"loss_after", report.loss_after},
          {"actual_change", report.actual_change},
          {"lemma_bound", report.lemma_bound},
          {"slack", report.slack},
          {"t_samples", report.t_samples},
          {"breakdown_is_grid_lower_bound", report.breakdown_is_grid_lower_bound}};
}

nlohmann::json to_json(const MadamDescentCheck& check) {
  return {{"eta", check.eta},
          {"theta", check.theta},
          {"gamma", check.gamma},
          {"relative_step", check.relative_step},
          {"max_angle_error", check.max_angle_error},
          {"max_relative_step_error", check.max_relative_step_error},
          {"loss_before", check.loss_before},
          {"loss_after", check.loss_after},
          {"loss_decreased", check.loss_decreased()}};
}

}  // namespace madam::theory
