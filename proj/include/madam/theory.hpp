// Copyright 2026 The Madam Authors
// SPDX-License-Identifier: Apache-2.0
//
// Numerical checks of the descent theory for multiplicative updates. Layer k's
// parameter group W_k is its weight matrix and bias vector taken together
// (see layer_group in net.hpp).

#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "json.hpp"

#include "madam/net.hpp"

namespace madam::theory {

inline constexpr int kDefaultTSamples = 64;

/// |Delta W_k|_F / |W_k|_F per layer. Throws std::domain_error on a zero
/// norm layer.
std::vector<double> relative_perturbations(const Mlp& net, const Perturbation& delta);

/// prod_l (1 + |Delta W_l|_F / |W_l|_F) - 1.
double drt_bound(const Mlp& net, const Perturbation& delta);

/// Per layer, max over t on a uniform grid of t_samples points in [0, 1] of
/// |g_k(W + t Delta W) - g_k(W)|_F / |g_k(W)|_F. The grid max is a lower bound
/// on the true max. Throws std::domain_error if some g_k(W) is zero.
std::vector<double> measure_breakdown(const Mlp& net, const Perturbation& delta, const Dataset& batch,
                                      int t_samples = kDefaultTSamples);

struct LayerDescent {
  double grad_norm = 0.0;
  double delta_norm = 0.0;
  double cos_theta = 0.0;  // 0 when the layer is not perturbed
  double breakdown = 0.0;
  double bracket = 0.0;  // cos_theta - breakdown
  double drt_bound = 0.0;
};

struct DescentReport {
  std::vector<LayerDescent> layers;
  double loss_before = 0.0;
  double loss_after = 0.0;
  double actual_change = 0.0;
  /// -sum_k |g_k| |Delta W_k| [cos theta_k - breakdown_k]
  double lemma_bound = 0.0;
  /// lemma_bound - actual_change; nonnegative when the bound holds.
  double slack = 0.0;
  int t_samples = kDefaultTSamples;
  bool breakdown_is_grid_lower_bound = true;
};

/// Evaluates both sides of the first-order descent inequality for one
/// perturbation.
DescentReport descent_gap(const Mlp& net, const Perturbation& delta, const Dataset& batch,
                          int t_samples = kDefaultTSamples);

/// (1 + cos_gamma_min)^(1/L) - 1.
double theorem1_eta_bound(int depth, double cos_gamma_min);

/// Cosine of the angle between |g_k| and |W_k| for every layer; in [0, 1].
std::vector<double> cos_gamma(const Mlp& net, const GradientBundle& grads);

struct MonteCarloEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
};

/// E[cos angle(|x|, |y|)] for x, y iid standard normal in R^dim.
MonteCarloEstimate gaussian_cos_gamma_mc(std::size_t dim, std::size_t trials, std::uint64_t seed);

/// Delta W = -eta * |W| (.) sign(g): the perturbation made by one
/// multiplicative sign step.
Perturbation mult_sign_perturbation(const Mlp& net, const GradientBundle& grads, double eta);

struct MadamDescentCheck {
  double eta = 0.0;
  std::vector<double> theta;  // angle(Delta W_k, -g_k)
  std::vector<double> gamma;  // angle(|W_k|, |g_k|)
  std::vector<double> relative_step;
  double max_angle_error = 0.0;
  double max_relative_step_error = 0.0;
  double loss_before = 0.0;
  double loss_after = 0.0;

  bool angle_identity_holds(double tol = 1e-9) const { return max_angle_error <= tol; }
  bool relative_step_holds(double tol = 1e-12) const { return max_relative_step_error <= tol; }
  bool loss_decreased() const { return loss_after < loss_before; }
  bool passed() const { return angle_identity_holds() && relative_step_holds() && loss_decreased(); }
};

/// Applies one multiplicative sign step with the given eta and checks the
/// angle identity theta_k = gamma_k, the exact relative layer step eta, and
/// whether the loss went down.
MadamDescentCheck verify_madam_descent(const Mlp& net, const Dataset& batch, double eta);

/// A random network with a random batch to evaluate it on.
struct Instance {
  Mlp net;
  Dataset batch;
};

/// Gaussian inputs; regression targets are standard normal, class labels
/// uniform over the output width.
Dataset random_batch(std::size_t rows, std::size_t in, std::size_t out, TaskKind kind, std::mt19937_64& rng);
Instance random_instance(const std::vector<std::size_t>& widths, std::size_t rows, TaskKind kind,
                         std::mt19937_64& rng, double leak = Mlp::kDefaultLeak);

nlohmann::json to_json(const DescentReport& report);
nlohmann::json to_json(const MadamDescentCheck& check);

}  // namespace madam::theory
