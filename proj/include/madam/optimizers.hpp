// Copyright 2026 The Madam Authors
// SPDX-License-Identifier: Apache-2.0
//
// Multiplicative update rules and the additive baselines they are compared
// against. Parameters are passed as a flat list of tensors (see
// flatten_params in net.hpp); each optimizer state mirrors that list.

#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "madam/tensor.hpp"

namespace madam {

/// w * (1 - eta * sign(w) * sign(g)). Requires 0 < eta < 1 so no weight
/// can cross zero.
Tensor mult_sign_step(const Tensor& w, const Tensor& g, double eta);

/// w * exp(-eta * sign(w) * sign(g)).
Tensor exp_sign_step(const Tensor& w, const Tensor& g, double eta);

/// Hyperparameters and second-moment accumulators for Madam.
///
/// There is no bias correction on gbar_sq, so the first few steps saturate
/// the ratio clamp at eta_star / eta.
struct MadamState {
  static constexpr double kDefaultEta = 0.01;
  static constexpr double kDefaultEtaStarRatio = 8.0;
  static constexpr double kDefaultBeta = 0.999;
  static constexpr double kDefaultSigmaMultiplier = 3.0;
  static constexpr double kEps = 1e-12;

  double eta = kDefaultEta;
  double eta_star = kDefaultEtaStarRatio * kDefaultEta;
  double beta = kDefaultBeta;
  double eps = kEps;
  std::vector<double> sigma_star;  // one per parameter tensor
  std::vector<Tensor> gbar_sq;     // one per parameter tensor

  /// Zeroed accumulators shaped like params.
  static MadamState for_params(std::span<const Tensor> params, std::vector<double> sigma_star,
                               double eta = kDefaultEta, double eta_star_ratio = kDefaultEtaStarRatio,
                               double beta = kDefaultBeta);

  double ratio_bound() const { return eta_star / eta; }
  /// Changes eta while keeping eta_star / eta fixed.
  void set_eta(double new_eta);
  /// Throws std::invalid_argument when a hyperparameter is out of range.
  void validate() const;
};

/// One Madam iteration, in place:
///   gbar_sq <- (1 - beta) g^2 + beta gbar_sq
///   r       <- clamp_{eta*/eta}(g / (sqrt(gbar_sq) + eps))
///   w       <- w * exp(-eta * sign(w) * r)
///   w       <- clamp_{sigma*}(w)
void madam_step(MadamState& state, std::span<Tensor> params, std::span<const Tensor> grads);

/// The normalised, clamped gradient ratio r of one Madam iteration. Updates
/// gbar_sq for tensor i as a side effect.
Tensor madam_ratio(MadamState& state, std::size_t i, const Tensor& grad);

struct SgdState {
  double lr = 0.1;
  double momentum = 0.9;
  double weight_decay = 0.0;
  std::vector<Tensor> velocity;

  static SgdState for_params(std::span<const Tensor> params, double lr, double momentum = 0.9,
                             double weight_decay = 0.0);
};

/// v <- momentum * v + (g + wd * w); w <- w - lr * v.
void sgd_step(SgdState& state, std::span<Tensor> params, std::span<const Tensor> grads);

struct AdamState {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
  long long step = 0;
  std::vector<Tensor> m;
  std::vector<Tensor> v;

  static AdamState for_params(std::span<const Tensor> params, double lr, double beta1 = 0.9,
                              double beta2 = 0.999, double eps = 1e-8, double weight_decay = 0.0);
};

/// Adam with bias correction.
void adam_step(AdamState& state, std::span<Tensor> params, std::span<const Tensor> grads);

struct LarsResult {
  /// Parameter tensors left untouched because their weight or gradient norm
  /// was zero.
  std::vector<std::size_t> skipped;
};

/// W_k <- W_k - eta * (|W_k|_F / |g_k|_F) g_k, with every tensor (each weight
/// matrix and each bias vector) its own group.
LarsResult lars_step(std::span<Tensor> params, std::span<const Tensor> grads, double eta);

/// Uniform front end used by the training loop.
class Optimizer {
 public:
  virtual ~Optimizer() = default;
  virtual void step(std::vector<Tensor>& params, const std::vector<Tensor>& grads) = 0;
  virtual double learning_rate() const = 0;
  virtual void set_learning_rate(double lr) = 0;
  /// True for rules that can never change the sign of a weight.
  virtual bool multiplicative() const = 0;
  virtual std::string name() const = 0;
};

class MadamOptimizer final : public Optimizer {
 public:
  explicit MadamOptimizer(MadamState state) : state_(std::move(state)) { state_.validate(); }
  void step(std::vector<Tensor>& params, const std::vector<Tensor>& grads) override;
  double learning_rate() const override { return state_.eta; }
  void set_learning_rate(double lr) override { state_.set_eta(lr); }
  bool multiplicative() const override { return true; }
  std::string name() const override { return "madam"; }
  const MadamState& state() const { return state_; }

 private:
  MadamState state_;
};

class SgdOptimizer final : public Optimizer {
 public:
  explicit SgdOptimizer(SgdState state) : state_(std::move(state)) {}
  void step(std::vector<Tensor>& params, const std::vector<Tensor>& grads) override;
  double learning_rate() const override { return state_.lr; }
  void set_learning_rate(double lr) override { state_.lr = lr; }
  bool multiplicative() const override { return false; }
  std::string name() const override { return "sgd"; }

 private:
  SgdState state_;
};

class AdamOptimizer final : public Optimizer {
 public:
  explicit AdamOptimizer(AdamState state) : state_(std::move(state)) {}
  void step(std::vector<Tensor>& params, const std::vector<Tensor>& grads) override;
  double learning_rate() const override { return state_.lr; }
  void set_learning_rate(double lr) override { state_.lr = lr; }
  bool multiplicative() const override { return false; }
  std::string name() const override { return "adam"; }

 private:
  AdamState state_;
};

class LarsOptimizer final : public Optimizer {
 public:
  explicit LarsOptimizer(double eta) : eta_(eta) {}
  void step(std::vector<Tensor>& params, const std::vector<Tensor>& grads) override;
  double learning_rate() const override { return eta_; }
  void set_learning_rate(double lr) override { eta_ = lr; }
  bool multiplicative() const override { return false; }
  std::string name() const override { return "lars"; }
  std::size_t skipped_groups() const { return skipped_; }

 private:
  double eta_;
  std::size_t skipped_ = 0;
};

}  // namespace madam
