// Copyright 2026 The Madam Authors
// SPDX-License-Identifier: Apache-2.0
//
// Leaky-relu multilayer perceptron with hand-written reverse-mode gradients.
// Layer k computes z_k = h_{k-1} W_k^T + b_k; hidden layers apply leaky relu,
// the last layer is linear.

#pragma once

#include <cstddef>
#include <random>
#include <stdexcept>
#include <vector>

#include "madam/tensor.hpp"

namespace madam {

enum class TaskKind { Regression, Classification };

struct LayerParams {
  Tensor weight;  // [out x in]
  Tensor bias;    // [out]

  std::size_t fan_in() const { return weight.cols(); }
  std::size_t fan_out() const { return weight.rows(); }

  friend bool operator==(const LayerParams&, const LayerParams&) = default;
};

/// Same-shaped perturbation of every parameter in an Mlp.
using Perturbation = std::vector<LayerParams>;

struct LayerGrad {
  Tensor weight;
  Tensor bias;
};

struct GradientBundle {
  std::vector<LayerGrad> per_layer;
  double loss_value = 0.0;
};

class Mlp {
 public:
  static constexpr double kDefaultLeak = 0.1;

  Mlp() = default;
  explicit Mlp(std::vector<LayerParams> layers, double leak = kDefaultLeak);

  /// Weights Normal(0, 1/fan_in), biases Normal(0, bias_std^2).
  static Mlp random_normal(const std::vector<std::size_t>& widths, std::mt19937_64& rng,
                           double leak = kDefaultLeak, double bias_std = 0.1);

  const std::vector<LayerParams>& layers() const noexcept { return layers_; }
  std::vector<LayerParams>& layers() noexcept { return layers_; }
  const LayerParams& layer(std::size_t k) const { return layers_.at(k); }
  std::size_t depth() const noexcept { return layers_.size(); }
  double leak() const noexcept { return leak_; }
  std::size_t input_width() const { return layers_.front().fan_in(); }
  std::size_t output_width() const { return layers_.back().fan_out(); }
  std::vector<std::size_t> widths() const;

  /// W + t * delta, layer by layer.
  Mlp perturbed(const Perturbation& delta, double t = 1.0) const;

  bool operator==(const Mlp&) const = default;

 private:
  std::vector<LayerParams> layers_;
  double leak_ = kDefaultLeak;
};

struct Dataset {
  Tensor inputs;                    // [N x d_in]
  Tensor targets;                   // [N x d_out], regression only
  std::vector<std::size_t> labels;  // N class indices, classification only
  std::size_t num_classes = 0;
  TaskKind kind = TaskKind::Regression;

  std::size_t size() const { return inputs.rows(); }
  std::size_t input_width() const { return inputs.cols(); }
  std::size_t output_width() const { return kind == TaskKind::Regression ? targets.cols() : num_classes; }

  /// Rows selected by index, in the given order.
  Dataset subset(const std::vector<std::size_t>& rows) const;
  /// Throws std::invalid_argument on inconsistent shapes or labels.
  void validate() const;
};

/// Pre-activations and activations of one forward pass. activations[0] is the
/// input; activations[k] is the output of layer k (activations.back() is the
/// network output).
struct ForwardTrace {
  std::vector<Tensor> pre_activations;
  std::vector<Tensor> activations;

  const Tensor& output() const { return activations.back(); }
};

ForwardTrace forward(const Mlp& net, const Tensor& x);
Tensor predict(const Mlp& net, const Tensor& x);

/// Mean squared error over all output entries.
double mse_loss(const Tensor& output, const Tensor& targets);
/// Mean softmax cross-entropy over the batch.
double cross_entropy_loss(const Tensor& output, const std::vector<std::size_t>& labels);
double loss(const Tensor& output, const Dataset& batch);
double loss(const Mlp& net, const Dataset& batch);

/// Derivative of the mean loss with respect to the network output.
Tensor loss_gradient(const Tensor& output, const Dataset& batch);

/// Fraction of rows whose argmax matches the label.
double accuracy(const Tensor& output, const std::vector<std::size_t>& labels);

GradientBundle backward(const Mlp& net, const Dataset& batch);
GradientBundle gradient_at_perturbed(const Mlp& net, const Perturbation& delta, double t, const Dataset& batch);

Perturbation zero_perturbation(const Mlp& net);

/// Parameter tensors in order weight_0, bias_0, weight_1, ...
std::vector<Tensor> flatten_params(const Mlp& net);
std::vector<Tensor> flatten_grads(const GradientBundle& grads);
void assign_params(Mlp& net, std::vector<Tensor> params);

/// Weight and bias of layer k concatenated into a single vector; this is the
/// parameter group W_k used by the descent analysis.
Tensor layer_group(const LayerParams& layer);
Tensor layer_group(const LayerGrad& grad);

}  // namespace madam
