// Copyright 2026 The Madam Authors
// SPDX-License-Identifier: Apache-2.0

#include "madam/net.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace madam {

namespace {

double leaky(double z, double leak) { return z > 0.0 ? z : leak * z; }
// The kink at z == 0 takes the negative-slope branch.
double leaky_slope(double z, double leak) { return z > 0.0 ? 1.0 : leak; }

}  // namespace

Mlp::Mlp(std::vector<LayerParams> layers, double leak) : layers_(std::move(layers)), leak_(leak) {
  if (layers_.empty()) throw std::invalid_argument("Mlp needs at least one layer");
  if (!(leak_ >= 0.0 && leak_ < 1.0)) throw std::invalid_argument("leak must lie in [0, 1)");
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const auto& l = layers_[k];
    if (l.weight.rank() != 2 || l.bias.rank() != 1 || l.bias.size() != l.weight.rows()) {
      throw DimensionError("layer " + std::to_string(k) + ": weight " + shape_to_string(l.weight.shape()) +
                           " incompatible with bias " + shape_to_string(l.bias.shape()));
    }
    if (k > 0 && layers_[k - 1].fan_out() != l.fan_in()) {
      throw DimensionError("layer " + std::to_string(k) + " input width " + std::to_string(l.fan_in()) +
                           " does not match previous output width " + std::to_string(layers_[k - 1].fan_out()));
    }
  }
}

Mlp Mlp::random_normal(const std::vector<std::size_t>& widths, std::mt19937_64& rng, double leak,
                       double bias_std) {
  if (widths.size() < 2) throw std::invalid_argument("need at least input and output widths");
  std::vector<LayerParams> layers;
  for (std::size_t k = 0; k + 1 < widths.size(); ++k) {
    const std::size_t in = widths[k], out = widths[k + 1];
    std::normal_distribution<double> wdist(0.0, 1.0 / std::sqrt(static_cast<double>(in)));
    std::normal_distribution<double> bdist(0.0, bias_std);
    LayerParams l{Tensor({out, in}), Tensor({out})};
    for (double& w : l.weight.data()) w = wdist(rng);
    for (double& b : l.bias.data()) b = bdist(rng);
    layers.push_back(std::move(l));
  }
  return Mlp(std::move(layers), leak);
}

std::vector<std::size_t> Mlp::widths() const {
  std::vector<std::size_t> w{input_width()};
  for (const auto& l : layers_) w.push_back(l.fan_out());
  return w;
}

Mlp Mlp::perturbed(const Perturbation& delta, double t) const {
  if (delta.size() != layers_.size()) throw DimensionError("perturbation depth does not match network");
  Mlp out = *this;
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    out.layers_[k].weight = layers_[k].weight + t * delta[k].weight;
    out.layers_[k].bias = layers_[k].bias + t * delta[k].bias;
  }
  return out;
}

Dataset Dataset::subset(const std::vector<std::size_t>& rows) const {
  Dataset out;
  out.kind = kind;
  out.num_classes = num_classes;
  const std::size_t d = input_width();
  out.inputs = Tensor({rows.size(), d});
  if (kind == TaskKind::Regression) out.targets = Tensor({rows.size(), targets.cols()});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::size_t r = rows[i];
    for (std::size_t j = 0; j < d; ++j) out.inputs.at(i, j) = inputs.at(r, j);
    if (kind == TaskKind::Regression) {
      for (std::size_t j = 0; j < targets.cols(); ++j) out.targets.at(i, j) = targets.at(r, j);
    } else {
      out.labels.push_back(labels[r]);
    }
  }
  return out;
}

void Dataset::validate() const {
  if (inputs.rank() != 2 || inputs.rows() < 1) throw std::invalid_argument("dataset needs at least one row");
  if (!inputs.all_finite()) throw std::invalid_argument("dataset inputs must be finite");
  if (kind == TaskKind::Regression) {
    if (targets.rank() != 2 || targets.rows() != inputs.rows())
      throw std::invalid_argument("regression targets must have one row per input");
    if (!targets.all_finite()) throw std::invalid_argument("regression targets must be finite");
  } else {
    if (labels.size() != inputs.rows()) throw std::invalid_argument("need one label per input row");
    if (num_classes < 2) throw std::invalid_argument("classification needs at least two classes");
    for (auto y : labels)
      if (y >= num_classes) throw std::invalid_argument("label " + std::to_string(y) + " out of range");
  }
}

ForwardTrace forward(const Mlp& net, const Tensor& x) {
  if (x.rank() != 2 || x.cols() != net.input_width()) {
    throw DimensionError("forward: input " + shape_to_string(x.shape()) + " does not match input width " +
                         std::to_string(net.input_width()));
  }
  ForwardTrace trace;
  trace.activations.push_back(x);
  const std::size_t batch = x.rows();
  for (std::size_t k = 0; k < net.depth(); ++k) {
    const auto& l = net.layer(k);
    Tensor z = matmul(trace.activations.back(), transpose(l.weight));
    for (std::size_t i = 0; i < batch; ++i)
      for (std::size_t j = 0; j < l.fan_out(); ++j) z.at(i, j) += l.bias[j];
    Tensor h = z;
    if (k + 1 < net.depth()) {
      for (double& v : h.data()) v = leaky(v, net.leak());
    }
    trace.pre_activations.push_back(std::move(z));
    trace.activations.push_back(std::move(h));
  }
  return trace;
}

Tensor predict(const Mlp& net, const Tensor& x) { return forward(net, x).activations.back(); }

double mse_loss(const Tensor& output, const Tensor& targets) {
  if (output.shape() != targets.shape()) throw DimensionError("mse_loss: output and target shapes differ");
  double acc = 0.0;
  for (std::size_t i = 0; i < output.size(); ++i) {
    const double d = output[i] - targets[i];
    acc += d * d;
  }
  return acc / static_cast<double>(output.size());
}

namespace {

void check_labels(const Tensor& output, const std::vector<std::size_t>& labels) {
  if (output.rank() != 2 || output.rows() != labels.size())
    throw DimensionError("cross_entropy: need one label per output row");
  for (auto y : labels)
    if (y >= output.cols()) throw std::invalid_argument("invalid class index " + std::to_string(y));
}

// Row-wise softmax, shifted by the row max.
Tensor softmax(const Tensor& logits) {
  Tensor p = logits;
  for (std::size_t i = 0; i < p.rows(); ++i) {
    double m = p.at(i, 0);
    for (std::size_t j = 1; j < p.cols(); ++j) m = std::max(m, p.at(i, j));
    double z = 0.0;
    for (std::size_t j = 0; j < p.cols(); ++j) z += (p.at(i, j) = std::exp(p.at(i, j) - m));
    for (std::size_t j = 0; j < p.cols(); ++j) p.at(i, j) /= z;
  }
  return p;
}

}  // namespace

double cross_entropy_loss(const Tensor& output, const std::vector<std::size_t>& labels) {
  check_labels(output, labels);
  double acc = 0.0;
  for (std::size_t i = 0; i < output.rows(); ++i) {
    double m = output.at(i, 0);
    for (std::size_t j = 1; j < output.cols(); ++j) m = std::max(m, output.at(i, j));
    double z = 0.0;
    for (std::size_t j = 0; j < output.cols(); ++j) z += std::exp(output.at(i, j) - m);
    acc += std::log(z) + m - output.at(i, labels[i]);
  }
  return acc / static_cast<double>(output.rows());
}

double loss(const Tensor& output, const Dataset& batch) {
  return batch.kind == TaskKind::Regression ? mse_loss(output, batch.targets)
                                            : cross_entropy_loss(output, batch.labels);
}

double loss(const Mlp& net, const Dataset& batch) { return loss(predict(net, batch.inputs), batch); }

Tensor loss_gradient(const Tensor& output, const Dataset& batch) {
  if (batch.kind == TaskKind::Regression) {
    if (output.shape() != batch.targets.shape()) throw DimensionError("mse gradient: shape mismatch");
    return scale(output - batch.targets, 2.0 / static_cast<double>(output.size()));
  }
  check_labels(output, batch.labels);
  Tensor g = softmax(output);
  for (std::size_t i = 0; i < g.rows(); ++i) g.at(i, batch.labels[i]) -= 1.0;
  return scale(g, 1.0 / static_cast<double>(g.rows()));
}

double accuracy(const Tensor& output, const std::vector<std::size_t>& labels) {
  check_labels(output, labels);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < output.rows(); ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < output.cols(); ++j)
      if (output.at(i, j) > output.at(i, best)) best = j;
    correct += best == labels[i];
  }
  return static_cast<double>(correct) / static_cast<double>(output.rows());
}

GradientBundle backward(const Mlp& net, const Dataset& batch) {
  const ForwardTrace trace = forward(net, batch.inputs);
  GradientBundle out;
  out.loss_value = loss(trace.output(), batch);
  out.per_layer.resize(net.depth());

  Tensor delta = loss_gradient(trace.output(), batch);  // dL/dz_k, [batch x out_k]
  for (std::size_t k = net.depth(); k-- > 0;) {
    const auto& l = net.layer(k);
    LayerGrad& g = out.per_layer[k];
    g.weight = matmul(transpose(delta), trace.activations[k]);
    g.bias = Tensor({l.fan_out()});
    for (std::size_t i = 0; i < delta.rows(); ++i)
      for (std::size_t j = 0; j < delta.cols(); ++j) g.bias[j] += delta.at(i, j);
    if (k == 0) break;
    Tensor upstream = matmul(delta, l.weight);  // dL/dh_{k-1}
    const Tensor& z = trace.pre_activations[k - 1];
    for (std::size_t i = 0; i < upstream.size(); ++i) upstream[i] *= leaky_slope(z[i], net.leak());
    delta = std::move(upstream);
  }
  return out;
}

GradientBundle gradient_at_perturbed(const Mlp& net, const Perturbation& delta, double t, const Dataset& batch) {
  return backward(net.perturbed(delta, t), batch);
}

Perturbation zero_perturbation(const Mlp& net) {
  Perturbation p;
  for (const auto& l : net.layers()) p.push_back({Tensor(l.weight.shape()), Tensor(l.bias.shape())});
  return p;
}

std::vector<Tensor> flatten_params(const Mlp& net) {
  std::vector<Tensor> out;
  out.reserve(2 * net.depth());
  for (const auto& l : net.layers()) {
    out.push_back(l.weight);
    out.push_back(l.bias);
  }
  return out;
}

std::vector<Tensor> flatten_grads(const GradientBundle& grads) {
  std::vector<Tensor> out;
  out.reserve(2 * grads.per_layer.size());
  for (const auto& g : grads.per_layer) {
    out.push_back(g.weight);
    out.push_back(g.bias);
  }
  return out;
}

void assign_params(Mlp& net, std::vector<Tensor> params) {
  if (params.size() != 2 * net.depth()) throw DimensionError("assign_params: wrong tensor count");
  for (std::size_t k = 0; k < net.depth(); ++k) {
    auto& l = net.layers()[k];
    if (params[2 * k].shape() != l.weight.shape() || params[2 * k + 1].shape() != l.bias.shape())
      throw DimensionError("assign_params: shape mismatch at layer " + std::to_string(k));
    l.weight = std::move(params[2 * k]);
    l.bias = std::move(params[2 * k + 1]);
  }
}

namespace {

Tensor concat(const Tensor& a, const Tensor& b) {
  std::vector<double> v(a.values());
  v.insert(v.end(), b.values().begin(), b.values().end());
  const std::size_t n = v.size();
  return Tensor({n}, std::move(v));
}

}  // namespace

Tensor layer_group(const LayerParams& layer) { return concat(layer.weight, layer.bias); }
Tensor layer_group(const LayerGrad& grad) { return concat(grad.weight, grad.bias); }

}  // namespace madam
