// Copyright 2026 The Madam Authors
// SPDX-License-Identifier: Apache-2.0

#include "madam/optimizers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace madam {

namespace {

void require_matching(std::span<const Tensor> params, std::span<const Tensor> grads, const char* op) {
  if (params.size() != grads.size()) throw DimensionError(std::string(op) + ": parameter/gradient count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].shape() != grads[i].shape())
      throw DimensionError(std::string(op) + ": shape mismatch at tensor " + std::to_string(i));
  }
}

void require_buffers(std::span<const Tensor> params, const std::vector<Tensor>& buffers, const char* op) {
  if (buffers.size() != params.size()) throw DimensionError(std::string(op) + ": state has wrong tensor count");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (buffers[i].shape() != params[i].shape())
      throw DimensionError(std::string(op) + ": state buffer shape mismatch at tensor " + std::to_string(i));
  }
}

std::vector<Tensor> zeros_like(std::span<const Tensor> params) {
  std::vector<Tensor> out;
  out.reserve(params.size());
  for (const auto& p : params) out.emplace_back(p.shape());
  return out;
}

}  // namespace

Tensor mult_sign_step(const Tensor& w, const Tensor& g, double eta) {
  if (!(eta > 0.0 && eta < 1.0)) throw std::invalid_argument("mult_sign_step: eta must lie in (0, 1)");
  if (w.shape() != g.shape()) throw DimensionError("mult_sign_step: shape mismatch");
  Tensor out = w;
  auto gs = g.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= 1.0 - eta * sign(out[i]) * sign(gs[i]);
  return out;
}

Tensor exp_sign_step(const Tensor& w, const Tensor& g, double eta) {
  if (w.shape() != g.shape()) throw DimensionError("exp_sign_step: shape mismatch");
  Tensor out = w;
  auto gs = g.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= std::exp(-eta * sign(out[i]) * sign(gs[i]));
  return out;
}

MadamState MadamState::for_params(std::span<const Tensor> params, std::vector<double> sigma_star, double eta,
                                  double eta_star_ratio, double beta) {
  MadamState s;
  s.eta = eta;
  s.eta_star = eta_star_ratio * eta;
  s.beta = beta;
  s.sigma_star = std::move(sigma_star);
  s.gbar_sq = zeros_like(params);
  s.validate();
  return s;
}

void MadamState::set_eta(double new_eta) {
  const double ratio = ratio_bound();
  eta = new_eta;
  eta_star = ratio * new_eta;
}

void MadamState::validate() const {
  if (!(eta > 0.0)) throw std::invalid_argument("madam: eta must be positive");
  if (!(eta_star >= eta)) throw std::invalid_argument("madam: eta_star must be at least eta");
  if (!(beta >= 0.0 && beta < 1.0)) throw std::invalid_argument("madam: beta must lie in [0, 1)");
  if (!(eps > 0.0)) throw std::invalid_argument("madam: eps must be positive");
  if (sigma_star.size() != gbar_sq.size()) throw std::invalid_argument("madam: need one sigma_star per tensor");
  for (double s : sigma_star)
    if (!(s > 0.0)) throw std::invalid_argument("madam: sigma_star must be positive");
}

Tensor madam_ratio(MadamState& state, std::size_t i, const Tensor& grad) {
  Tensor& acc = state.gbar_sq.at(i);
  if (acc.shape() != grad.shape()) throw DimensionError("madam: gbar_sq shape mismatch");
  const double bound = state.ratio_bound();
  Tensor r(grad.shape());
  for (std::size_t j = 0; j < grad.size(); ++j) {
    const double g = grad[j];
    acc[j] = (1.0 - state.beta) * g * g + state.beta * acc[j];
    r[j] = std::clamp(g / (std::sqrt(acc[j]) + state.eps), -bound, bound);
  }
  return r;
}

void madam_step(MadamState& state, std::span<Tensor> params, std::span<const Tensor> grads) {
  require_matching(params, grads, "madam_step");
  require_buffers(params, state.gbar_sq, "madam_step");
  if (state.sigma_star.size() != params.size()) throw DimensionError("madam_step: sigma_star count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Tensor r = madam_ratio(state, i, grads[i]);
    const double cap = state.sigma_star[i];
    Tensor& w = params[i];
    for (std::size_t j = 0; j < w.size(); ++j) {
      const double moved = w[j] * std::exp(-state.eta * sign(w[j]) * r[j]);
      w[j] = std::clamp(moved, -cap, cap);
    }
  }
}

SgdState SgdState::for_params(std::span<const Tensor> params, double lr, double momentum, double weight_decay) {
  if (!(lr > 0.0)) throw std::invalid_argument("sgd: lr must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw std::invalid_argument("sgd: momentum must lie in [0, 1)");
  return SgdState{lr, momentum, weight_decay, zeros_like(params)};
}

void sgd_step(SgdState& state, std::span<Tensor> params, std::span<const Tensor> grads) {
  require_matching(params, grads, "sgd_step");
  require_buffers(params, state.velocity, "sgd_step");
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& w = params[i];
    Tensor& v = state.velocity[i];
    for (std::size_t j = 0; j < w.size(); ++j) {
      v[j] = state.momentum * v[j] + grads[i][j] + state.weight_decay * w[j];
      w[j] -= state.lr * v[j];
    }
  }
}

AdamState AdamState::for_params(std::span<const Tensor> params, double lr, double beta1, double beta2, double eps,
                                double weight_decay) {
  if (!(lr > 0.0)) throw std::invalid_argument("adam: lr must be positive");
  return AdamState{lr, beta1, beta2, eps, weight_decay, 0, zeros_like(params), zeros_like(params)};
}

void adam_step(AdamState& state, std::span<Tensor> params, std::span<const Tensor> grads) {
  require_matching(params, grads, "adam_step");
  require_buffers(params, state.m, "adam_step");
  require_buffers(params, state.v, "adam_step");
  ++state.step;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& w = params[i];
    Tensor& m = state.m[i];
    Tensor& v = state.v[i];
    for (std::size_t j = 0; j < w.size(); ++j) {
      const double g = grads[i][j] + state.weight_decay * w[j];
      m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * g;
      v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * g * g;
      w[j] -= state.lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + state.eps);
    }
  }
}

LarsResult lars_step(std::span<Tensor> params, std::span<const Tensor> grads, double eta) {
  require_matching(params, grads, "lars_step");
  LarsResult result;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double wn = frobenius_norm(params[i]);
    const double gn = frobenius_norm(grads[i]);
    if (wn == 0.0 || gn == 0.0) {
      result.skipped.push_back(i);
      continue;
    }
    const double step = eta * wn / gn;
    Tensor& w = params[i];
    for (std::size_t j = 0; j < w.size(); ++j) w[j] -= step * grads[i][j];
  }
  return result;
}

void MadamOptimizer::step(std::vector<Tensor>& params, const std::vector<Tensor>& grads) {
  madam_step(state_, params, grads);
}

void SgdOptimizer::step(std::vector<Tensor>& params, const std::vector<Tensor>& grads) {
  sgd_step(state_, params, grads);
}

void AdamOptimizer::step(std::vector<Tensor>& params, const std::vector<Tensor>& grads) {
  adam_step(state_, params, grads);
}

void LarsOptimizer::step(std::vector<Tensor>& params, const std::vector<Tensor>& grads) {
  skipped_ += lars_step(params, grads, eta_).skipped.size();
}

}  // namespace madam
