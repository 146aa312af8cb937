// Copyright 2026 The Madam Authors
// SPDX-License-Identifier: Apache-2.0

#include "madam/lns.hpp"

#include <algorithm>
#include <cmath>

namespace madam {

namespace {

constexpr double kRungTolerance = 1e-12;
constexpr double kTieTolerance = 1e-9;

}  // namespace

double LnsSpec::dynamic_range() const { return std::exp(static_cast<double>(max_level()) * eta0); }

void LnsSpec::validate() const {
  if (bits < kMinBits || bits > kMaxBits)
    throw std::invalid_argument("lns: bits must lie in [2, 32], got " + std::to_string(bits));
  if (!(eta0 > 0.0) || !std::isfinite(eta0)) throw std::invalid_argument("lns: eta0 must be positive");
  if (!(sigma_star > 0.0) || !std::isfinite(sigma_star))
    throw std::invalid_argument("lns: sigma_star must be positive");
}

double eta0_for_range(int bits, double dynamic_range) {
  if (!(dynamic_range > 1.0)) throw std::invalid_argument("dynamic range must exceed 1");
  const LnsSpec probe{bits, 1.0, 1.0};
  probe.validate();
  return std::log(dynamic_range) / static_cast<double>(probe.max_level());
}

std::int64_t rung_multiple(double value, double eta0) {
  const double n = std::round(value / eta0);
  if (n < 1.0 || std::abs(value - n * eta0) > kRungTolerance) {
    throw std::invalid_argument("value " + std::to_string(value) + " is not a positive multiple of eta0 " +
                                std::to_string(eta0));
  }
  return static_cast<std::int64_t>(n);
}

double snap_to_rungs(double value, double eta0) {
  const double n = std::max(1.0, static_cast<double>(round_half_even(value / eta0)));
  return n * eta0;
}

std::int64_t round_half_even(double u) {
  const double f = std::floor(u);
  const double frac = u - f;
  if (std::abs(frac - 0.5) <= kTieTolerance) {
    const auto lo = static_cast<std::int64_t>(f);
    return (lo % 2 == 0) ? lo : lo + 1;
  }
  return static_cast<std::int64_t>(std::round(u));
}

LnsTensor LnsTensor::reshaped(Shape new_shape) const {
  if (element_count(new_shape) != size()) throw DimensionError("lns reshape: element count mismatch");
  LnsTensor out = *this;
  out.shape = std::move(new_shape);
  return out;
}

void LnsTensor::validate() const {
  spec.validate();
  if (signs.size() != levels.size() || element_count(shape) != levels.size())
    throw std::invalid_argument("lns tensor: sign/level/shape sizes disagree");
  for (auto s : signs)
    if (s != 1 && s != -1) throw std::invalid_argument("lns tensor: sign must be +1 or -1");
  const auto top = spec.max_level();
  for (auto k : levels)
    if (k > top) throw std::invalid_argument("lns tensor: level above 2^B - 1");
}

double rung_value(const LnsSpec& spec, std::uint64_t k) {
  return spec.sigma_star * std::exp(-static_cast<double>(k) * spec.eta0);
}

Tensor decode(const LnsTensor& t) {
  Tensor out(t.shape);
  for (std::size_t i = 0; i < t.size(); ++i) out[i] = t.signs[i] * rung_value(t.spec, t.levels[i]);
  return out;
}

LnsTensor encode_nearest(const Tensor& x, const LnsSpec& spec) {
  spec.validate();
  LnsTensor out{spec, x.shape(), {}, {}};
  out.signs.reserve(x.size());
  out.levels.reserve(x.size());
  const double log_top = std::log(spec.sigma_star);
  const auto top = static_cast<std::int64_t>(spec.max_level());
  for (double v : x.data()) {
    if (v == 0.0) throw std::domain_error("encode_nearest: zero is not representable");
    if (!std::isfinite(v)) throw std::domain_error("encode_nearest: non-finite input");
    const double u = (log_top - std::log(std::abs(v))) / spec.eta0;
    const std::int64_t k = std::clamp<std::int64_t>(round_half_even(u), 0, top);
    out.signs.push_back(v > 0.0 ? 1 : -1);
    out.levels.push_back(static_cast<std::uint32_t>(k));
  }
  return out;
}

LnsTensor ladder_init(const LnsSpec& spec, Shape shape, std::mt19937_64& rng) {
  spec.validate();
  const std::size_t n = element_count(shape);
  LnsTensor out{spec, std::move(shape), {}, {}};
  out.signs.reserve(n);
  out.levels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.signs.push_back((rng() >> 63) ? 1 : -1);
    out.levels.push_back(static_cast<std::uint32_t>(rng() >> (64 - spec.bits)));
  }
  return out;
}

MadamState make_lns_madam_state(std::span<const LnsTensor> weights, double eta, double eta_star_ratio, double beta) {
  std::vector<Tensor> shapes;
  std::vector<double> sigma;
  for (const auto& w : weights) {
    w.validate();
    rung_multiple(eta, w.spec.eta0);
    rung_multiple(eta_star_ratio * eta, w.spec.eta0);
    shapes.emplace_back(w.shape);
    sigma.push_back(w.spec.sigma_star);
  }
  return MadamState::for_params(shapes, std::move(sigma), eta, eta_star_ratio, beta);
}

void quantized_madam_step(MadamState& state, std::span<LnsTensor> weights, std::span<const Tensor> grads) {
  if (weights.size() != grads.size() || state.gbar_sq.size() != weights.size())
    throw DimensionError("quantized_madam_step: tensor count mismatch");
  for (std::size_t i = 0; i < weights.size(); ++i) {
    LnsTensor& w = weights[i];
    if (grads[i].shape() != w.shape) throw DimensionError("quantized_madam_step: gradient shape mismatch");
    const std::int64_t per_eta = rung_multiple(state.eta, w.spec.eta0);
    const std::int64_t per_eta_star = rung_multiple(state.eta_star, w.spec.eta0);
    const auto top = static_cast<std::int64_t>(w.spec.max_level());

    const Tensor r = madam_ratio(state, i, grads[i]);
    for (std::size_t j = 0; j < w.size(); ++j) {
      const std::int64_t q =
          std::clamp(round_half_even(r[j] * static_cast<double>(per_eta)), -per_eta_star, per_eta_star);
      const std::int64_t k = static_cast<std::int64_t>(w.levels[j]) + w.signs[j] * q;
      w.levels[j] = static_cast<std::uint32_t>(std::clamp<std::int64_t>(k, 0, top));
    }
  }
}

LnsMadamOptimizer::LnsMadamOptimizer(std::vector<LnsTensor> weights, MadamState state)
    : weights_(std::move(weights)), state_(std::move(state)) {
  state_.validate();
  if (state_.gbar_sq.size() != weights_.size()) throw DimensionError("lns optimizer: state/weight count mismatch");
  for (const auto& w : weights_) {
    rung_multiple(state_.eta, w.spec.eta0);
    rung_multiple(state_.eta_star, w.spec.eta0);
  }
}

void LnsMadamOptimizer::step(std::vector<Tensor>& params, const std::vector<Tensor>& grads) {
  quantized_madam_step(state_, weights_, grads);
  params = decoded();
}

void LnsMadamOptimizer::set_learning_rate(double lr) {
  const double eta0 = weights_.front().spec.eta0;
  const double ratio = state_.ratio_bound();
  state_.eta = snap_to_rungs(lr, eta0);
  state_.eta_star = snap_to_rungs(ratio * state_.eta, eta0);
}

std::vector<Tensor> LnsMadamOptimizer::decoded() const {
  std::vector<Tensor> out;
  out.reserve(weights_.size());
  for (const auto& w : weights_) out.push_back(decode(w));
  return out;
}

}  // namespace madam
