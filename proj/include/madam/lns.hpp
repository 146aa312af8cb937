// Copyright 2026 The Madam Authors
// SPDX-License-Identifier: Apache-2.0
//
// B-bit logarithmic number system. A weight is stored as a sign and an integer
// level k in [0, 2^B - 1] and decodes to sign * sigma_star * exp(-k * eta0):
// a ladder in log space with rungs eta0 apart and sigma_star at the top.
// Zero is not representable.

#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "madam/optimizers.hpp"
#include "madam/tensor.hpp"

namespace madam {

struct LnsSpec {
  static constexpr int kMinBits = 2;
  static constexpr int kMaxBits = 32;

  int bits = 12;
  double eta0 = 0.001;
  double sigma_star = 1.0;

  std::uint64_t max_level() const { return (std::uint64_t{1} << bits) - 1; }
  /// Ratio of the largest to the smallest representable magnitude.
  double dynamic_range() const;
  void validate() const;

  friend bool operator==(const LnsSpec&, const LnsSpec&) = default;
};

/// eta0 that keeps exp[(2^bits - 1) * eta0] equal to the given range.
double eta0_for_range(int bits, double dynamic_range);

/// The integer n with |value - n * eta0| <= 1e-12. Throws
/// std::invalid_argument if value is not such a multiple.
std::int64_t rung_multiple(double value, double eta0);

/// Nearest multiple of eta0 to value (ties to even), at least one rung.
double snap_to_rungs(double value, double eta0);

/// Round to nearest, ties to even. Inputs within 1e-9 of a half-integer are
/// treated as exact ties, so rung arithmetic done in floating point rounds the
/// way its exact value would.
std::int64_t round_half_even(double u);

struct LnsTensor {
  LnsSpec spec;
  Shape shape;
  std::vector<std::int8_t> signs;     // each -1 or +1
  std::vector<std::uint32_t> levels;  // each in [0, spec.max_level()]

  std::size_t size() const { return levels.size(); }
  LnsTensor reshaped(Shape new_shape) const;
  /// Throws std::invalid_argument on out-of-range signs, levels, or sizes.
  void validate() const;

  friend bool operator==(const LnsTensor&, const LnsTensor&) = default;
};

/// Magnitude of level k under spec.
double rung_value(const LnsSpec& spec, std::uint64_t k);

Tensor decode(const LnsTensor& t);

/// Nearest rung to every element; magnitudes above sigma_star saturate at k = 0
/// and magnitudes below the ladder at the bottom rung. Throws
/// std::domain_error on exact zeros.
LnsTensor encode_nearest(const Tensor& x, const LnsSpec& spec);

/// Signs uniform on {-1, +1}, levels uniform on [0, 2^B - 1].
LnsTensor ladder_init(const LnsSpec& spec, Shape shape, std::mt19937_64& rng);

/// Madam state tied to a set of ladder tensors: sigma_star is taken from each
/// tensor's spec. eta and eta_star must be multiples of every eta0.
MadamState make_lns_madam_state(std::span<const LnsTensor> weights, double eta = MadamState::kDefaultEta,
                                double eta_star_ratio = MadamState::kDefaultEtaStarRatio,
                                double beta = MadamState::kDefaultBeta);

/// Madam on the ladder: the clamped ratio r is rounded to a multiple of
/// eta0/eta, so each level moves by an exact integer sign(w) * round(r * eta/eta0)
/// and then saturates at both ends. Signs never change.
void quantized_madam_step(MadamState& state, std::span<LnsTensor> weights, std::span<const Tensor> grads);

/// Keeps weights on the ladder and exposes their decoded values to the
/// training loop.
class LnsMadamOptimizer final : public Optimizer {
 public:
  LnsMadamOptimizer(std::vector<LnsTensor> weights, MadamState state);

  void step(std::vector<Tensor>& params, const std::vector<Tensor>& grads) override;
  double learning_rate() const override { return state_.eta; }
  /// Snaps to the nearest rung multiple of eta0, never below one rung.
  void set_learning_rate(double lr) override;
  bool multiplicative() const override { return true; }
  std::string name() const override { return "madam-lns"; }

  const std::vector<LnsTensor>& weights() const { return weights_; }
  const MadamState& state() const { return state_; }
  std::vector<Tensor> decoded() const;

 private:
  std::vector<LnsTensor> weights_;
  MadamState state_;
};

}  // namespace madam
