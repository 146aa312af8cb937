// Copyright 2026 The Madam Authors
// SPDX-License-Identifier: Apache-2.0
//
// Central finite differences for checking backward(). The oracle has its own
// forward pass and loss in long double, so it shares no code with the library
// and its roundoff sits far below the tolerances under test.

#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "madam/net.hpp"

namespace madam::testing {

/// Parameters uniform in [-1, 1].
inline Mlp uniform_mlp(const std::vector<std::size_t>& widths, std::mt19937_64& rng, double leak = 0.1) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<LayerParams> layers;
  for (std::size_t k = 0; k + 1 < widths.size(); ++k) {
    LayerParams l{Tensor({widths[k + 1], widths[k]}), Tensor({widths[k + 1]})};
    for (double& w : l.weight.data()) w = u(rng);
    for (double& b : l.bias.data()) b = u(rng);
    layers.push_back(std::move(l));
  }
  return Mlp(std::move(layers), leak);
}

namespace detail {

using Vec = std::vector<long double>;

/// Flat params in flatten_params order: W0, b0, W1, b1, ...
struct LongNet {
  std::vector<std::size_t> widths;
  std::vector<Vec> params;
  long double leak;
};

inline LongNet widen(const Mlp& net) {
  LongNet n{net.widths(), {}, net.leak()};
  for (const Tensor& p : flatten_params(net)) n.params.emplace_back(p.data().begin(), p.data().end());
  return n;
}

/// Mean loss; appends the sign of every hidden pre-activation to pattern.
inline long double long_loss(const LongNet& n, const Dataset& batch, std::vector<bool>& pattern) {
  const std::size_t rows = batch.inputs.rows(), depth = n.widths.size() - 1;
  long double total = 0.0L;
  for (std::size_t r = 0; r < rows; ++r) {
    Vec h(n.widths[0]);
    for (std::size_t i = 0; i < h.size(); ++i) h[i] = batch.inputs.at(r, i);
    for (std::size_t k = 0; k < depth; ++k) {
      const Vec& w = n.params[2 * k];
      const Vec& b = n.params[2 * k + 1];
      const std::size_t in = n.widths[k], out = n.widths[k + 1];
      Vec z(out);
      for (std::size_t j = 0; j < out; ++j) {
        long double acc = b[j];
        for (std::size_t i = 0; i < in; ++i) acc += w[j * in + i] * h[i];
        z[j] = acc;
      }
      if (k + 1 < depth) {
        for (long double& v : z) {
          pattern.push_back(v > 0.0L);
          if (!(v > 0.0L)) v *= n.leak;
        }
      }
      h = std::move(z);
    }
    if (batch.kind == TaskKind::Regression) {
      for (std::size_t j = 0; j < h.size(); ++j) {
        const long double d = h[j] - static_cast<long double>(batch.targets.at(r, j));
        total += d * d / static_cast<long double>(h.size());
      }
    } else {
      const long double m = *std::max_element(h.begin(), h.end());
      long double s = 0.0L;
      for (long double v : h) s += std::exp(v - m);
      total += m + std::log(s) - h[batch.labels[r]];
    }
  }
  return total / static_cast<long double>(rows);
}

}  // namespace detail

struct NumericGradient {
  std::vector<Tensor> grad;  // flatten_params order
  /// Some probe moved a hidden pre-activation across the relu kink, so the
  /// difference quotient straddles two linear pieces and is not a derivative.
  bool crossed_kink = false;
};

/// Central-difference gradient of the mean loss with step h.
inline NumericGradient numeric_gradient(const Mlp& net, const Dataset& batch, long double h = 1e-5L) {
  detail::LongNet n = detail::widen(net);
  std::vector<bool> base, probe;
  detail::long_loss(n, batch, base);
  NumericGradient out;
  const std::vector<Tensor> shapes = flatten_params(net);
  for (std::size_t p = 0; p < n.params.size(); ++p) {
    Tensor g(shapes[p].shape());
    for (std::size_t i = 0; i < n.params[p].size(); ++i) {
      const long double w = n.params[p][i];
      n.params[p][i] = w + h;
      probe.clear();
      const long double up = detail::long_loss(n, batch, probe);
      out.crossed_kink = out.crossed_kink || probe != base;
      n.params[p][i] = w - h;
      probe.clear();
      const long double down = detail::long_loss(n, batch, probe);
      out.crossed_kink = out.crossed_kink || probe != base;
      n.params[p][i] = w;
      g[i] = static_cast<double>((up - down) / (2 * h));
    }
    out.grad.push_back(std::move(g));
  }
  return out;
}

/// max_i |a_i - n_i| / max(|a_i|, |n_i|, floor). The floor keeps entries whose
/// true gradient is essentially zero from turning roundoff into a huge ratio.
inline double max_relative_error(const std::vector<Tensor>& analytic, const std::vector<Tensor>& numeric,
                                 double floor = 1e-4) {
  double worst = 0.0;
  for (std::size_t p = 0; p < analytic.size(); ++p) {
    for (std::size_t i = 0; i < analytic[p].size(); ++i) {
      const double a = analytic[p][i], n = numeric[p][i];
      worst = std::max(worst, std::abs(a - n) / std::max({std::abs(a), std::abs(n), floor}));
    }
  }
  return worst;
}

}  // namespace madam::testing
