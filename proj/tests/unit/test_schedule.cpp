// Copyright 2026 The Madam Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "madam/harness/schedule.hpp"

using namespace madam::harness;

TEST_CASE("steadily improving input never signals") {
  std::vector<double> h;
  for (int i = 0; i < 100; ++i) h.push_back(10.0 * std::pow(0.9, i));
  for (bool s : plateau_signals(h)) CHECK_FALSE(s);
}

TEST_CASE("constant input signals every patience steps") {
  const std::vector<double> h(16, 1.0);
  const auto s = plateau_signals(h, 5);
  // Index 0 is the baseline; indices 1..5 are the first five stale values.
  for (std::size_t i = 0; i < h.size(); ++i) CHECK(s[i] == (i == 5 || i == 10 || i == 15));
}

TEST_CASE("improvements below the margin count as stale") {
  PlateauDetector d(3, 0.01);
  CHECK_FALSE(d.observe(1.0));
  CHECK_FALSE(d.observe(0.995));
  CHECK_FALSE(d.observe(0.995));
  CHECK(d.observe(0.995));
  CHECK(d.best() == 1.0);
  CHECK_FALSE(d.observe(0.5));
  CHECK(d.best() == 0.5);
  CHECK(d.stale_count() == 0);
}

TEST_CASE("a worse value does not reset the count") {
  PlateauDetector d(2, 0.0);
  d.observe(1.0);
  CHECK_FALSE(d.observe(2.0));
  CHECK(d.observe(1.5));
}

TEST_CASE("detector argument checks") {
  CHECK_THROWS(PlateauDetector(0, 0.1));
  CHECK_THROWS(PlateauDetector(3, -0.1));
}

TEST_CASE("float decay") {
  CHECK(decay_float(0.01, 10.0) == doctest::Approx(0.001));
  double eta = 1.0;
  for (int i = 0; i < 20; ++i) eta = decay_float(eta, 10.0);
  CHECK(eta == doctest::Approx(1e-20));
}

TEST_CASE("ladder decay stays on rungs and stops at the floor") {
  CHECK(decay_lns(0.01, 10.0, 0.001) == doctest::Approx(0.001));
  CHECK(decay_lns(0.001, 10.0, 0.001) == doctest::Approx(0.001));
  CHECK(decay_lns(0.08, 10.0, 0.001) == doctest::Approx(0.008));
  // 0.025 / 10 rounds to two rungs of 0.001.
  CHECK(decay_lns(0.025, 10.0, 0.001) == doctest::Approx(0.002));
  CHECK(decay_lns(0.08, 10.0, 0.001, 0.02) == doctest::Approx(0.02));
  CHECK(decay_lns(0.08, 10.0, 0.001, 1e-9) == doctest::Approx(0.008));
  double eta = 0.064;
  for (int i = 0; i < 10; ++i) {
    eta = decay_lns(eta, 2.0, 0.001);
    const double k = eta / 0.001;
    CHECK(std::abs(k - std::round(k)) < 1e-9);
    CHECK(eta >= 0.001 - 1e-15);
  }
}
