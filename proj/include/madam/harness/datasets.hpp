// Copyright 2026 The Madam Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "madam/net.hpp"

namespace madam::harness {

/// Malformed dataset file; the message carries the line number.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class DatasetKind { TwoMoons, GaussianBlobs, RandomRegression };

DatasetKind parse_dataset_kind(const std::string& name);
std::string to_string(DatasetKind kind);

struct GeneratorParams {
  DatasetKind kind = DatasetKind::TwoMoons;
  std::size_t n = 1000;
  double noise = 0.1;
  std::uint64_t seed = 0;
  std::size_t dim = 2;      // blobs and regression only; moons are 2-D
  std::size_t classes = 3;  // blobs only
};

/// A dataset plus the per-feature affine map that standardised it: raw =
/// standardised * feature_std + feature_mean.
struct GeneratedData {
  Dataset data;
  std::vector<double> feature_mean;
  std::vector<double> feature_std;
};

/// Deterministic in params.seed. Features are standardised to zero mean and
/// unit variance per coordinate; regression targets are standardised too.
GeneratedData generate_dataset(const GeneratorParams& params);

/// CSV with header "x0,...,x{d-1},y". For classification, y must be a
/// nonnegative integer class index.
Dataset load_dataset(const std::filesystem::path& path, TaskKind kind);
Dataset parse_dataset_csv(const std::string& text, TaskKind kind, const std::string& source = "<memory>");
std::string dataset_to_csv(const Dataset& data);

struct Split {
  Dataset train;
  Dataset test;
};

/// Shuffled split with round(n * test_fraction) test rows (at least one row
/// on each side).
Split train_test_split(const Dataset& data, double test_fraction, std::uint64_t seed);

}  // namespace madam::harness
