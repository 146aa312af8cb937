// Copyright 2026 The Madam Authors
// SPDX-License-Identifier: Apache-2.0

#include "madam/harness/datasets.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

namespace madam::harness {

namespace {

// Standardises columns in place; returns (mean, std) per column. Constant
// columns are centred but not scaled.
std::pair<std::vector<double>, std::vector<double>> standardise(Tensor& m) {
  const std::size_t n = m.rows(), d = m.cols();
  std::vector<double> mean(d, 0.0), sd(d, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t i = 0; i < n; ++i) mean[j] += m.at(i, j);
    mean[j] /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) sd[j] += (m.at(i, j) - mean[j]) * (m.at(i, j) - mean[j]);
    sd[j] = std::sqrt(sd[j] / static_cast<double>(n));
    const double s = sd[j] > 0.0 ? sd[j] : 1.0;
    sd[j] = s;
    for (std::size_t i = 0; i < n; ++i) m.at(i, j) = (m.at(i, j) - mean[j]) / s;
  }
  return {mean, sd};
}

GeneratedData two_moons(const GeneratorParams& p, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> angle(0.0, std::numbers::pi);
  std::normal_distribution<double> jitter(0.0, 1.0);
  GeneratedData out;
  Dataset& d = out.data;
  d.kind = TaskKind::Classification;
  d.num_classes = 2;
  d.inputs = Tensor({p.n, 2});
  for (std::size_t i = 0; i < p.n; ++i) {
    const std::size_t label = i % 2;
    const double t = angle(rng);
    double x = std::cos(t), y = std::sin(t);
    if (label == 1) {
      x = 1.0 - x;
      y = 0.5 - y;
    }
    d.inputs.at(i, 0) = x + p.noise * jitter(rng);
    d.inputs.at(i, 1) = y + p.noise * jitter(rng);
    d.labels.push_back(label);
  }
  return out;
}

GeneratedData gaussian_blobs(const GeneratorParams& p, std::mt19937_64& rng) {
  if (p.classes < 2) throw std::invalid_argument("gaussian_blobs: need at least two classes");
  if (p.dim < 1) throw std::invalid_argument("gaussian_blobs: dim must be positive");
  std::uniform_real_distribution<double> centre(-4.0, 4.0);
  std::uniform_int_distribution<std::size_t> pick(0, p.classes - 1);
  std::normal_distribution<double> jitter(0.0, 1.0);
  std::vector<std::vector<double>> centres(p.classes, std::vector<double>(p.dim));
  for (auto& c : centres)
    for (double& v : c) v = centre(rng);

  GeneratedData out;
  Dataset& d = out.data;
  d.kind = TaskKind::Classification;
  d.num_classes = p.classes;
  d.inputs = Tensor({p.n, p.dim});
  for (std::size_t i = 0; i < p.n; ++i) {
    const std::size_t label = pick(rng);
    for (std::size_t j = 0; j < p.dim; ++j) d.inputs.at(i, j) = centres[label][j] + p.noise * jitter(rng);
    d.labels.push_back(label);
  }
  return out;
}

// Targets come from a random leaky-relu teacher network plus Gaussian noise.
GeneratedData random_regression(const GeneratorParams& p, std::mt19937_64& rng) {
  if (p.dim < 1) throw std::invalid_argument("random_regression: dim must be positive");
  const Mlp teacher = Mlp::random_normal({p.dim, 16, 1}, rng, 0.1, 0.5);
  std::normal_distribution<double> normal(0.0, 1.0);
  GeneratedData out;
  Dataset& d = out.data;
  d.kind = TaskKind::Regression;
  d.inputs = Tensor({p.n, p.dim});
  for (double& v : d.inputs.data()) v = normal(rng);
  d.targets = predict(teacher, d.inputs);
  for (double& v : d.targets.data()) v += p.noise * normal(rng);
  standardise(d.targets);
  return out;
}

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) fields.push_back(trim(field));
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

DatasetKind parse_dataset_kind(const std::string& name) {
  if (name == "two_moons") return DatasetKind::TwoMoons;
  if (name == "gaussian_blobs") return DatasetKind::GaussianBlobs;
  if (name == "random_regression") return DatasetKind::RandomRegression;
  throw std::invalid_argument("unknown dataset kind '" + name + "'");
}

std::string to_string(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::TwoMoons:
      return "two_moons";
    case DatasetKind::GaussianBlobs:
      return "gaussian_blobs";
    case DatasetKind::RandomRegression:
      return "random_regression";
  }
  return "unknown";
}

GeneratedData generate_dataset(const GeneratorParams& params) {
  if (params.n < 2) throw std::invalid_argument("generate_dataset: need n >= 2");
  if (!(params.noise >= 0.0)) throw std::invalid_argument("generate_dataset: noise must be nonnegative");
  std::mt19937_64 rng(params.seed);
  GeneratedData out;
  switch (params.kind) {
    case DatasetKind::TwoMoons:
      out = two_moons(params, rng);
      break;
    case DatasetKind::GaussianBlobs:
      out = gaussian_blobs(params, rng);
      break;
    case DatasetKind::RandomRegression:
      out = random_regression(params, rng);
      break;
  }
  std::tie(out.feature_mean, out.feature_std) = standardise(out.data.inputs);
  out.data.validate();
  return out;
}

Dataset parse_dataset_csv(const std::string& text, TaskKind kind, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& msg) -> DataError {
    return DataError(source + ":" + std::to_string(line_no) + ": " + msg);
  };

  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    header = split_csv(line);
    break;
  }
  if (header.empty()) throw DataError(source + ": empty dataset file");
  if (header.size() < 2 || header.back() != "y") throw fail("header must be x0,...,x{d-1},y");
  const std::size_t d = header.size() - 1;
  for (std::size_t j = 0; j < d; ++j) {
    if (header[j] != "x" + std::to_string(j))
      throw fail("header column " + std::to_string(j) + " is '" + header[j] + "', expected 'x" + std::to_string(j) + "'");
  }

  std::vector<double> xs, ys;
  std::vector<std::size_t> labels;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto fields = split_csv(line);
    if (fields.size() != d + 1)
      throw fail("expected " + std::to_string(d + 1) + " fields, found " + std::to_string(fields.size()));
    for (std::size_t j = 0; j <= d; ++j) {
      const std::string& f = fields[j];
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc() || ptr != f.data() + f.size() || f.empty())
        throw fail("column " + std::to_string(j) + ": cannot parse '" + f + "' as a number");
      if (!std::isfinite(v)) throw fail("column " + std::to_string(j) + ": non-finite value");
      if (j < d) {
        xs.push_back(v);
      } else if (kind == TaskKind::Regression) {
        ys.push_back(v);
      } else {
        if (v < 0.0 || v != std::floor(v)) throw fail("class label '" + f + "' is not a nonnegative integer");
        labels.push_back(static_cast<std::size_t>(v));
      }
    }
  }
  const std::size_t n = xs.size() / d;
  if (n == 0) throw DataError(source + ": no data rows");

  Dataset out;
  out.kind = kind;
  out.inputs = Tensor({n, d}, std::move(xs));
  if (kind == TaskKind::Regression) {
    out.targets = Tensor({n, 1}, std::move(ys));
  } else {
    out.num_classes = std::max<std::size_t>(2, *std::max_element(labels.begin(), labels.end()) + 1);
    out.labels = std::move(labels);
  }
  out.validate();
  return out;
}

Dataset load_dataset(const std::filesystem::path& path, TaskKind kind) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure("cannot open dataset " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_dataset_csv(buf.str(), kind, path.string());
}

std::string dataset_to_csv(const Dataset& data) {
  if (data.kind == TaskKind::Regression && data.targets.cols() != 1)
    throw std::invalid_argument("CSV format holds a single target column");
  std::string out;
  const std::size_t d = data.input_width();
  for (std::size_t j = 0; j < d; ++j) out += "x" + std::to_string(j) + ",";
  out += "y\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t j = 0; j < d; ++j) out += format_double(data.inputs.at(i, j)) + ",";
    out += data.kind == TaskKind::Regression ? format_double(data.targets.at(i, 0)) : std::to_string(data.labels[i]);
    out += "\n";
  }
  return out;
}

Split train_test_split(const Dataset& data, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw std::invalid_argument("test_fraction must lie in (0, 1)");
  const std::size_t n = data.size();
  if (n < 2) throw std::invalid_argument("need at least two rows to split");
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  const auto n_test = std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(test_fraction * n)), 1, n - 1);
  std::vector<std::size_t> test(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_test));
  std::vector<std::size_t> train(idx.begin() + static_cast<std::ptrdiff_t>(n_test), idx.end());
  return {data.subset(train), data.subset(test)};
}

}  // namespace madam::harness
