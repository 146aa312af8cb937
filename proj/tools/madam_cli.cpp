// Copyright 2026 The Madam Authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: train, grid, compare-bits, verify,
// inspect-checkpoint, gen-data.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "madam/checkpoint.hpp"
#include "madam/harness/config.hpp"
#include "madam/harness/datasets.hpp"
#include "madam/harness/experiments.hpp"
#include "madam/harness/training.hpp"
#include "madam/lns.hpp"
#include "madam/theory.hpp"

namespace {

using namespace madam;
using namespace madam::harness;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitDiverged = 3;
constexpr int kExitIo = 4;

// Values given on the command line; each one overrides the config file.
struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<double> eta;
  std::optional<int> bits;
  std::optional<double> eta0;
  std::optional<double> eta_floor;
  std::optional<std::size_t> epochs;
  std::optional<std::string> optimizer;
  std::optional<std::string> dataset;
  std::optional<std::string> decay;

  void attach(CLI::App* app) {
    app->add_option("-c,--config", config_path, "JSON experiment config");
    app->add_option("--seed", seed, "Experiment seed (init and shuffling)");
    app->add_option("--out", out, "Output directory");
    app->add_option("--eta", eta, "Learning rate");
    app->add_option("--bits", bits, "Enable the logarithmic ladder with this many bits");
    app->add_option("--eta0", eta0, "Ladder base precision");
    app->add_option("--eta-floor", eta_floor, "Lowest learning rate reachable by ladder decay");
    app->add_option("--epochs", epochs, "Training epochs");
    app->add_option("--optimizer", optimizer, "madam, sgd, adam, or lars");
    app->add_option("--dataset", dataset, "two_moons, gaussian_blobs, random_regression, or csv");
    app->add_option("--decay", decay, "none or plateau");
  }

  ExperimentConfig resolve() const {
    ExperimentConfig c = config_path.empty() ? ExperimentConfig{} : load_config(config_path);
    if (seed) c.seed = *seed;
    if (out) c.output_dir = *out;
    if (eta) c.optimizer.eta = *eta;
    if (bits) {
      c.lns.enabled = true;
      c.lns.bits = *bits;
    }
    if (eta0) c.lns.eta0 = *eta0;
    if (eta_floor) c.lns.eta_floor = *eta_floor;
    if (epochs) c.schedule.epochs = *epochs;
    if (optimizer) c.optimizer.name = *optimizer;
    if (dataset) c.task.dataset = *dataset;
    if (decay) c.schedule.decay = *decay;
    c.validate();
    return c;
  }
};

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::ios_base::failure("cannot write " + path.string());
  out << text;
}

int run_train(const Overrides& o) {
  const ExperimentConfig config = o.resolve();
  const TrialRecord rec = train(config);
  std::cout << json{{"config_hash", rec.config_hash},
                    {"optimizer", rec.optimizer},
                    {"epochs", rec.epochs.size()},
                    {"decays", rec.decays},
                    {"diverged", rec.diverged},
                    {rec.metric_name, std::isfinite(rec.final_metric) ? json(rec.final_metric) : json(nullptr)},
                    {"wall_seconds", rec.wall_seconds}}
                   .dump(2)
            << "\n";
  return rec.diverged ? kExitDiverged : kExitOk;
}

int run_grid(const Overrides& o, const std::vector<std::string>& optimizers, std::vector<double> etas, double eta_min,
             double eta_max, std::size_t threads) {
  const ExperimentConfig config = o.resolve();
  if (etas.empty()) etas = log_grid_125(eta_min, eta_max);
  const GridResult grid = grid_search(config, optimizers, etas, threads);
  const std::string csv = grid_csv(grid);
  std::cout << csv;
  if (!config.output_dir.empty()) {
    write_text(std::filesystem::path(config.output_dir) / "grid.csv", csv);
    write_text(std::filesystem::path(config.output_dir) / "grid.json", to_json(grid).dump(2) + "\n");
  }
  if (grid.all_diverged()) {
    std::cerr << "every grid cell diverged\n";
    return kExitDiverged;
  }
  return kExitOk;
}

int run_compare(const Overrides& o, const std::vector<int>& bits, std::size_t seeds, double tolerance) {
  const ExperimentConfig config = o.resolve();
  const BitwidthComparison cmp = compare_bitwidths(config, bits, seeds, tolerance);
  const std::string csv = bitwidth_csv(cmp);
  std::cout << csv << "monotone," << (cmp.monotone ? "true" : "false") << "\n";
  if (!config.output_dir.empty()) {
    write_text(std::filesystem::path(config.output_dir) / "bits.csv", csv);
    write_text(std::filesystem::path(config.output_dir) / "bits.json", to_json(cmp).dump(2) + "\n");
  }
  return kExitOk;
}

int run_verify(std::size_t trials, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> width(2, 8);
  std::size_t madam_pass = 0, lemma_pass = 0;
  double worst_slack = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < trials; ++i) {
    const TaskKind kind = i % 2 ? TaskKind::Classification : TaskKind::Regression;
    std::vector<std::size_t> widths{width(rng), width(rng), width(rng)};
    auto inst = theory::random_instance(widths, 8, kind, rng);
    const GradientBundle g = backward(inst.net, inst.batch);
    const auto cg = theory::cos_gamma(inst.net, g);
    const double eta = 0.5 * theory::theorem1_eta_bound(static_cast<int>(inst.net.depth()),
                                                        *std::min_element(cg.begin(), cg.end()));
    const auto check = theory::verify_madam_descent(inst.net, inst.batch, eta);
    if (check.angle_identity_holds() && check.relative_step_holds()) ++madam_pass;
    const auto report = theory::descent_gap(inst.net, theory::mult_sign_perturbation(inst.net, g, 0.1), inst.batch);
    worst_slack = std::min(worst_slack, report.slack);
    if (report.slack >= -1e-9) ++lemma_pass;
  }
  const auto mc = theory::gaussian_cos_gamma_mc(100000, 10, seed);
  const double bound40 = theory::theorem1_eta_bound(40, 0.64);
  const bool ok = madam_pass == trials && lemma_pass == trials && std::abs(mc.mean - 2.0 / std::numbers::pi) < 0.005;
  std::cout << json{{"trials", trials},
                    {"madam_identities_passed", madam_pass},
                    {"lemma_bound_held", lemma_pass},
                    {"worst_lemma_slack", worst_slack},
                    {"gaussian_cos_gamma", {{"mean", mc.mean}, {"stderr", mc.stderr_}, {"two_over_pi", 2.0 / std::numbers::pi}}},
                    {"eta_bound_depth40_cos064", bound40},
                    {"passed", ok}}
                   .dump(2)
            << "\n";
  return ok ? kExitOk : kExitFailure;
}

int run_inspect(const std::string& path, std::optional<int> bits, std::size_t buckets) {
  const LnsCheckpoint ckpt = load_checkpoint(path, bits);
  json layers = json::array();
  for (const auto& layer : ckpt.layers) {
    const LnsSpec& spec = layer.weights.spec;
    const double max_level = static_cast<double>(spec.max_level());
    std::vector<std::size_t> hist(buckets, 0);
    std::size_t negative = 0;
    for (std::size_t i = 0; i < layer.weights.size(); ++i) {
      const auto b = static_cast<std::size_t>(layer.weights.levels[i] / (max_level + 1) * static_cast<double>(buckets));
      ++hist[std::min(b, buckets - 1)];
      negative += layer.weights.signs[i] < 0;
    }
    layers.push_back({{"name", layer.name},
                      {"bits", spec.bits},
                      {"eta0", spec.eta0},
                      {"sigma_star", spec.sigma_star},
                      {"count", layer.weights.size()},
                      {"negative", negative},
                      {"has_gbar_sq", layer.gbar_sq.has_value()},
                      {"level_histogram", hist}});
  }
  std::cout << json{{"version", kCheckpointVersion}, {"layers", layers}}.dump(2) << "\n";
  return kExitOk;
}

int run_gen_data(const GeneratorParams& p, const std::string& output) {
  const std::string csv = dataset_to_csv(generate_dataset(p).data);
  if (output.empty() || output == "-") {
    std::cout << csv;
  } else {
    write_text(output, csv);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multiplicative-weight training and logarithmic weight storage toolkit"};
  app.require_subcommand(1);

  Overrides train_o, grid_o, cmp_o;
  auto* train_cmd = app.add_subcommand("train", "Train one model");
  train_o.attach(train_cmd);

  auto* grid_cmd = app.add_subcommand("grid", "Learning-rate grid over several optimizers");
  grid_o.attach(grid_cmd);
  std::vector<std::string> grid_optimizers{"madam", "sgd", "adam", "lars"};
  std::vector<double> grid_etas;
  double eta_min = 1e-4, eta_max = 1.0;
  std::size_t threads = 1;
  grid_cmd->add_option("--optimizers", grid_optimizers, "Optimizers to sweep")->delimiter(',');
  grid_cmd->add_option("--etas", grid_etas, "Explicit learning rates")->delimiter(',');
  grid_cmd->add_option("--eta-min", eta_min, "Smallest rate of the 1-2-5 grid");
  grid_cmd->add_option("--eta-max", eta_max, "Largest rate of the 1-2-5 grid");
  grid_cmd->add_option("--threads", threads, "Concurrent cells (0 = all cores)");

  auto* cmp_cmd = app.add_subcommand("compare-bits", "Float versus ladder Madam at several bit widths");
  cmp_o.attach(cmp_cmd);
  std::vector<int> cmp_bits{12, 10, 8};
  std::size_t cmp_seeds = 3;
  double cmp_tol = 0.02;
  cmp_cmd->add_option("--bit-list", cmp_bits, "Bit widths to compare")->delimiter(',');
  cmp_cmd->add_option("--seeds", cmp_seeds, "Repeats per row");
  cmp_cmd->add_option("--tolerance", cmp_tol, "Slack for the monotonicity report");

  auto* verify_cmd = app.add_subcommand("verify", "Run the descent-theory checks on random networks");
  std::size_t verify_trials = 100;
  std::uint64_t verify_seed = 0;
  verify_cmd->add_option("--trials", verify_trials, "Random networks to test");
  verify_cmd->add_option("--seed", verify_seed, "Seed");

  auto* inspect_cmd = app.add_subcommand("inspect-checkpoint", "Dump a ladder checkpoint header and level histogram");
  std::string inspect_path;
  std::optional<int> inspect_bits;
  std::size_t buckets = 16;
  inspect_cmd->add_option("path", inspect_path, "Checkpoint file")->required();
  inspect_cmd->add_option("--bits", inspect_bits, "Reject checkpoints with a different bit width");
  inspect_cmd->add_option("--buckets", buckets, "Histogram buckets")->check(CLI::PositiveNumber);

  auto* gen_cmd = app.add_subcommand("gen-data", "Write a synthetic dataset as CSV");
  GeneratorParams gen;
  std::string gen_kind = "two_moons", gen_out;
  gen_cmd->add_option("--kind", gen_kind, "Generator")
      ->check(CLI::IsMember({"two_moons", "gaussian_blobs", "random_regression"}));
  gen_cmd->add_option("--n", gen.n, "Rows");
  gen_cmd->add_option("--noise", gen.noise, "Noise level");
  gen_cmd->add_option("--seed", gen.seed, "Seed");
  gen_cmd->add_option("--dim", gen.dim, "Feature dimension (blobs, regression)");
  gen_cmd->add_option("--classes", gen.classes, "Classes (blobs)");
  gen_cmd->add_option("-o,--output", gen_out, "Output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*train_cmd) return run_train(train_o);
    if (*grid_cmd) return run_grid(grid_o, grid_optimizers, grid_etas, eta_min, eta_max, threads);
    if (*cmp_cmd) return run_compare(cmp_o, cmp_bits, cmp_seeds, cmp_tol);
    if (*verify_cmd) return run_verify(verify_trials, verify_seed);
    if (*inspect_cmd) return run_inspect(inspect_path, inspect_bits, buckets);
    if (*gen_cmd) {
      gen.kind = parse_dataset_kind(gen_kind);
      return run_gen_data(gen, gen_out);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const FormatError& e) {
    std::cerr << "checkpoint error: " << e.what() << "\n";
    return kExitIo;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::ios_base::failure& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}
