// Copyright 2026 The Madam Authors
// SPDX-License-Identifier: Apache-2.0

#include "madam/harness/config.hpp"

#include <fstream>
#include <set>

namespace madam::harness {

using nlohmann::json;

namespace {

// Reads fields out of one JSON object and complains about any it did not use.
class Section {
 public:
  Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) throw ConfigError("'" + name_ + "' must be an object");
  }

  template <typename T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(name_ + "." + key + ": " + e.what());
    }
  }

  void read_optional(const char* key, std::optional<double>& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end() || it->is_null()) return;
    if (!it->is_number()) throw ConfigError(name_ + "." + key + ": expected a number");
    out = it->get<double>();
  }

  const json* child(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError("unknown key '" + name_ + "." + it.key() + "'");
    }
  }

 private:
  const json& j_;
  std::string name_;
  std::set<std::string> seen_;
};

std::string kind_name(TaskKind k) { return k == TaskKind::Regression ? "regression" : "classification"; }

TaskKind parse_kind(const std::string& s) {
  if (s == "regression") return TaskKind::Regression;
  if (s == "classification") return TaskKind::Classification;
  throw ConfigError("task.kind must be 'regression' or 'classification', got '" + s + "'");
}

}  // namespace

void ExperimentConfig::validate() const {
  static const std::set<std::string> datasets{"two_moons", "gaussian_blobs", "random_regression", "csv"};
  static const std::set<std::string> optimizers{"madam", "sgd", "adam", "lars"};
  if (!datasets.count(task.dataset)) throw ConfigError("task.dataset: unknown dataset '" + task.dataset + "'");
  if (task.dataset == "csv" && task.path.empty()) throw ConfigError("task.path is required for csv datasets");
  if (task.n < 2) throw ConfigError("task.n must be at least 2");
  if (!(task.noise >= 0.0)) throw ConfigError("task.noise must be nonnegative");
  if (task.dim < 1) throw ConfigError("task.dim must be positive");
  if (task.classes < 2) throw ConfigError("task.classes must be at least 2");
  if (!(task.test_fraction > 0.0 && task.test_fraction < 1.0)) throw ConfigError("task.test_fraction must lie in (0, 1)");
  for (auto w : model.hidden)
    if (w == 0) throw ConfigError("model.hidden widths must be positive");
  if (!(model.leak >= 0.0 && model.leak < 1.0)) throw ConfigError("model.leak must lie in [0, 1)");
  if (!optimizers.count(optimizer.name)) throw ConfigError("optimizer.name: unknown optimizer '" + optimizer.name + "'");
  if (!(optimizer.eta > 0.0)) throw ConfigError("optimizer.eta must be positive");
  if (!(optimizer.eta_star_ratio >= 1.0)) throw ConfigError("optimizer.eta_star_ratio must be at least 1");
  if (!(optimizer.beta >= 0.0 && optimizer.beta < 1.0)) throw ConfigError("optimizer.beta must lie in [0, 1)");
  if (!(optimizer.sigma_star_multiplier > 0.0)) throw ConfigError("optimizer.sigma_star_multiplier must be positive");
  if (!(optimizer.momentum >= 0.0 && optimizer.momentum < 1.0)) throw ConfigError("optimizer.momentum must lie in [0, 1)");
  if (!(optimizer.beta1 >= 0.0 && optimizer.beta1 < 1.0)) throw ConfigError("optimizer.beta1 must lie in [0, 1)");
  if (!(optimizer.beta2 >= 0.0 && optimizer.beta2 < 1.0)) throw ConfigError("optimizer.beta2 must lie in [0, 1)");
  if (!(optimizer.adam_eps > 0.0)) throw ConfigError("optimizer.adam_eps must be positive");
  if (!(optimizer.weight_decay >= 0.0)) throw ConfigError("optimizer.weight_decay must be nonnegative");
  if (lns.enabled && optimizer.name != "madam") throw ConfigError("lns requires the madam optimizer");
  if (lns.bits < 2 || lns.bits > 32) throw ConfigError("lns.bits must lie in [2, 32]");
  if (!(lns.eta0 > 0.0)) throw ConfigError("lns.eta0 must be positive");
  if (lns.eta_floor && !(*lns.eta_floor > 0.0)) throw ConfigError("lns.eta_floor must be positive");
  if (schedule.batch_size < 1) throw ConfigError("schedule.batch_size must be positive");
  if (schedule.decay != "none" && schedule.decay != "plateau") throw ConfigError("schedule.decay must be 'none' or 'plateau'");
  if (!(schedule.decay_factor > 1.0)) throw ConfigError("schedule.decay_factor must exceed 1");
  if (schedule.patience < 1) throw ConfigError("schedule.patience must be at least 1");
  if (!(schedule.min_rel_improvement >= 0.0)) throw ConfigError("schedule.min_rel_improvement must be nonnegative");
}

json to_json(const ExperimentConfig& c) {
  json lns = {{"enabled", c.lns.enabled}, {"bits", c.lns.bits}, {"eta0", c.lns.eta0}};
  lns["eta_floor"] = c.lns.eta_floor ? json(*c.lns.eta_floor) : json(nullptr);
  return {{"task",
           {{"dataset", c.task.dataset},
            {"path", c.task.path},
            {"kind", kind_name(c.task.kind)},
            {"n", c.task.n},
            {"noise", c.task.noise},
            {"dim", c.task.dim},
            {"classes", c.task.classes},
            {"test_fraction", c.task.test_fraction},
            {"seed", c.task.seed}}},
          {"model", {{"hidden", c.model.hidden}, {"leak", c.model.leak}}},
          {"optimizer",
           {{"name", c.optimizer.name},
            {"eta", c.optimizer.eta},
            {"eta_star_ratio", c.optimizer.eta_star_ratio},
            {"beta", c.optimizer.beta},
            {"sigma_star_multiplier", c.optimizer.sigma_star_multiplier},
            {"momentum", c.optimizer.momentum},
            {"beta1", c.optimizer.beta1},
            {"beta2", c.optimizer.beta2},
            {"adam_eps", c.optimizer.adam_eps},
            {"weight_decay", c.optimizer.weight_decay}}},
          {"lns", lns},
          {"schedule",
           {{"epochs", c.schedule.epochs},
            {"batch_size", c.schedule.batch_size},
            {"decay", c.schedule.decay},
            {"decay_factor", c.schedule.decay_factor},
            {"patience", c.schedule.patience},
            {"min_rel_improvement", c.schedule.min_rel_improvement}}},
          {"seed", c.seed},
          {"output_dir", c.output_dir}};
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  Section root(j, "config");
  if (const json* t = root.child("task")) {
    Section s(*t, "task");
    s.read("dataset", c.task.dataset);
    s.read("path", c.task.path);
    std::string kind = kind_name(c.task.kind);
    s.read("kind", kind);
    c.task.kind = parse_kind(kind);
    s.read("n", c.task.n);
    s.read("noise", c.task.noise);
    s.read("dim", c.task.dim);
    s.read("classes", c.task.classes);
    s.read("test_fraction", c.task.test_fraction);
    s.read("seed", c.task.seed);
    s.finish();
  }
  if (const json* m = root.child("model")) {
    Section s(*m, "model");
    s.read("hidden", c.model.hidden);
    s.read("leak", c.model.leak);
    s.finish();
  }
  if (const json* o = root.child("optimizer")) {
    Section s(*o, "optimizer");
    s.read("name", c.optimizer.name);
    s.read("eta", c.optimizer.eta);
    s.read("eta_star_ratio", c.optimizer.eta_star_ratio);
    s.read("beta", c.optimizer.beta);
    s.read("sigma_star_multiplier", c.optimizer.sigma_star_multiplier);
    s.read("momentum", c.optimizer.momentum);
    s.read("beta1", c.optimizer.beta1);
    s.read("beta2", c.optimizer.beta2);
    s.read("adam_eps", c.optimizer.adam_eps);
    s.read("weight_decay", c.optimizer.weight_decay);
    s.finish();
  }
  if (const json* l = root.child("lns")) {
    Section s(*l, "lns");
    s.read("enabled", c.lns.enabled);
    s.read("bits", c.lns.bits);
    s.read("eta0", c.lns.eta0);
    s.read_optional("eta_floor", c.lns.eta_floor);
    s.finish();
  }
  if (const json* sc = root.child("schedule")) {
    Section s(*sc, "schedule");
    s.read("epochs", c.schedule.epochs);
    s.read("batch_size", c.schedule.batch_size);
    s.read("decay", c.schedule.decay);
    s.read("decay_factor", c.schedule.decay_factor);
    s.read("patience", c.schedule.patience);
    s.read("min_rel_improvement", c.schedule.min_rel_improvement);
    s.finish();
  }
  root.read("seed", c.seed);
  root.read("output_dir", c.output_dir);
  root.finish();
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure("cannot open config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

std::string config_hash(const ExperimentConfig& config) {
  json j = to_json(config);
  j.erase("output_dir");
  const std::string canonical = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  static const char* hex = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = hex[h & 0xf];
  return out;
}

}  // namespace madam::harness
