// SPDX-License-Identifier: Apache-2.0
#include "flowcond/experiment_config.hpp"

#include <cmath>
#include <cstdlib>
#include <stdexcept>

namespace flowcond {

namespace {

class SectionReader {
 public:
  SectionReader(const toml::Document& doc, std::string name) : name_(std::move(name)) {
    auto it = doc.find(name_);
    if (it != doc.end()) pending_ = it->second;
  }

  ~SectionReader() = default;

  void get(const char* key, std::string& out) {
    if (auto v = take(key)) {
      if (auto* s = std::get_if<std::string>(&*v)) {
        out = *s;
        return;
      }
      type_error(key, *v, "string");
    }
  }

  void get(const char* key, bool& out) {
    if (auto v = take(key)) {
      if (auto* b = std::get_if<bool>(&*v)) {
        out = *b;
        return;
      }
      type_error(key, *v, "boolean");
    }
  }

  void get(const char* key, double& out) {
    if (auto v = take(key)) {
      if (auto* d = std::get_if<double>(&*v)) {
        out = *d;
        return;
      }
      if (auto* i = std::get_if<std::int64_t>(&*v)) {
        out = static_cast<double>(*i);
        return;
      }
      type_error(key, *v, "float");
    }
  }

  void get(const char* key, std::optional<double>& out) {
    double v = 0.0;
    const bool had = pending_.count(key) > 0;
    get(key, v);
    if (had) out = v;
  }

  void get(const char* key, std::uint64_t& out) {
    if (auto v = take(key)) {
      if (auto* i = std::get_if<std::int64_t>(&*v)) {
        if (*i < 0) {
          throw std::runtime_error("config: [" + name_ + "] " + key + " must be nonnegative");
        }
        out = static_cast<std::uint64_t>(*i);
        return;
      }
      type_error(key, *v, "integer");
    }
  }

  void get(const char* key, std::optional<std::uint64_t>& out) {
    std::uint64_t v = 0;
    const bool had = pending_.count(key) > 0;
    get(key, v);
    if (had) out = v;
  }

  void finish() const {
    if (!pending_.empty()) {
      throw std::runtime_error("config: unknown key '" + pending_.begin()->first + "' in [" +
                               name_ + "]");
    }
  }

 private:
  std::optional<toml::Value> take(const char* key) {
    auto it = pending_.find(key);
    if (it == pending_.end()) return std::nullopt;
    toml::Value v = it->second;
    pending_.erase(it);
    return v;
  }

  [[noreturn]] void type_error(const char* key, const toml::Value& v, const char* want) {
    throw std::runtime_error("config: [" + name_ + "] " + key + " should be a " + want +
                             ", got " + toml::type_name(v));
  }

  std::string name_;
  std::map<std::string, toml::Value> pending_;
};

}  // namespace

ExperimentConfig ExperimentConfig::from_document(const toml::Document& doc,
                                                 std::filesystem::path base_dir) {
  for (const auto& [section, keys] : doc) {
    if (section.empty() && !keys.empty()) {
      throw std::runtime_error("config: top-level key '" + keys.begin()->first +
                               "' outside any section");
    }
    if (!section.empty() && section != "data" && section != "train" && section != "condition" &&
        section != "evaluate") {
      throw std::runtime_error("config: unknown section [" + section + "]");
    }
  }

  ExperimentConfig cfg;
  cfg.base_dir = std::move(base_dir);

  {
    SectionReader s(doc, "data");
    std::string kind = dataset_kind_name(cfg.data.kind);
    s.get("kind", kind);
    const auto parsed = parse_dataset_kind(kind);
    if (!parsed) throw std::runtime_error("config: [data] unknown dataset kind '" + kind + "'");
    cfg.data.kind = *parsed;
    s.get("noise-sigma", cfg.data.noise_sigma);
    s.get("n", cfg.data.n);
    s.get("seed", cfg.data.seed);
    s.get("out", cfg.data.out);
    s.finish();
  }
  {
    SectionReader s(doc, "train");
    s.get("batch-size", cfg.train.batch_size);
    s.get("steps", cfg.train.steps);
    s.get("learning-rate", cfg.train.learning_rate);
    s.get("bridge-sigma", cfg.train.bridge_sigma);
    s.get("seed", cfg.train.seed);
    s.get("ot-pairing", cfg.train.ot_pairing);
    s.get("hidden-dim", cfg.train.hidden_dim);
    s.get("hidden-layers", cfg.train.hidden_layers);
    s.get("time-frequencies", cfg.train.time_frequencies);
    s.get("data", cfg.train.data_path);
    s.get("out", cfg.train.out);
    s.get("loss-out", cfg.train.loss_out);
    s.finish();
  }
  {
    SectionReader s(doc, "condition");
    s.get("method", cfg.condition.method);
    std::string op = operator_kind_name(cfg.condition.op);
    s.get("operator", op);
    const auto parsed = parse_operator_kind(op);
    if (!parsed) throw std::runtime_error("config: [condition] unknown operator '" + op + "'");
    cfg.condition.op = *parsed;
    s.get("y", cfg.condition.y);
    s.get("sigma-y", cfg.condition.sigma_y);
    s.get("n", cfg.condition.n);
    s.get("seed", cfg.condition.seed);
    s.get("workers", cfg.condition.workers);
    s.get("b", cfg.condition.b);
    s.get("epsilon", cfg.condition.epsilon);
    s.get("guidance-scheme", cfg.condition.guidance_scheme);
    s.get("guidance-steps", cfg.condition.guidance_steps);
    s.get("n-optim-steps", cfg.condition.optim_steps);
    s.get("dflow-optimizer", cfg.condition.dflow_optimizer);
    s.get("dflow-learning-rate", cfg.condition.dflow_learning_rate);
    s.get("sgld-chains", cfg.condition.sgld_chains);
    s.get("sgld-steps", cfg.condition.sgld_steps);
    s.get("sgld-burn", cfg.condition.sgld_burn);
    s.get("sgld-thinning", cfg.condition.sgld_thinning);
    s.get("sgld-eta", cfg.condition.sgld_eta);
    s.get("sgld-noise", cfg.condition.sgld_noise);
    s.get("sgld-noise-start", cfg.condition.sgld_noise_start);
    s.get("sgld-lambda", cfg.condition.sgld_lambda);
    s.get("sgld-omega", cfg.condition.sgld_omega);
    s.get("sgld-delta", cfg.condition.sgld_delta);
    s.get("sgld-preconditioner", cfg.condition.sgld_preconditioner);
    s.get("warm-start", cfg.condition.warm_start);
    s.get("warm-start-steps", cfg.condition.warm_start_steps);
    s.get("ode-scheme", cfg.condition.ode_scheme);
    s.get("ode-steps", cfg.condition.ode_steps);
    s.get("model", cfg.condition.model_path);
    s.get("out", cfg.condition.out);
    s.get("source-out", cfg.condition.source_out);
    s.finish();
  }
  {
    SectionReader s(doc, "evaluate");
    s.get("pool-size", cfg.evaluate.pool_size);
    s.get("n-out", cfg.evaluate.n_out);
    s.get("seed", cfg.evaluate.seed);
    s.get("samples", cfg.evaluate.samples);
    s.get("reference", cfg.evaluate.reference);
    s.get("out", cfg.evaluate.out);
    s.finish();
  }
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  const toml::Document doc = toml::parse_file(path);
  std::filesystem::path dir = path.parent_path();
  if (dir.empty()) dir = ".";
  return from_document(doc, dir);
}

std::filesystem::path ExperimentConfig::resolve(const std::string& rel) const {
  const std::filesystem::path p(rel);
  return p.is_absolute() ? p : base_dir / p;
}

std::uint64_t ExperimentConfig::resolved_optim_steps() const {
  if (condition.optim_steps) return *condition.optim_steps;
  return data.kind == DatasetKind::kSCurve ? 10 : 20;
}

double ExperimentConfig::resolved_sgld_lambda() const {
  if (condition.sgld_lambda) return *condition.sgld_lambda;
  return data.kind == DatasetKind::kSCurve ? 0.1 : 0.05;
}

double ExperimentConfig::resolved_sigma_y() const {
  if (condition.sigma_y) return *condition.sigma_y;
  return condition.op == OperatorKind::kF1 ? 0.1 : std::sqrt(0.1);
}

void ExperimentConfig::apply_env_seed_override() {
  const char* env = std::getenv("FLOWCOND_SEED");
  if (!env || !*env) return;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (!end || *end != '\0') {
    throw std::runtime_error("FLOWCOND_SEED must be an unsigned integer, got '" +
                             std::string(env) + "'");
  }
  data.seed = v;
  train.seed = v;
  condition.seed = v;
  evaluate.seed = v;
}

}  // namespace flowcond
