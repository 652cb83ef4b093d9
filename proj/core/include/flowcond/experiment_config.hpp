// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "flowcond/toml.hpp"
#include "flowcond/toy_data.hpp"

namespace flowcond {

/// Experiment knobs mirrored from the module configs, with defaults equal
/// to the toy-problem settings. Unknown keys are rejected; relative paths
/// are resolved against the config file's directory.
struct ExperimentConfig {
  std::filesystem::path base_dir = ".";

  struct Data {
    DatasetKind kind = DatasetKind::kSCurve;
    double noise_sigma = 0.05;
    std::uint64_t n = 10240;
    std::uint64_t seed = 1;
    std::string out = "data.csv";
  } data;

  struct Train {
    std::uint64_t batch_size = 256;
    std::uint64_t steps = 15000;
    double learning_rate = 1e-4;
    double bridge_sigma = 1e-3;
    std::uint64_t seed = 1;
    bool ot_pairing = true;
    std::uint64_t hidden_dim = 128;
    std::uint64_t hidden_layers = 4;
    std::uint64_t time_frequencies = 8;
    std::string data_path = "data.csv";
    std::string out = "prior.fcv";
    std::string loss_out = "loss.csv";
  } train;

  struct Condition {
    std::string method = "dflow-sgld";
    OperatorKind op = OperatorKind::kF2;
    std::optional<double> y;
    std::optional<double> sigma_y;  // default picked by operator
    std::uint64_t n = 1000;
    std::uint64_t seed = 1;
    std::uint64_t workers = 1;

    double b = 3.0;
    double epsilon = 1e-8;
    std::string guidance_scheme = "euler";
    std::uint64_t guidance_steps = 300;

    std::optional<std::uint64_t> optim_steps;  // 10 S-curve / 20 two-moons
    std::string dflow_optimizer = "lbfgs";
    double dflow_learning_rate = 0.1;

    std::uint64_t sgld_chains = 10;
    std::uint64_t sgld_steps = 500;
    std::uint64_t sgld_burn = 100;
    std::uint64_t sgld_thinning = 1;
    double sgld_eta = 5e-2;
    double sgld_noise = 1e-2;
    double sgld_noise_start = 0.3;
    std::optional<double> sgld_lambda;  // 0.1 S-curve / 0.05 two-moons
    double sgld_omega = 0.99;
    double sgld_delta = 1e-3;
    bool sgld_preconditioner = true;
    std::string warm_start = "gaussian";
    std::uint64_t warm_start_steps = 3;

    std::string ode_scheme = "midpoint";
    std::uint64_t ode_steps = 6;

    std::string model_path = "prior.fcv";
    std::string out = "conditional.csv";
    std::string source_out;
  } condition;

  struct Evaluate {
    std::uint64_t pool_size = 200000;
    std::uint64_t n_out = 1000;
    std::uint64_t seed = 1;
    std::string samples;
    std::string reference;
    std::string out = "metrics.json";
  } evaluate;

  static ExperimentConfig from_document(const toml::Document& doc,
                                        std::filesystem::path base_dir);
  static ExperimentConfig load(const std::filesystem::path& path);

  std::filesystem::path resolve(const std::string& rel) const;

  // Table-2 defaults that depend on the dataset
  std::uint64_t resolved_optim_steps() const;
  double resolved_sgld_lambda() const;
  double resolved_sigma_y() const;

  /// FLOWCOND_SEED, when set, overrides every section seed.
  void apply_env_seed_override();
};

}  // namespace flowcond
