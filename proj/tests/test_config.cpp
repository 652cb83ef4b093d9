// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include <cstdlib>

#include "flowcond/experiment_config.hpp"
#include "flowcond/toml.hpp"

using namespace flowcond;

TEST_CASE("toml subset parsing") {
  const auto doc = toml::parse(
      "# comment\n"
      "[data]\n"
      "kind = \"two-moons\"   # trailing comment\n"
      "n = 512\n"
      "noise-sigma = 0.1\n"
      "\n"
      "[train]\n"
      "ot-pairing = false\n"
      "learning-rate = 1e-3\n");

  CHECK(std::get<std::string>(doc.at("data").at("kind")) == "two-moons");
  CHECK(std::get<std::int64_t>(doc.at("data").at("n")) == 512);
  CHECK(std::get<double>(doc.at("data").at("noise-sigma")) == 0.1);
  CHECK(std::get<bool>(doc.at("train").at("ot-pairing")) == false);
  CHECK(std::get<double>(doc.at("train").at("learning-rate")) == 1e-3);
}

TEST_CASE("toml error reporting includes the line number") {
  CHECK_THROWS_WITH_AS(toml::parse("[data\nkind = 1\n"), doctest::Contains("line 1"),
                       std::runtime_error);
  CHECK_THROWS_WITH_AS(toml::parse("[d]\nkind\n"), doctest::Contains("line 2"),
                       std::runtime_error);
  CHECK_THROWS_WITH_AS(toml::parse("[d]\nk = \"open\n"), doctest::Contains("unterminated"),
                       std::runtime_error);
  CHECK_THROWS_WITH_AS(toml::parse("[d]\nk = 1\nk = 2\n"), doctest::Contains("duplicate"),
                       std::runtime_error);
}

TEST_CASE("experiment config rejects unknown keys and sections") {
  CHECK_THROWS_WITH_AS(
      ExperimentConfig::from_document(toml::parse("[data]\nmystery = 1\n"), "."),
      doctest::Contains("unknown key 'mystery'"), std::runtime_error);
  CHECK_THROWS_WITH_AS(
      ExperimentConfig::from_document(toml::parse("[surprise]\nx = 1\n"), "."),
      doctest::Contains("unknown section"), std::runtime_error);
  CHECK_THROWS_WITH_AS(ExperimentConfig::from_document(toml::parse("loose = 1\n"), "."),
                       doctest::Contains("outside any section"), std::runtime_error);
}

TEST_CASE("experiment config type errors are descriptive") {
  CHECK_THROWS_WITH_AS(
      ExperimentConfig::from_document(toml::parse("[data]\nn = \"many\"\n"), "."),
      doctest::Contains("integer"), std::runtime_error);
  CHECK_THROWS_WITH_AS(
      ExperimentConfig::from_document(toml::parse("[data]\nseed = -3\n"), "."),
      doctest::Contains("nonnegative"), std::runtime_error);
}

TEST_CASE("defaults follow the toy hyperparameter table") {
  const ExperimentConfig cfg;
  CHECK(cfg.train.learning_rate == 1e-4);
  CHECK(cfg.train.bridge_sigma == 1e-3);
  CHECK(cfg.condition.sgld_chains == 10);
  CHECK(cfg.condition.sgld_steps == 500);
  CHECK(cfg.condition.sgld_burn == 100);
  CHECK(cfg.condition.sgld_eta == 5e-2);
  CHECK(cfg.condition.sgld_noise == 1e-2);
  CHECK(cfg.condition.sgld_omega == 0.99);
  CHECK(cfg.condition.sgld_delta == 1e-3);
  CHECK(cfg.condition.sgld_noise_start == 0.3);
  CHECK(cfg.condition.dflow_optimizer == "lbfgs");
  CHECK(cfg.train.steps == 15000);
  CHECK(cfg.condition.guidance_steps == 300);
  CHECK(cfg.condition.guidance_scheme == "euler");
  CHECK(cfg.condition.ode_scheme == "midpoint");
  CHECK(cfg.condition.ode_steps == 6);
  CHECK(cfg.condition.b == 3.0);
}

TEST_CASE("dataset-dependent defaults resolve by kind") {
  ExperimentConfig cfg;
  cfg.data.kind = DatasetKind::kSCurve;
  CHECK(cfg.resolved_optim_steps() == 10);
  CHECK(cfg.resolved_sgld_lambda() == 0.1);
  cfg.data.kind = DatasetKind::kTwoMoons;
  CHECK(cfg.resolved_optim_steps() == 20);
  CHECK(cfg.resolved_sgld_lambda() == 0.05);

  cfg.condition.optim_steps = 37;
  cfg.condition.sgld_lambda = 0.42;
  CHECK(cfg.resolved_optim_steps() == 37);
  CHECK(cfg.resolved_sgld_lambda() == 0.42);
}

TEST_CASE("likelihood variances default by operator") {
  ExperimentConfig cfg;
  cfg.condition.op = OperatorKind::kF1;
  CHECK(cfg.resolved_sigma_y() == doctest::Approx(0.1));  // variance 0.01
  cfg.condition.op = OperatorKind::kF2;
  CHECK(cfg.resolved_sigma_y() == doctest::Approx(std::sqrt(0.1)));
  cfg.condition.sigma_y = 0.5;
  CHECK(cfg.resolved_sigma_y() == 0.5);
}

TEST_CASE("FLOWCOND_SEED overrides every section seed") {
  ExperimentConfig cfg;
  setenv("FLOWCOND_SEED", "777", 1);
  cfg.apply_env_seed_override();
  unsetenv("FLOWCOND_SEED");
  CHECK(cfg.data.seed == 777);
  CHECK(cfg.train.seed == 777);
  CHECK(cfg.condition.seed == 777);
  CHECK(cfg.evaluate.seed == 777);

  setenv("FLOWCOND_SEED", "not-a-number", 1);
  CHECK_THROWS_AS(cfg.apply_env_seed_override(), std::runtime_error);
  unsetenv("FLOWCOND_SEED");
}

TEST_CASE("relative paths resolve against the config directory") {
  ExperimentConfig cfg;
  cfg.base_dir = "/tmp/experiments";
  CHECK(cfg.resolve("data.csv") == std::filesystem::path("/tmp/experiments/data.csv"));
  CHECK(cfg.resolve("/abs/data.csv") == std::filesystem::path("/abs/data.csv"));
}
