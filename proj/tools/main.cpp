// SPDX-License-Identifier: Apache-2.0
//
// flowcond command-line harness: gen-data / train / sample / condition /
// evaluate / ablate. TOML config supplies defaults, flags override, and
// FLOWCOND_SEED overrides every seed.
#include <algorithm>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "flowcond/csv.hpp"
#include "flowcond/experiment_config.hpp"
#include "flowcond/guidance.hpp"
#include "flowcond/metrics.hpp"
#include "flowcond/source_posterior.hpp"
#include "flowcond/toy_data.hpp"
#include "flowcond/training.hpp"
#include "flowcond/transport.hpp"
#include "flowcond/velocity_model.hpp"

#include "svg_scatter.hpp"

namespace fc = flowcond;

namespace {

// start batches for `sample` and `condition` come from the same stream so
// that a zero-strength guided run reproduces unconditional sampling
constexpr std::uint64_t kStartStream = 0x73616d70ULL;

fc::IntegratorConfig::Scheme parse_scheme(const std::string& name) {
  if (name == "euler") return fc::IntegratorConfig::Scheme::kEuler;
  if (name == "midpoint") return fc::IntegratorConfig::Scheme::kMidpoint;
  throw std::runtime_error("unknown ODE scheme '" + name + "' (euler|midpoint)");
}

fc::ModelArchitecture arch_from(const fc::ExperimentConfig& cfg) {
  fc::ModelArchitecture arch;
  arch.hidden_dim = cfg.train.hidden_dim;
  arch.hidden_layers = cfg.train.hidden_layers;
  arch.time_frequencies = cfg.train.time_frequencies;
  return arch;
}

fc::MeasurementModel measurement_from(const fc::ExperimentConfig& cfg) {
  if (!cfg.condition.y) {
    throw CLI::ValidationError("condition", "observed value --y is required");
  }
  const double y = *cfg.condition.y;
  fc::MeasurementModel m = cfg.condition.op == fc::OperatorKind::kF1
                               ? fc::MeasurementModel::f1(y)
                               : fc::MeasurementModel::f2(y);
  m.sigma_y = cfg.resolved_sigma_y();
  m.validate();
  return m;
}

fc::SampleBatch subsample_rows(const fc::SampleBatch& batch, std::size_t n,
                               const std::vector<std::size_t>& order) {
  fc::SampleBatch out(n, batch.cols, batch.tag);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < batch.cols; ++c) out.at(r, c) = batch.at(order[r], c);
  return out;
}

// ---- subcommand bodies -----------------------------------------------------

void run_gen_data(const fc::ExperimentConfig& cfg) {
  fc::DatasetSpec spec{cfg.data.kind, cfg.data.noise_sigma, cfg.data.seed};
  const fc::SampleBatch batch = fc::sample_dataset(spec, cfg.data.n);
  fc::io::write_samples_csv(cfg.resolve(cfg.data.out), batch);
  std::cout << "wrote " << batch.rows << " " << fc::dataset_kind_name(cfg.data.kind)
            << " samples to " << cfg.resolve(cfg.data.out).string() << "\n";
}

void run_train(const fc::ExperimentConfig& cfg) {
  const fc::SampleBatch dataset = fc::io::read_samples_csv(cfg.resolve(cfg.train.data_path));
  fc::TrainConfig tc;
  tc.batch_size = cfg.train.batch_size;
  tc.steps = cfg.train.steps;
  tc.learning_rate = cfg.train.learning_rate;
  tc.bridge_sigma = cfg.train.bridge_sigma;
  tc.seed = cfg.train.seed;
  tc.ot_pairing = cfg.train.ot_pairing;
  tc.arch = arch_from(cfg);

  const fc::TrainResult result = fc::train_prior(dataset, tc);

  fc::TrainingMeta meta;
  meta.dataset_tag = dataset.tag;
  meta.steps = tc.steps;
  meta.final_loss = result.loss_history.empty() ? 0.0 : result.loss_history.back();
  fc::save_checkpoint(cfg.resolve(cfg.train.out), result.model, meta);

  std::vector<std::vector<double>> rows;
  rows.reserve(result.loss_history.size());
  for (std::size_t i = 0; i < result.loss_history.size(); ++i) {
    rows.push_back({static_cast<double>(i), result.loss_history[i]});
  }
  fc::io::write_table_csv(cfg.resolve(cfg.train.loss_out), {"step", "loss"}, rows);
  std::cout << "trained " << tc.steps << " steps, final loss " << meta.final_loss
            << ", checkpoint " << cfg.resolve(cfg.train.out).string() << "\n";
}

void run_sample(const fc::ExperimentConfig& cfg, const std::string& scheme, std::uint64_t steps) {
  const fc::VelocityModel model = fc::load_model(cfg.resolve(cfg.condition.model_path));
  const std::size_t dim = model.architecture().input_dim;

  fc::Rng rng = fc::make_rng(cfg.condition.seed, kStartStream);
  std::vector<double> start(cfg.condition.n * dim);
  fc::fill_standard_normal(start, rng);

  fc::IntegratorConfig integrator;
  integrator.scheme = parse_scheme(scheme);
  integrator.steps = steps;
  const fc::ad::Tensor out =
      fc::integrate(model, fc::ad::Tensor(cfg.condition.n, dim, std::move(start)), integrator);
  fc::io::write_samples_csv(cfg.resolve(cfg.condition.out),
                            fc::SampleBatch::from_tensor(out, "unconditional"));
  std::cout << "wrote " << cfg.condition.n << " prior samples to "
            << cfg.resolve(cfg.condition.out).string() << "\n";
}

void run_condition(const fc::ExperimentConfig& cfg) {
  const std::string& method = cfg.condition.method;
  if (method != "grad" && method != "grad-free" && method != "dflow" && method != "dflow-sgld") {
    throw CLI::ValidationError("condition", "unknown method '" + method +
                                                "' (grad|grad-free|dflow|dflow-sgld)");
  }
  const fc::MeasurementModel measurement = measurement_from(cfg);
  const fc::VelocityModel model = fc::load_model(cfg.resolve(cfg.condition.model_path));

  fc::SampleBatch conditional;
  std::optional<fc::SampleBatch> sources;

  if (method == "grad" || method == "grad-free") {
    fc::GuidanceConfig gc;
    gc.strength = cfg.condition.b;
    gc.variant = method == "grad" ? fc::GuidanceConfig::Variant::kGrad
                                  : fc::GuidanceConfig::Variant::kGradFree;
    gc.epsilon = cfg.condition.epsilon;
    gc.integrator.scheme = parse_scheme(cfg.condition.guidance_scheme);
    gc.integrator.steps = cfg.condition.guidance_steps;
    fc::Rng rng = fc::make_rng(cfg.condition.seed, kStartStream);
    conditional = fc::guided_sample(model, measurement, gc, cfg.condition.n, rng);
  } else if (method == "dflow") {
    fc::DFlowConfig dc;
    dc.optim_steps = cfg.resolved_optim_steps();
    dc.optimizer = cfg.condition.dflow_optimizer == "lbfgs"
                       ? fc::DFlowConfig::Optimizer::kLbfgs
                       : fc::DFlowConfig::Optimizer::kAdam;
    dc.learning_rate = cfg.condition.dflow_learning_rate;
    dc.integrator.scheme = parse_scheme(cfg.condition.ode_scheme);
    dc.integrator.steps = cfg.condition.ode_steps;
    dc.seed = cfg.condition.seed;
    fc::DFlowResult result = fc::dflow_map(model, measurement, dc, cfg.condition.n);
    conditional = std::move(result.pushforward);
    sources = std::move(result.sources);
  } else if (method == "dflow-sgld") {
    fc::SgldConfig sc;
    sc.n_parallel = cfg.condition.sgld_chains;
    sc.n_steps = cfg.condition.sgld_steps;
    sc.burn_in = cfg.condition.sgld_burn;
    sc.thinning = cfg.condition.sgld_thinning;
    sc.eta = cfg.condition.sgld_eta;
    sc.noise_scale = cfg.condition.sgld_noise;
    sc.noise_anneal_start = cfg.condition.sgld_noise_start;
    sc.prior_weight = cfg.resolved_sgld_lambda();
    sc.preconditioner_decay = cfg.condition.sgld_omega;
    sc.damping = cfg.condition.sgld_delta;
    sc.use_preconditioner = cfg.condition.sgld_preconditioner;
    sc.warm_start = cfg.condition.warm_start == "map-ensemble"
                        ? fc::SgldConfig::WarmStart::kMapEnsemble
                        : fc::SgldConfig::WarmStart::kGaussian;
    sc.warm_start_steps = cfg.condition.warm_start_steps;
    sc.integrator.scheme = parse_scheme(cfg.condition.ode_scheme);
    sc.integrator.steps = cfg.condition.ode_steps;
    sc.seed = cfg.condition.seed;
    sc.workers = cfg.condition.workers;
    fc::SgldResult result = fc::dflow_sgld(model, measurement, sc);

    if (result.pushforward.rows > cfg.condition.n) {
      std::vector<std::size_t> order(result.pushforward.rows);
      std::iota(order.begin(), order.end(), 0);
      fc::Rng rng = fc::make_rng(cfg.condition.seed, 0x737562ULL);
      std::shuffle(order.begin(), order.end(), rng);
      order.resize(cfg.condition.n);
      conditional = subsample_rows(result.pushforward, cfg.condition.n, order);
      sources = subsample_rows(result.sources, cfg.condition.n, order);
    } else {
      conditional = std::move(result.pushforward);
      sources = std::move(result.sources);
    }
  }

  fc::io::write_samples_csv(cfg.resolve(cfg.condition.out), conditional);
  if (!cfg.condition.source_out.empty()) {
    if (sources) {
      fc::io::write_samples_csv(cfg.resolve(cfg.condition.source_out), *sources);
    } else {
      std::cerr << "warning: --source-out applies only to source-space methods; skipped\n";
    }
  }
  std::cout << "wrote " << conditional.rows << " conditional samples (" << method << ") to "
            << cfg.resolve(cfg.condition.out).string() << "\n";
}

void run_evaluate(const fc::ExperimentConfig& cfg) {
  const fc::SampleBatch samples = fc::io::read_samples_csv(cfg.resolve(cfg.evaluate.samples));
  const fc::MeasurementModel measurement = measurement_from(cfg);

  fc::SampleBatch reference;
  if (!cfg.evaluate.reference.empty()) {
    reference = fc::io::read_samples_csv(cfg.resolve(cfg.evaluate.reference));
  } else {
    fc::DatasetSpec spec{cfg.data.kind, cfg.data.noise_sigma, cfg.data.seed};
    fc::Rng rng = fc::make_rng(cfg.evaluate.seed, 0x726566ULL);
    reference = fc::metrics::reference_posterior(spec, measurement, cfg.evaluate.pool_size,
                                                 cfg.evaluate.n_out, rng);
  }

  const double w1 = fc::metrics::w1_distance(samples, reference, cfg.evaluate.seed);
  const double mae = fc::metrics::measurement_mae(samples, measurement);

  nlohmann::json j;
  j["w1"] = w1;
  j["mae"] = mae;
  j["n"] = samples.rows;
  j["config"] = {
      {"samples", cfg.evaluate.samples},
      {"reference", cfg.evaluate.reference.empty() ? "importance-resampled" : cfg.evaluate.reference},
      {"dataset", fc::dataset_kind_name(cfg.data.kind)},
      {"noise_sigma", cfg.data.noise_sigma},
      {"operator", fc::operator_kind_name(cfg.condition.op)},
      {"y", cfg.condition.y ? *cfg.condition.y : 0.0},
      {"sigma_y", cfg.resolved_sigma_y()},
      {"pool_size", cfg.evaluate.pool_size},
      {"reference_n", cfg.evaluate.n_out},
      {"seed", cfg.evaluate.seed},
  };
  fc::io::write_file_atomic(cfg.resolve(cfg.evaluate.out), j.dump(2) + "\n");
  std::cout << "w1=" << w1 << " mae=" << mae << " -> " << cfg.resolve(cfg.evaluate.out).string()
            << "\n";
}

void run_ablate(const fc::ExperimentConfig& cfg, const std::string& out_dir) {
  const fc::VelocityModel model = fc::load_model(cfg.resolve(cfg.condition.model_path));
  const fc::MeasurementModel measurement = measurement_from(cfg);
  const std::filesystem::path dir = cfg.resolve(out_dir);
  std::filesystem::create_directories(dir);

  fc::DatasetSpec spec{cfg.data.kind, cfg.data.noise_sigma, cfg.data.seed};
  fc::Rng ref_rng = fc::make_rng(cfg.evaluate.seed, 0x726566ULL);
  const fc::SampleBatch reference = fc::metrics::reference_posterior(
      spec, measurement, cfg.evaluate.pool_size, cfg.evaluate.n_out, ref_rng);

  // unconditional overlay background
  const std::size_t dim = model.architecture().input_dim;
  fc::Rng prior_rng = fc::make_rng(cfg.condition.seed, kStartStream);
  std::vector<double> start(cfg.condition.n * dim);
  fc::fill_standard_normal(start, prior_rng);
  fc::IntegratorConfig prior_integrator;  // midpoint, 6 steps
  const fc::SampleBatch unconditional = fc::SampleBatch::from_tensor(
      fc::integrate(model, fc::ad::Tensor(cfg.condition.n, dim, std::move(start)),
                    prior_integrator),
      "unconditional");

  const double b_values[] = {1.0, 3.0, 10.0};
  const fc::GuidanceConfig::Variant variants[] = {fc::GuidanceConfig::Variant::kGrad,
                                                  fc::GuidanceConfig::Variant::kGradFree};
  std::vector<std::vector<double>> table;
  for (double b : b_values) {
    std::vector<double> row{b};
    for (auto variant : variants) {
      fc::GuidanceConfig gc;
      gc.strength = b;
      gc.variant = variant;
      gc.epsilon = cfg.condition.epsilon;
      gc.integrator.scheme = parse_scheme(cfg.condition.guidance_scheme);
      gc.integrator.steps = cfg.condition.guidance_steps;
      fc::Rng rng = fc::make_rng(cfg.condition.seed, kStartStream);
      const fc::SampleBatch cond = fc::guided_sample(model, measurement, gc, cfg.condition.n, rng);

      row.push_back(fc::metrics::measurement_mae(cond, measurement));
      row.push_back(fc::metrics::w1_distance(cond, reference, cfg.evaluate.seed));

      const std::string name = std::string(fc::guidance_variant_name(variant)) + "_b" +
                               std::to_string(static_cast<int>(b));
      const fc::io::ScatterLayer layers[] = {
          {&unconditional, "#9e9e9e", 1.6, 0.45},
          {&cond, "#ff7f0e", 1.8, 0.7},
      };
      fc::io::write_svg_scatter(dir / (name + ".svg"), layers,
                                name + " on " + fc::dataset_kind_name(cfg.data.kind));
    }
    table.push_back(std::move(row));
  }
  fc::io::write_table_csv(dir / "ablation.csv",
                          {"b", "grad_mae", "grad_w1", "grad_free_mae", "grad_free_w1"}, table);
  std::cout << "ablation table and scatter overlays in " << dir.string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"flowcond: OT-CFM priors on 2D toys with training-free posterior sampling"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path, "TOML experiment config supplying defaults")
      ->check(CLI::ExistingFile);

  fc::ExperimentConfig cfg;  // populated after parsing --config

  // gen-data ------------------------------------------------------------
  auto* gen = app.add_subcommand("gen-data", "draw a toy dataset and write it as CSV");
  std::string gen_kind, gen_out;
  std::optional<double> gen_sigma;
  std::optional<std::uint64_t> gen_n, gen_seed;
  gen->add_option("--kind", gen_kind, "s-curve | two-moons");
  gen->add_option("--n", gen_n, "sample count");
  gen->add_option("--noise-sigma", gen_sigma, "generator noise sigma");
  gen->add_option("--seed", gen_seed, "rng seed");
  gen->add_option("--out", gen_out, "output CSV path");

  // train ---------------------------------------------------------------
  auto* train = app.add_subcommand("train", "train the OT-CFM prior on a dataset CSV");
  std::string train_data, train_out, train_loss;
  std::optional<std::uint64_t> train_steps, train_batch, train_seed;
  std::optional<double> train_lr, train_sigma;
  std::optional<bool> train_ot;
  train->add_option("--data", train_data, "dataset CSV");
  train->add_option("--out", train_out, "checkpoint path");
  train->add_option("--loss-out", train_loss, "loss history CSV");
  train->add_option("--steps", train_steps, "Adam steps");
  train->add_option("--batch-size", train_batch, "minibatch size");
  train->add_option("--learning-rate", train_lr, "Adam learning rate");
  train->add_option("--bridge-sigma", train_sigma, "bridge path sigma");
  train->add_option("--seed", train_seed, "rng seed");
  train->add_option("--ot-pairing", train_ot, "couple endpoints by optimal assignment");

  // sample --------------------------------------------------------------
  auto* sample = app.add_subcommand("sample", "draw unconditional prior samples");
  std::string sample_model, sample_out, sample_scheme = "midpoint";
  std::uint64_t sample_steps = 6;
  std::optional<std::uint64_t> sample_n, sample_seed;
  sample->add_option("--model", sample_model, "checkpoint path");
  sample->add_option("--n", sample_n, "sample count");
  sample->add_option("--seed", sample_seed, "rng seed");
  sample->add_option("--scheme", sample_scheme, "euler | midpoint");
  sample->add_option("--steps", sample_steps, "integrator steps");
  sample->add_option("--out", sample_out, "output CSV");

  // condition -----------------------------------------------------------
  auto* cond = app.add_subcommand("condition", "training-free conditional sampling");
  std::string cond_model, cond_out, cond_src_out, cond_method, cond_op;
  std::optional<double> cond_y, cond_sigma_y, cond_b;
  std::optional<std::uint64_t> cond_n, cond_seed, cond_workers, cond_gsteps, cond_osteps;
  std::string cond_gscheme, cond_oscheme, cond_optimizer, cond_warm;
  std::optional<std::uint64_t> cond_optim_steps, cond_chains, cond_steps_sgld, cond_burn;
  std::optional<double> cond_eta, cond_noise, cond_noise_start, cond_lambda;
  std::optional<bool> cond_precond;
  cond->add_option("--model", cond_model, "checkpoint path");
  cond->add_option("--method", cond_method, "grad | grad-free | dflow | dflow-sgld");
  cond->add_option("--operator", cond_op, "f1 | f2");
  cond->add_option("--y", cond_y, "observed measurement value");
  cond->add_option("--sigma-y", cond_sigma_y, "likelihood noise std");
  cond->add_option("--n", cond_n, "conditional sample count");
  cond->add_option("--b", cond_b, "guidance strength");
  cond->add_option("--seed", cond_seed, "rng seed");
  cond->add_option("--workers", cond_workers, "SGLD chain worker threads");
  cond->add_option("--guidance-scheme", cond_gscheme, "guidance integrator scheme");
  cond->add_option("--guidance-steps", cond_gsteps, "guidance integrator steps");
  cond->add_option("--ode-scheme", cond_oscheme, "source-method integrator scheme");
  cond->add_option("--ode-steps", cond_osteps, "source-method integrator steps");
  cond->add_option("--n-optim-steps", cond_optim_steps, "D-Flow optimization steps");
  cond->add_option("--dflow-optimizer", cond_optimizer, "adam | lbfgs");
  cond->add_option("--sgld-chains", cond_chains, "parallel SGLD chains");
  cond->add_option("--sgld-steps", cond_steps_sgld, "SGLD iterations per chain");
  cond->add_option("--sgld-burn", cond_burn, "burn-in iterations");
  cond->add_option("--sgld-eta", cond_eta, "SGLD step size");
  cond->add_option("--sgld-noise", cond_noise, "SGLD noise scale s");
  cond->add_option("--sgld-noise-start", cond_noise_start,
                   "initial annealed noise scale (<= 0 for constant)");
  cond->add_option("--sgld-lambda", cond_lambda, "source prior weight");
  cond->add_option("--sgld-preconditioner", cond_precond, "use the RMSProp-style preconditioner");
  cond->add_option("--warm-start", cond_warm, "gaussian | map-ensemble");
  cond->add_option("--out", cond_out, "conditional samples CSV");
  cond->add_option("--source-out", cond_src_out, "optimized/collected source CSV");

  // evaluate ------------------------------------------------------------
  auto* eval = app.add_subcommand("evaluate", "W1 + MAE metrics against a reference posterior");
  std::string eval_samples, eval_reference, eval_out, eval_kind, eval_op;
  std::optional<double> eval_y, eval_sigma_y, eval_noise;
  std::optional<std::uint64_t> eval_pool, eval_nout, eval_seed;
  eval->add_option("--samples", eval_samples, "conditional samples CSV");
  eval->add_option("--reference", eval_reference, "reference samples CSV (else resampled)");
  eval->add_option("--dataset-kind", eval_kind, "dataset for the resampled reference");
  eval->add_option("--noise-sigma", eval_noise, "dataset noise for the reference pool");
  eval->add_option("--operator", eval_op, "f1 | f2");
  eval->add_option("--y", eval_y, "observed measurement value");
  eval->add_option("--sigma-y", eval_sigma_y, "likelihood noise std");
  eval->add_option("--pool-size", eval_pool, "importance pool size");
  eval->add_option("--n-out", eval_nout, "reference sample count");
  eval->add_option("--seed", eval_seed, "rng seed");
  eval->add_option("--out", eval_out, "metrics JSON path");

  // ablate ----------------------------------------------------------------
  auto* ablate = app.add_subcommand("ablate", "guidance-strength sweep (b = 1, 3, 10)");
  std::string ab_model, ab_out_dir = "ablation", ab_kind, ab_op;
  std::optional<double> ab_y, ab_noise;
  std::optional<std::uint64_t> ab_n, ab_seed;
  ablate->add_option("--model", ab_model, "checkpoint path");
  ablate->add_option("--dataset-kind", ab_kind, "dataset for the reference posterior");
  ablate->add_option("--noise-sigma", ab_noise, "dataset noise sigma");
  ablate->add_option("--operator", ab_op, "f1 | f2");
  ablate->add_option("--y", ab_y, "observed measurement value");
  ablate->add_option("--n", ab_n, "samples per run");
  ablate->add_option("--seed", ab_seed, "rng seed");
  ablate->add_option("--out-dir", ab_out_dir, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    cfg = config_path.empty() ? fc::ExperimentConfig{}
                              : fc::ExperimentConfig::load(config_path);
    cfg.apply_env_seed_override();

    // flag overrides
    if (!gen_kind.empty() || gen->parsed()) {
      if (!gen_kind.empty()) {
        const auto kind = fc::parse_dataset_kind(gen_kind);
        if (!kind) throw std::runtime_error("unknown dataset kind '" + gen_kind + "'");
        cfg.data.kind = *kind;
      }
      if (gen_sigma) cfg.data.noise_sigma = *gen_sigma;
      if (gen_n) cfg.data.n = *gen_n;
      if (gen_seed) cfg.data.seed = *gen_seed;
      if (!gen_out.empty()) cfg.data.out = gen_out;
    }
    if (train->parsed()) {
      if (!train_data.empty()) cfg.train.data_path = train_data;
      if (!train_out.empty()) cfg.train.out = train_out;
      if (!train_loss.empty()) cfg.train.loss_out = train_loss;
      if (train_steps) cfg.train.steps = *train_steps;
      if (train_batch) cfg.train.batch_size = *train_batch;
      if (train_lr) cfg.train.learning_rate = *train_lr;
      if (train_sigma) cfg.train.bridge_sigma = *train_sigma;
      if (train_seed) cfg.train.seed = *train_seed;
      if (train_ot) cfg.train.ot_pairing = *train_ot;
    }
    if (sample->parsed()) {
      if (!sample_model.empty()) cfg.condition.model_path = sample_model;
      if (sample_n) cfg.condition.n = *sample_n;
      if (sample_seed) cfg.condition.seed = *sample_seed;
      if (!sample_out.empty()) cfg.condition.out = sample_out;
    }
    if (cond->parsed()) {
      if (!cond_model.empty()) cfg.condition.model_path = cond_model;
      if (!cond_method.empty()) cfg.condition.method = cond_method;
      if (!cond_op.empty()) {
        const auto op = fc::parse_operator_kind(cond_op);
        if (!op) throw std::runtime_error("unknown operator '" + cond_op + "'");
        cfg.condition.op = *op;
      }
      if (cond_y) cfg.condition.y = cond_y;
      if (cond_sigma_y) cfg.condition.sigma_y = cond_sigma_y;
      if (cond_n) cfg.condition.n = *cond_n;
      if (cond_b) cfg.condition.b = *cond_b;
      if (cond_seed) cfg.condition.seed = *cond_seed;
      if (cond_workers) cfg.condition.workers = *cond_workers;
      if (!cond_gscheme.empty()) cfg.condition.guidance_scheme = cond_gscheme;
      if (cond_gsteps) cfg.condition.guidance_steps = *cond_gsteps;
      if (!cond_oscheme.empty()) cfg.condition.ode_scheme = cond_oscheme;
      if (cond_osteps) cfg.condition.ode_steps = *cond_osteps;
      if (cond_optim_steps) cfg.condition.optim_steps = cond_optim_steps;
      if (!cond_optimizer.empty()) cfg.condition.dflow_optimizer = cond_optimizer;
      if (cond_chains) cfg.condition.sgld_chains = *cond_chains;
      if (cond_steps_sgld) cfg.condition.sgld_steps = *cond_steps_sgld;
      if (cond_burn) cfg.condition.sgld_burn = *cond_burn;
      if (cond_eta) cfg.condition.sgld_eta = *cond_eta;
      if (cond_noise) cfg.condition.sgld_noise = *cond_noise;
      if (cond_noise_start) cfg.condition.sgld_noise_start = *cond_noise_start;
      if (cond_lambda) cfg.condition.sgld_lambda = cond_lambda;
      if (cond_precond) cfg.condition.sgld_preconditioner = *cond_precond;
      if (!cond_warm.empty()) cfg.condition.warm_start = cond_warm;
      if (!cond_out.empty()) cfg.condition.out = cond_out;
      if (!cond_src_out.empty()) cfg.condition.source_out = cond_src_out;
    }
    if (eval->parsed()) {
      if (!eval_samples.empty()) cfg.evaluate.samples = eval_samples;
      if (!eval_reference.empty()) cfg.evaluate.reference = eval_reference;
      if (!eval_out.empty()) cfg.evaluate.out = eval_out;
      if (!eval_kind.empty()) {
        const auto kind = fc::parse_dataset_kind(eval_kind);
        if (!kind) throw std::runtime_error("unknown dataset kind '" + eval_kind + "'");
        cfg.data.kind = *kind;
      }
      if (eval_noise) cfg.data.noise_sigma = *eval_noise;
      if (!eval_op.empty()) {
        const auto op = fc::parse_operator_kind(eval_op);
        if (!op) throw std::runtime_error("unknown operator '" + eval_op + "'");
        cfg.condition.op = *op;
      }
      if (eval_y) cfg.condition.y = eval_y;
      if (eval_sigma_y) cfg.condition.sigma_y = eval_sigma_y;
      if (eval_pool) cfg.evaluate.pool_size = *eval_pool;
      if (eval_nout) cfg.evaluate.n_out = *eval_nout;
      if (eval_seed) cfg.evaluate.seed = *eval_seed;
    }
    if (ablate->parsed()) {
      if (!ab_model.empty()) cfg.condition.model_path = ab_model;
      if (!ab_kind.empty()) {
        const auto kind = fc::parse_dataset_kind(ab_kind);
        if (!kind) throw std::runtime_error("unknown dataset kind '" + ab_kind + "'");
        cfg.data.kind = *kind;
      }
      if (ab_noise) cfg.data.noise_sigma = *ab_noise;
      if (!ab_op.empty()) {
        const auto op = fc::parse_operator_kind(ab_op);
        if (!op) throw std::runtime_error("unknown operator '" + ab_op + "'");
        cfg.condition.op = *op;
      }
      if (ab_y) cfg.condition.y = ab_y;
      if (ab_n) cfg.condition.n = *ab_n;
      if (ab_seed) cfg.condition.seed = *ab_seed;
    }

    if (gen->parsed()) run_gen_data(cfg);
    if (train->parsed()) run_train(cfg);
    if (sample->parsed()) run_sample(cfg, sample_scheme, sample_steps);
    if (cond->parsed()) run_condition(cfg);
    if (eval->parsed()) run_evaluate(cfg);
    if (ablate->parsed()) run_ablate(cfg, ab_out_dir);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
