// SPDX-License-Identifier: Apache-2.0
#include "flowcond/source_posterior.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <iostream>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>

#include "flowcond/ops.hpp"
#include "flowcond/tape.hpp"

namespace flowcond {

ad::Tensor source_energy(const VelocityModel& model, const MeasurementModel& measurement,
                         const ad::Tensor& x0, double lambda, double alpha, double beta,
                         const IntegratorConfig& integrator, const RegularizerHooks& hooks) {
  measurement.validate();
  if (lambda < 0.0 || alpha < 0.0 || beta < 0.0) {
    throw std::invalid_argument("source_energy: regularizer weights must be nonnegative");
  }
  IntegratorConfig fwd = integrator;
  fwd.direction = IntegratorConfig::Direction::kForward;

  ad::Tensor x1 = integrate(model, x0, fwd);
  ad::Tensor y = ad::Tensor::from_row(measurement.observed);
  ad::Tensor residual = ad::sub(ad::broadcast(y, x1.rows()), measure(measurement, x1));
  ad::Tensor energy = ad::l2_norm_sq(residual);
  if (lambda != 0.0) {
    energy = ad::add(energy, ad::scalar_mul(ad::l2_norm_sq(x0), lambda));
  }
  if (alpha != 0.0 && hooks.source) {
    energy = ad::add(energy, ad::scalar_mul(hooks.source(x0), alpha));
  }
  if (beta != 0.0 && hooks.state) {
    energy = ad::add(energy, ad::scalar_mul(hooks.state(x1), beta));
  }
  return energy;
}

// ---- D-Flow MAP ------------------------------------------------------------

namespace {

struct RowAdam {
  double lr, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  std::size_t t = 0;
  std::vector<double> m, v;

  explicit RowAdam(double lr_, std::size_t size) : lr(lr_), m(size, 0.0), v(size, 0.0) {}

  void step(std::span<double> w, std::span<const double> g) {
    ++t;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (std::size_t k = 0; k < w.size(); ++k) {
      m[k] = beta1 * m[k] + (1.0 - beta1) * g[k];
      v[k] = beta2 * v[k] + (1.0 - beta2) * g[k] * g[k];
      w[k] -= lr * (m[k] / bc1) / (std::sqrt(v[k] / bc2) + eps);
    }
  }

  void reset_row(std::size_t row, std::size_t cols) {
    for (std::size_t c = 0; c < cols; ++c) {
      m[row * cols + c] = 0.0;
      v[row * cols + c] = 0.0;
    }
  }
};

std::vector<double> per_row_energies(const VelocityModel& model, const MeasurementModel& meas,
                                     const ad::Tensor& x, double lambda, const DFlowConfig& cfg) {
  const ad::Tensor e = source_energy(model, meas, x, lambda, cfg.alpha, cfg.beta, cfg.integrator);
  const auto v = e.values();
  return {v.begin(), v.end()};
}

struct LbfgsProblem {
  double lambda = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  IntegratorConfig integrator{};
  std::size_t steps = 10;
  std::size_t history = 10;
};

void lbfgs_optimize(const VelocityModel& model, const MeasurementModel& meas,
                    const LbfgsProblem& cfg, std::span<double> x_row) {
  const std::size_t d = x_row.size();

  // non-finite states inside the solve are treated as an infinite energy
  // so the line search backs off instead of propagating the failure
  auto eval = [&](std::span<const double> w, std::vector<double>* grad_out) -> double {
    try {
      ad::Tape tape;
      ad::Tensor xw = tape.watch(ad::Tensor(1, d, {w.begin(), w.end()}));
      ad::Tensor e = source_energy(model, meas, xw, cfg.lambda, cfg.alpha, cfg.beta,
                                   cfg.integrator);
      if (grad_out) {
        const ad::GradientMap grads = tape.backward(e);
        const auto g = grads.at(xw).values();
        grad_out->assign(g.begin(), g.end());
      }
      return e.scalar();
    } catch (const std::runtime_error&) {
      if (grad_out) grad_out->assign(d, 0.0);
      return std::numeric_limits<double>::infinity();
    }
  };

  std::deque<std::vector<double>> s_hist, y_hist;
  std::deque<double> rho_hist;
  std::vector<double> x(x_row.begin(), x_row.end());
  std::vector<double> grad;
  double fx = eval(x, &grad);
  if (!std::isfinite(fx)) return;

  for (std::size_t iter = 0; iter < cfg.steps; ++iter) {
    // two-loop recursion
    std::vector<double> q = grad;
    std::vector<double> alphas(s_hist.size());
    for (std::size_t h = s_hist.size(); h-- > 0;) {
      double a = 0.0;
      for (std::size_t k = 0; k < d; ++k) a += s_hist[h][k] * q[k];
      a *= rho_hist[h];
      alphas[h] = a;
      for (std::size_t k = 0; k < d; ++k) q[k] -= a * y_hist[h][k];
    }
    double gamma = 1.0;
    if (!s_hist.empty()) {
      double sy = 0.0, yy = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        sy += s_hist.back()[k] * y_hist.back()[k];
        yy += y_hist.back()[k] * y_hist.back()[k];
      }
      if (yy > 0.0) gamma = sy / yy;
    }
    for (double& qk : q) qk *= gamma;
    for (std::size_t h = 0; h < s_hist.size(); ++h) {
      double b = 0.0;
      for (std::size_t k = 0; k < d; ++k) b += y_hist[h][k] * q[k];
      b *= rho_hist[h];
      for (std::size_t k = 0; k < d; ++k) q[k] += s_hist[h][k] * (alphas[h] - b);
    }
    // descent direction is -q; Armijo backtracking
    double g_dot_p = 0.0;
    for (std::size_t k = 0; k < d; ++k) g_dot_p -= grad[k] * q[k];
    if (g_dot_p >= 0.0) {  // not a descent direction; fall back to gradient
      q = grad;
      g_dot_p = 0.0;
      for (std::size_t k = 0; k < d; ++k) g_dot_p -= grad[k] * grad[k];
    }
    double step = 1.0;
    if (s_hist.empty()) {
      // tame the raw-gradient first move
      double g_l1 = 0.0;
      for (double gk : grad) g_l1 += std::fabs(gk);
      step = std::min(1.0, 1.0 / std::max(g_l1, 1e-12));
    }
    std::vector<double> x_next(d);
    double f_next = fx;
    bool accepted = false;
    for (int ls = 0; ls < 20; ++ls) {
      for (std::size_t k = 0; k < d; ++k) x_next[k] = x[k] - step * q[k];
      f_next = eval(x_next, nullptr);
      if (std::isfinite(f_next) && f_next <= fx + 1e-4 * step * g_dot_p) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;

    std::vector<double> grad_next;
    eval(x_next, &grad_next);
    std::vector<double> s(d), yv(d);
    double sy = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      s[k] = x_next[k] - x[k];
      yv[k] = grad_next[k] - grad[k];
      sy += s[k] * yv[k];
    }
    if (sy > 1e-12) {
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(yv));
      rho_hist.push_back(1.0 / sy);
      if (s_hist.size() > cfg.history) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    x = std::move(x_next);
    grad = std::move(grad_next);
    fx = f_next;
  }
  std::copy(x.begin(), x.end(), x_row.begin());
}

}  // namespace

DFlowResult dflow_map(const VelocityModel& model, const MeasurementModel& measurement,
                      const DFlowConfig& cfg, std::size_t n_restarts) {
  measurement.validate();
  if (n_restarts == 0) throw std::invalid_argument("dflow_map: n_restarts must be >= 1");
  if (cfg.optim_steps == 0) throw std::invalid_argument("dflow_map: optim_steps must be >= 1");

  const std::size_t d = model.architecture().input_dim;
  Rng rng = make_rng(cfg.seed, 0xdf101ULL);
  std::vector<double> init(n_restarts * d);
  fill_standard_normal(init, rng);
  ad::Tensor x(n_restarts, d, std::move(init));

  if (cfg.optimizer == DFlowConfig::Optimizer::kLbfgs) {
    const LbfgsProblem problem{0.0, cfg.alpha, cfg.beta, cfg.integrator, cfg.optim_steps,
                               cfg.lbfgs_history};
    auto buf = x.mutable_values();
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t r = 0; r < n_restarts; ++r) {
      for (int attempt = 0;; ++attempt) {
        const auto row = buf.subspan(r * d, d);
        lbfgs_optimize(model, measurement, problem, row);
        bool finite = true;
        for (double v : row) finite = finite && std::isfinite(v);
        double energy = std::numeric_limits<double>::infinity();
        if (finite) {
          energy = source_energy(model, measurement, ad::Tensor(1, d, {row.begin(), row.end()}),
                                 0.0, cfg.alpha, cfg.beta, cfg.integrator)
                       .scalar();
        }
        if (std::isfinite(energy)) break;
        if (attempt >= 1) {
          throw std::runtime_error("dflow_map: restart " + std::to_string(r) +
                                   " diverged twice (non-finite energy)");
        }
        for (std::size_t c = 0; c < d; ++c) row[c] = normal(rng);
      }
    }
  } else {
    RowAdam adam(cfg.learning_rate, n_restarts * d);
    std::vector<char> restarted(n_restarts, 0);
    for (std::size_t iter = 0; iter < cfg.optim_steps; ++iter) {
      ad::Tape tape;
      ad::Tensor xw = tape.watch(x.detached());
      ad::Tensor energies =
          source_energy(model, measurement, xw, 0.0, cfg.alpha, cfg.beta, cfg.integrator);
      const ad::GradientMap grads = tape.backward(ad::sum(energies));
      ad::Tensor grad = grads.at(xw).detached();

      auto ev = energies.values();
      auto gbuf = grad.mutable_values();
      auto xbuf = x.mutable_values();
      for (std::size_t r = 0; r < n_restarts; ++r) {
        bool bad = !std::isfinite(ev[r]);
        for (std::size_t c = 0; c < d && !bad; ++c) bad = !std::isfinite(gbuf[r * d + c]);
        if (!bad) continue;
        if (restarted[r]) {
          throw std::runtime_error("dflow_map: restart " + std::to_string(r) +
                                   " diverged twice (non-finite energy)");
        }
        restarted[r] = 1;
        std::normal_distribution<double> normal(0.0, 1.0);
        for (std::size_t c = 0; c < d; ++c) {
          xbuf[r * d + c] = normal(rng);
          gbuf[r * d + c] = 0.0;  // skip the update for the redrawn row
        }
        adam.reset_row(r, d);
      }
      adam.step(xbuf, grad.values());
    }
  }

  DFlowResult result;
  result.energies = per_row_energies(model, measurement, x, 0.0, cfg);
  result.sources = SampleBatch::from_tensor(x, "dflow sources");
  IntegratorConfig fwd = cfg.integrator;
  fwd.direction = IntegratorConfig::Direction::kForward;
  result.pushforward = SampleBatch::from_tensor(integrate(model, x.detached(), fwd), "dflow");
  return result;
}

// ---- D-Flow SGLD -----------------------------------------------------------

std::uint64_t SgldConfig::chain_seed(std::size_t chain_index) const {
  if (!chain_seeds.empty()) {
    if (chain_index >= chain_seeds.size()) {
      throw std::invalid_argument("sgld: chain_seeds has fewer entries than n_parallel");
    }
    return chain_seeds[chain_index];
  }
  return mix_seed(seed, 0x5347ULL + chain_index);
}

void SgldConfig::validate() const {
  if (n_parallel == 0) throw std::invalid_argument("sgld: n_parallel must be >= 1");
  if (n_steps == 0) throw std::invalid_argument("sgld: n_steps must be >= 1");
  if (burn_in >= n_steps) throw std::invalid_argument("sgld: need 0 <= burn_in < n_steps");
  if (!(eta > 0.0)) throw std::invalid_argument("sgld: eta must be positive");
  if (noise_scale < 0.0) throw std::invalid_argument("sgld: noise scale must be nonnegative");
  if (!(damping > 0.0)) throw std::invalid_argument("sgld: damping must be positive");
  if (!(preconditioner_decay > 0.0 && preconditioner_decay < 1.0)) {
    throw std::invalid_argument("sgld: preconditioner decay must be in (0,1)");
  }
  if (prior_weight < 0.0) throw std::invalid_argument("sgld: prior weight must be nonnegative");
  if (thinning == 0) throw std::invalid_argument("sgld: thinning stride must be >= 1");
}

ChainState make_chain(const VelocityModel& model, const MeasurementModel& measurement,
                      const SgldConfig& cfg, std::size_t chain_index) {
  const std::size_t d = model.architecture().input_dim;
  ChainState chain{ad::Tensor::zeros(1, d), ad::Tensor::zeros(1, d),
                   make_rng(cfg.chain_seed(chain_index)), {}, true};
  {
    auto x = chain.x0.mutable_values();
    fill_standard_normal(x, chain.rng);
  }

  if (cfg.warm_start == SgldConfig::WarmStart::kMapEnsemble && cfg.warm_start_steps > 0) {
    const LbfgsProblem problem{cfg.prior_weight, 0.0, 0.0, cfg.integrator,
                               cfg.warm_start_steps, 10};
    lbfgs_optimize(model, measurement, problem, chain.x0.mutable_values());
  }
  return chain;
}

void sgld_chain_step(const VelocityModel& model, const MeasurementModel& measurement,
                     const SgldConfig& cfg, ChainState& chain, std::size_t step_index) {
  if (!chain.alive) return;
  const std::size_t d = chain.x0.cols();

  ad::Tape tape;
  ad::Tensor xw = tape.watch(chain.x0.detached());
  IntegratorConfig fwd = cfg.integrator;
  fwd.direction = IntegratorConfig::Direction::kForward;
  ad::Tensor x1 = integrate(model, xw, fwd);
  ad::Tensor y = ad::Tensor::from_row(measurement.observed);
  ad::Tensor misfit = ad::l2_norm_sq(ad::sub(y, measure(measurement, x1)));
  const ad::GradientMap grads = tape.backward(misfit);
  const auto misfit_grad = grads.at(xw).values();

  const double eta = cfg.eta_schedule ? cfg.eta_schedule(step_index) : cfg.eta;
  double s = cfg.noise_scale;
  if (cfg.noise_schedule) {
    s = cfg.noise_schedule(step_index);
  } else if (cfg.noise_anneal_start > 0.0 && cfg.noise_scale > 0.0 &&
             cfg.noise_anneal_start != cfg.noise_scale && cfg.n_steps > 1) {
    const double t = static_cast<double>(step_index) / static_cast<double>(cfg.n_steps - 1);
    s = cfg.noise_anneal_start * std::pow(cfg.noise_scale / cfg.noise_anneal_start, t);
  }
  const double delta = cfg.damping_schedule ? cfg.damping_schedule(step_index) : cfg.damping;

  auto x = chain.x0.mutable_values();
  auto second = chain.second_moment.mutable_values();
  std::normal_distribution<double> normal(0.0, 1.0);
  const double omega = cfg.preconditioner_decay;

  for (std::size_t c = 0; c < d; ++c) {
    const double g1 = misfit_grad[c];
    const double g = g1 + 2.0 * cfg.prior_weight * x[c];
    double p = 1.0;
    if (cfg.use_preconditioner) {
      second[c] = omega * second[c] + (1.0 - omega) * g1 * g1;
      p = 1.0 / (std::sqrt(second[c]) + delta);
    }
    const double xi = normal(chain.rng);
    x[c] += -eta * p * g + std::sqrt(2.0 * eta * s * p) * xi;
  }

  if (!chain.x0.all_finite()) {
    chain.alive = false;
    return;
  }
  if (step_index >= cfg.burn_in && (step_index - cfg.burn_in) % cfg.thinning == 0) {
    chain.collected.insert(chain.collected.end(), x.begin(), x.end());
  }
}

SampleBatch warm_start_ensemble(const VelocityModel& model, const MeasurementModel& measurement,
                                const SgldConfig& cfg) {
  cfg.validate();
  const std::size_t d = model.architecture().input_dim;
  SampleBatch out(cfg.n_parallel, d, "sgld chain initial points");
  for (std::size_t j = 0; j < cfg.n_parallel; ++j) {
    ChainState chain = make_chain(model, measurement, cfg, j);
    const auto v = chain.x0.values();
    for (std::size_t c = 0; c < d; ++c) out.at(j, c) = v[c];
  }
  return out;
}

SgldResult dflow_sgld(const VelocityModel& model, const MeasurementModel& measurement,
                      const SgldConfig& cfg) {
  cfg.validate();
  measurement.validate();
  const std::size_t d = model.architecture().input_dim;
  const std::size_t n_chains = cfg.n_parallel;

  std::vector<ChainState> chains;
  chains.reserve(n_chains);
  for (std::size_t j = 0; j < n_chains; ++j) {
    chains.push_back(make_chain(model, measurement, cfg, j));
  }

  const std::size_t workers = std::max<std::size_t>(1, std::min(cfg.workers, n_chains));
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto run_chain_range = [&](std::size_t worker) {
    try {
      for (std::size_t j = worker; j < n_chains; j += workers) {
        for (std::size_t i = 0; i < cfg.n_steps && chains[j].alive; ++i) {
          sgld_chain_step(model, measurement, cfg, chains[j], i);
        }
      }
    } catch (...) {
      std::scoped_lock lock(error_mutex);
      if (!first_error) first_error = std::current_exception();
    }
  };

  if (workers == 1) {
    run_chain_range(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(run_chain_range, w);
    for (auto& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  std::size_t alive = 0;
  std::size_t total_rows = 0;
  for (std::size_t j = 0; j < n_chains; ++j) {
    if (!chains[j].alive) {
      std::cerr << "warning: dflow_sgld: chain " << j << " went non-finite and was dropped\n";
      continue;
    }
    ++alive;
    total_rows += chains[j].collected.size() / d;
  }
  if (alive == 0) throw std::runtime_error("dflow_sgld: all chains diverged");

  SampleBatch sources(total_rows, d, "dflow-sgld sources");
  std::size_t row = 0;
  for (const auto& chain : chains) {
    if (!chain.alive) continue;
    std::copy(chain.collected.begin(), chain.collected.end(), sources.data.begin() + row * d);
    row += chain.collected.size() / d;
  }

  IntegratorConfig fwd = cfg.integrator;
  fwd.direction = IntegratorConfig::Direction::kForward;
  SgldResult result;
  result.sources = std::move(sources);
  result.pushforward =
      SampleBatch::from_tensor(integrate(model, result.sources.tensor(), fwd), "dflow-sgld");
  result.chains_completed = alive;
  return result;
}

SampleBatch invert_to_source(const VelocityModel& model, const SampleBatch& x1,
                             const IntegratorConfig& integrator) {
  IntegratorConfig rev = integrator;
  rev.direction = IntegratorConfig::Direction::kReverse;
  return SampleBatch::from_tensor(integrate(model, x1.tensor(), rev), "inverted sources");
}

}  // namespace flowcond
