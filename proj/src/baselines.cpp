#include "trsvr/baselines.hpp"

#include <cmath>
#include <stdexcept>

#include "trsvr/trsvr.hpp"

namespace trsvr {

std::string to_string(BaselineMethod method) {
  switch (method) {
    case BaselineMethod::SGD: return "sgd";
    case BaselineMethod::Adam: return "adam";
    case BaselineMethod::SVRG: return "svrg";
    case BaselineMethod::SAGA: return "saga";
    case BaselineMethod::SARAH: return "sarah";
    case BaselineMethod::ClassicTR: return "classic_tr";
    case BaselineMethod::TRish: return "trish";
  }
  return "unknown";
}

BaselineMethod baseline_method_from_string(const std::string& name) {
  for (auto m : {BaselineMethod::SGD, BaselineMethod::Adam, BaselineMethod::SVRG,
                 BaselineMethod::SAGA, BaselineMethod::SARAH, BaselineMethod::ClassicTR,
                 BaselineMethod::TRish}) {
    if (to_string(m) == name) return m;
  }
  if (name == "classic-tr" || name == "tr") return BaselineMethod::ClassicTR;
  throw std::invalid_argument("unknown method: " + name);
}

void BaselineConfig::validate(Index n) const {
  if (epochs < 0) throw std::invalid_argument("epochs must be nonnegative");
  if (record_every < 0) throw std::invalid_argument("record_every must be nonnegative");
  if (!(fd.eps0 > 0.0)) throw std::invalid_argument("finite-difference step must be positive");
  if (cg_max_iters < 1) throw std::invalid_argument("cg_max_iters must be >= 1");
  const bool batched = method == BaselineMethod::SGD || method == BaselineMethod::Adam ||
                       method == BaselineMethod::SVRG || method == BaselineMethod::SARAH ||
                       method == BaselineMethod::TRish;
  if (batched && (batch_size < 1 || batch_size > n)) {
    throw std::invalid_argument("batch size must lie in [1, N]");
  }
  switch (method) {
    case BaselineMethod::SGD:
      if (!(lr > 0.0)) throw std::invalid_argument("learning rate must be positive");
      if (!(momentum >= 0.0 && momentum < 1.0)) throw std::invalid_argument("momentum must lie in [0, 1)");
      break;
    case BaselineMethod::Adam:
      if (!(lr > 0.0)) throw std::invalid_argument("learning rate must be positive");
      if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
        throw std::invalid_argument("Adam betas must lie in [0, 1)");
      }
      if (!(eps_adam > 0.0)) throw std::invalid_argument("Adam epsilon must be positive");
      break;
    case BaselineMethod::SVRG:
    case BaselineMethod::SARAH:
      if (inner_len < 1) throw std::invalid_argument("inner loop length must be >= 1");
      [[fallthrough]];
    case BaselineMethod::SAGA:
      if (!(lr > 0.0)) throw std::invalid_argument("learning rate must be positive");
      break;
    case BaselineMethod::ClassicTR:
      if (!(delta0 > 0.0)) throw std::invalid_argument("initial radius must be positive");
      if (delta_max > 0.0 && delta_max < delta0) {
        throw std::invalid_argument("maximum radius below the initial radius");
      }
      if (!(eta_accept >= 0.0 && eta_accept < 0.25)) {
        throw std::invalid_argument("acceptance threshold must lie in [0, 1/4)");
      }
      break;
    case BaselineMethod::TRish:
      if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
      if (!(gamma2 > 0.0) || !(gamma1 > gamma2)) {
        throw std::invalid_argument("TRish needs gamma1 > gamma2 > 0");
      }
      break;
  }
}

namespace {

Index steps_per_epoch(Index n, Index b) { return (n + b - 1) / b; }

// Shared driver for the single-loop methods. `step` advances x by one
// iteration and may throw SolverError.
template <typename Step>
Trajectory single_loop(const FiniteSum& f, const BaselineConfig& config, const Vector& x0,
                       Recorder& recorder, Index per_epoch, Step&& step) {
  if (x0.size() != f.dim()) throw std::invalid_argument("initial point dimension mismatch");
  if (!x0.allFinite()) throw std::invalid_argument("initial point must be finite");
  const Index n = f.size();
  const Index record_every = resolved_record_every(config.record_every, per_epoch);

  Trajectory out;
  Vector x = x0;
  recorder.record(0.0, out.counters, x);

  auto abort = [&](std::string why, double epoch) {
    out.diverged = true;
    out.diagnostic = std::move(why);
    if (!recorder.diverged()) recorder.record(epoch, out.counters, x);
  };

  for (Index k = 0; k < config.epochs && !out.diverged; ++k) {
    const EvalCounter before = out.counters;
    OuterLoopStats stats;
    for (Index t = 0; t < per_epoch; ++t) {
      try {
        stats.cg_iters += static_cast<std::uint64_t>(step(x, out));
      } catch (const SolverError& e) {
        abort(std::string("subproblem solver failed: ") + e.what(), static_cast<double>(k));
        break;
      }
      ++stats.inner_steps;
      if (!x.allFinite()) {
        abort("non-finite iterate", static_cast<double>(k));
        break;
      }
      if ((t + 1) % record_every == 0 && t + 1 < per_epoch) {
        const double epoch = static_cast<double>(k) + static_cast<double>(t + 1) / static_cast<double>(per_epoch);
        if (!recorder.record(epoch, out.counters, x)) {
          abort("objective diverged", epoch);
          break;
        }
      }
    }
    stats.component_grad_evals = out.counters.component_grad_evals - before.component_grad_evals;
    stats.hvp_probe_evals = out.counters.hvp_probe_evals - before.hvp_probe_evals;
    out.outer_loops.push_back(stats);
    if (out.diverged) break;
    if (!recorder.record(static_cast<double>(k + 1), out.counters, x)) {
      abort("objective diverged", static_cast<double>(k + 1));
      break;
    }
    if (out.counters.effective_passes(n) >= config.max_passes) break;
  }

  out.final_iterate = x;
  out.records = recorder.records();
  return out;
}

HessianOperator<double> make_operator(const FiniteSum& f, HessianMode mode, const MiniBatch& batch,
                                      const Vector& x, const Vector& base, const FdStepRule& rule,
                                      EvalCounter* counter) {
  switch (mode) {
    case HessianMode::Identity: return HessianOperator<double>::identity(f.dim());
    case HessianMode::EstH: return make_esth_operator(f, batch, x, base, rule, counter);
    case HessianMode::Exact: return make_exact_operator(f, batch, x, counter);
  }
  throw std::logic_error("unhandled Hessian mode");
}

}  // namespace

Trajectory sgd_momentum_run(const FiniteSum& f, const BaselineConfig& config, const Vector& x0,
                            Recorder& recorder) {
  config.validate(f.size());
  Rng rng(config.seed);
  Vector v = Vector::Zero(f.dim());
  return single_loop(f, config, x0, recorder, steps_per_epoch(f.size(), config.batch_size),
                     [&](Vector& x, Trajectory& out) {
                       const MiniBatch batch = draw_batch(f.size(), config.batch_size, rng);
                       v = config.momentum * v + minibatch_gradient(f, batch, x, out.counters);
                       x -= config.lr * v;
                       return 0;
                     });
}

Trajectory adam_run(const FiniteSum& f, const BaselineConfig& config, const Vector& x0,
                    Recorder& recorder) {
  config.validate(f.size());
  Rng rng(config.seed);
  Vector m = Vector::Zero(f.dim());
  Vector v = Vector::Zero(f.dim());
  double b1t = 1.0;
  double b2t = 1.0;
  return single_loop(f, config, x0, recorder, steps_per_epoch(f.size(), config.batch_size),
                     [&](Vector& x, Trajectory& out) {
                       const MiniBatch batch = draw_batch(f.size(), config.batch_size, rng);
                       const Vector g = minibatch_gradient(f, batch, x, out.counters);
                       m = config.beta1 * m + (1.0 - config.beta1) * g;
                       v = config.beta2 * v + (1.0 - config.beta2) * g.cwiseAbs2();
                       b1t *= config.beta1;
                       b2t *= config.beta2;
                       const Vector m_hat = m / (1.0 - b1t);
                       const Vector v_hat = v / (1.0 - b2t);
                       x.array() -= config.lr * m_hat.array() / (v_hat.array().sqrt() + config.eps_adam);
                       return 0;
                     });
}

double trish_radius(double alpha, double gamma1, double gamma2, double g_norm) {
  if (g_norm < 1.0 / gamma1) return alpha * gamma1 * g_norm;
  if (g_norm > 1.0 / gamma2) return alpha * gamma2 * g_norm;
  return alpha;
}

Trajectory trish_run(const FiniteSum& f, const BaselineConfig& config, const Vector& x0,
                     Recorder& recorder) {
  config.validate(f.size());
  Rng rng(config.seed);
  std::optional<std::pair<Index, Index>> stationary;
  Index iter = 0;
  const Index per_epoch = steps_per_epoch(f.size(), config.batch_size);
  std::vector<double> radii;
  Trajectory out = single_loop(
      f, config, x0, recorder, per_epoch, [&](Vector& x, Trajectory& run) -> int {
        const MiniBatch batch = draw_batch(f.size(), config.batch_size, rng);
        const Vector g = minibatch_gradient(f, batch, x, run.counters);
        const double g_norm = g.norm();
        const double radius = trish_radius(config.alpha, config.gamma1, config.gamma2, g_norm);
        radii.push_back(radius);
        const Index at = iter++;
        if (g_norm == 0.0) {
          if (!stationary) stationary = std::make_pair(at / per_epoch, at % per_epoch);
          return 0;
        }
        const HessianOperator<double> h =
            make_operator(f, config.hessian, batch, x, g, config.fd, &run.counters);
        const TrStep<double> step =
            steihaug_cg(TrSubproblem<double>::make(g, h, radius, config.cg_max_iters));
        x += step.step;
        return step.cg_iters;
      });
  out.radii = std::move(radii);
  out.stationary_event = stationary;
  return out;
}

Trajectory classic_tr_run(const FiniteSum& f, const BaselineConfig& config, const Vector& x0,
                          Recorder& recorder) {
  const Index n = f.size();
  config.validate(n);
  if (x0.size() != f.dim()) throw std::invalid_argument("initial point dimension mismatch");
  if (!x0.allFinite()) throw std::invalid_argument("initial point must be finite");
  const double delta_max = config.delta_max > 0.0 ? config.delta_max : 10.0 * config.delta0;
  const MiniBatch full = MiniBatch::full(n);

  Trajectory out;
  Vector x = x0;
  double fx = full_value(f, x);
  double delta = config.delta0;
  recorder.record(0.0, out.counters, x);

  auto abort = [&](std::string why, double epoch) {
    out.diverged = true;
    out.diagnostic = std::move(why);
    if (!recorder.diverged()) recorder.record(epoch, out.counters, x);
  };

  for (Index k = 0; k < config.epochs; ++k) {
    const EvalCounter before = out.counters;
    OuterLoopStats stats;
    const Vector g = full_gradient(f, x);
    out.counters.component_grad_evals += static_cast<std::uint64_t>(n);
    out.counters.full_grad_evals += 1;
    const double g_norm_sq = g.squaredNorm();
    if (g_norm_sq <= config.grad_norm_sq_tol) break;
    out.radii.push_back(delta);

    // The full-batch EstH operator reuses the gradient just computed.
    const MiniBatch& scope = config.hessian == HessianMode::Exact ? MiniBatch{} : full;
    const HessianOperator<double> h =
        make_operator(f, config.hessian, scope, x, g, config.fd, &out.counters);
    TrStep<double> step;
    try {
      step = steihaug_cg(TrSubproblem<double>::make(g, h, delta, config.cg_max_iters));
    } catch (const SolverError& e) {
      abort(std::string("subproblem solver failed: ") + e.what(), static_cast<double>(k));
      break;
    }
    stats.cg_iters = static_cast<std::uint64_t>(step.cg_iters);
    if (!(step.model_decrease < 0.0)) {
      abort("subproblem solver returned no model decrease", static_cast<double>(k));
      break;
    }

    const Vector trial = x + step.step;
    const double f_trial = trial.allFinite() ? full_value(f, trial) : std::numeric_limits<double>::quiet_NaN();
    const double actual = fx - f_trial;
    const double predicted = -step.model_decrease;
    // Both decreases at roundoff level: the model is as good as f can resolve.
    const double noise = 64.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(fx));
    const double rho = (predicted <= noise && std::abs(actual) <= noise) ? 1.0 : actual / predicted;

    if (rho > config.eta_accept && std::isfinite(f_trial)) {
      x = trial;
      fx = f_trial;
    }
    if (!(rho >= 0.25)) {
      delta *= 0.25;
    } else if (rho > 0.75 && step.hit_boundary) {
      delta = std::min(2.0 * delta, delta_max);
    }
    ++stats.inner_steps;
    stats.component_grad_evals = out.counters.component_grad_evals - before.component_grad_evals;
    stats.hvp_probe_evals = out.counters.hvp_probe_evals - before.hvp_probe_evals;
    out.outer_loops.push_back(stats);

    if (!recorder.record(static_cast<double>(k + 1), out.counters, x)) {
      abort("objective diverged", static_cast<double>(k + 1));
      break;
    }
    if (out.counters.effective_passes(n) >= config.max_passes) break;
  }

  out.final_iterate = x;
  out.records = recorder.records();
  return out;
}

Trajectory vr_descent_run(const FiniteSum& f, const BaselineConfig& config, const Vector& x0,
                          Recorder& recorder) {
  const Index n = f.size();
  config.validate(n);
  Rng rng(config.seed);

  if (config.method == BaselineMethod::SAGA) {
    std::optional<SagaTable> table;
    std::uniform_int_distribution<Index> pick(0, n - 1);
    return single_loop(f, config, x0, recorder, n, [&](Vector& x, Trajectory& out) {
      if (!table) table = SagaTable::at_anchor(f, x, out.counters);
      const Index i = pick(rng);
      x -= config.lr * saga_step_gradient(f, i, x, *table, out.counters);
      return 0;
    });
  }

  if (config.method != BaselineMethod::SVRG && config.method != BaselineMethod::SARAH) {
    throw std::invalid_argument("vr_descent_run handles SVRG, SAGA and SARAH");
  }
  // Nested loops: one epoch is one outer loop of inner_len steps.
  std::optional<SvrgReference> ref;
  std::optional<SarahState> sarah;
  Index s = 0;
  return single_loop(f, config, x0, recorder, config.inner_len, [&](Vector& x, Trajectory& out) {
    if (s == 0) {
      if (config.method == BaselineMethod::SVRG) {
        ref = SvrgReference::at(f, x, out.counters);
      } else {
        sarah = SarahState::at_anchor(f, x, out.counters);
      }
    }
    if (config.method == BaselineMethod::SVRG) {
      const MiniBatch batch = draw_batch(n, config.batch_size, rng);
      x -= config.lr * svrg_gradient(f, batch, x, *ref, out.counters);
    } else if (s == 0) {
      x -= config.lr * sarah->v;
    } else {
      const MiniBatch batch = draw_batch(n, config.batch_size, rng);
      x -= config.lr * sarah_step(f, batch, x, *sarah, out.counters);
    }
    s = (s + 1) % config.inner_len;
    return 0;
  });
}

Trajectory run_baseline(const FiniteSum& f, const BaselineConfig& config, const Vector& x0,
                        Recorder& recorder) {
  switch (config.method) {
    case BaselineMethod::SGD: return sgd_momentum_run(f, config, x0, recorder);
    case BaselineMethod::Adam: return adam_run(f, config, x0, recorder);
    case BaselineMethod::ClassicTR: return classic_tr_run(f, config, x0, recorder);
    case BaselineMethod::TRish: return trish_run(f, config, x0, recorder);
    case BaselineMethod::SVRG:
    case BaselineMethod::SAGA:
    case BaselineMethod::SARAH: return vr_descent_run(f, config, x0, recorder);
  }
  throw std::logic_error("unhandled baseline method");
}

}  // namespace trsvr
