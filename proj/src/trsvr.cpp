#include "trsvr/trsvr.hpp"

#include <cmath>
#include <stdexcept>

namespace trsvr {

void TrsvrConfig::validate(Index n) const {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw std::invalid_argument("alpha must be positive");
  if (batch_size < 1 || batch_size > n) throw std::invalid_argument("batch size must lie in [1, N]");
  if (inner_len < 1) throw std::invalid_argument("inner loop length must be >= 1");
  if (cg_max_iters < 1) throw std::invalid_argument("cg_max_iters must be >= 1");
  if (epochs < 0) throw std::invalid_argument("epochs must be nonnegative");
  if (record_every < 0) throw std::invalid_argument("record_every must be nonnegative");
  if (!(fd.eps0 > 0.0)) throw std::invalid_argument("finite-difference step must be positive");
}

Index resolved_record_every(Index configured, Index steps_per_epoch) {
  if (configured > 0) return configured;
  return std::max<Index>(1, (steps_per_epoch + 9) / 10);
}

namespace {

// The Cauchy bound uses the operator norm; estimated ones get 10% slack.
double lemma_norm(const HessianOperator<double>& h) {
  if (auto known = h.known_norm()) return *known;
  return 1.1 * estimate_operator_norm(h);
}

}  // namespace

Trajectory trsvr_run(const FiniteSum& f, const TrsvrConfig& config, const Vector& x0,
                     Recorder& recorder, const TrsvrHooks& hooks) {
  const Index n = f.size();
  config.validate(n);
  if (x0.size() != f.dim()) throw std::invalid_argument("initial point dimension mismatch");
  if (!x0.allFinite()) throw std::invalid_argument("initial point must be finite");

  Rng rng(config.seed);
  const Index inner = config.inner_len;
  const Index record_every = resolved_record_every(config.record_every, inner);

  Trajectory out;
  Vector x = x0;
  recorder.record(0.0, out.counters, x);

  // Diverged runs still end with a record so the harness can tabulate them.
  auto abort = [&](std::string why, double epoch) {
    out.diverged = true;
    out.diagnostic = std::move(why);
    if (!recorder.diverged()) recorder.record(epoch, out.counters, x);
  };

  for (Index k = 0; k < config.epochs && !out.diverged; ++k) {
    const EvalCounter before = out.counters;
    OuterLoopStats stats;
    const SvrgReference ref = SvrgReference::at(f, x, out.counters);

    for (Index s = 0; s < inner; ++s) {
      const MiniBatch batch = draw_batch(n, config.batch_size, rng);
      const Vector g_bar = svrg_gradient(f, batch, x, ref, out.counters);
      const double radius = trust_radius(config.alpha, g_bar);
      out.radii.push_back(radius);

      TrStep<double> step;
      if (radius == 0.0) {
        if (!out.stationary_event) out.stationary_event = std::make_pair(k, s);
        step.step = Vector::Zero(f.dim());
        step.model_trace = {0.0};
      } else {
        // The batch gradient at x anchors the finite differences; it is part
        // of the 2b evaluations already charged to the SVRG estimate.
        const Vector batch_grad =
            config.hessian == HessianMode::EstH ? batch_gradient(f, batch.indices, x) : Vector();
        auto make_operator = [&](EvalCounter* counter) {
          switch (config.hessian) {
            case HessianMode::Identity: return HessianOperator<double>::identity(f.dim());
            case HessianMode::EstH:
              return make_esth_operator(f, batch, x, batch_grad, config.fd, counter);
            case HessianMode::Exact: return make_exact_operator(f, batch, x, counter);
          }
          throw std::logic_error("unhandled Hessian mode");
        };
        const HessianOperator<double> h = make_operator(&out.counters);
        try {
          step = steihaug_cg(TrSubproblem<double>::make(g_bar, h, radius, config.cg_max_iters));
        } catch (const SolverError& e) {
          abort(std::string("subproblem solver failed: ") + e.what(), static_cast<double>(k));
          break;
        }
        stats.cg_iters += static_cast<std::uint64_t>(step.cg_iters);

        if (config.verify_cauchy) {
          const HessianOperator<double> probe = make_operator(nullptr);
          const double bound = cauchy_decrease_bound(g_bar.norm(), radius, lemma_norm(probe));
          ++out.cauchy_checks;
          if (step.model_decrease > bound + 1e-10) ++out.cauchy_violations;
        }
      }

      if (hooks.on_inner_step) {
        hooks.on_inner_step(InnerStepInfo{k, s, x, g_bar, ref, step, radius, out.counters});
      }
      x += step.step;
      ++stats.inner_steps;
      if (!x.allFinite()) {
        abort("non-finite iterate", static_cast<double>(k));
        break;
      }
      if ((s + 1) % record_every == 0 && s + 1 < inner) {
        const double epoch = static_cast<double>(k) + static_cast<double>(s + 1) / static_cast<double>(inner);
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
    // x_{k+1,0} = x_{k,S}: the next anchor is the current iterate as is.
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

}  // namespace trsvr
