#pragma once

#include <cstdint>
#include <vector>

#include "trsvr/objective.hpp"
#include "trsvr/types.hpp"

namespace trsvr {

/// Work accounting for one run. Effective passes count gradient work only;
/// measurement done by the harness never touches a counter.
struct EvalCounter {
  std::uint64_t component_grad_evals = 0;
  std::uint64_t full_grad_evals = 0;
  std::uint64_t hvp_probe_evals = 0;

  double effective_passes(Index n) const {
    return static_cast<double>(component_grad_evals + hvp_probe_evals) / static_cast<double>(n);
  }
  bool operator==(const EvalCounter&) const = default;
};

struct MiniBatch {
  std::vector<Index> indices;

  Index size() const { return static_cast<Index>(indices.size()); }
  static MiniBatch full(Index n);
};

/// b indices drawn i.i.d. uniformly from [0, n), with replacement.
MiniBatch sample_minibatch(Index n, Index b, Rng& rng);

/// Same as sample_minibatch except b == n yields the full batch 0..n-1, which
/// is the zero-variance limit the optimizers rely on for full-batch runs.
MiniBatch draw_batch(Index n, Index b, Rng& rng);

/// (1/b) sum_{i in batch} grad f_i(w); counts b evaluations.
Vector minibatch_gradient(const FiniteSum& f, const MiniBatch& batch, const Vector& w,
                          EvalCounter& counter);

/// Anchor of one SVRG outer loop.
struct SvrgReference {
  Vector x_ref;
  Vector g_ref;

  /// Computes g_ref = full_gradient(x); counts N evaluations and one full pass.
  static SvrgReference at(const FiniteSum& f, const Vector& x, EvalCounter& counter);
};

/// (1/b) sum_{i in batch} (grad f_i(w) - grad f_i(x_ref)) + g_ref, in exactly
/// that grouping; counts 2b evaluations.
Vector svrg_gradient(const FiniteSum& f, const MiniBatch& batch, const Vector& w,
                     const SvrgReference& ref, EvalCounter& counter);

/// SAGA memory for generalized-linear objectives: one scalar residual per
/// sample plus the running mean of the stored sample gradients.
class SagaTable {
 public:
  /// Fills the table at `anchor`; counts N evaluations.
  static SagaTable at_anchor(const FiniteSum& f, const Vector& anchor, EvalCounter& counter);

  const std::vector<double>& residuals() const { return residuals_; }
  const Vector& running_avg() const { return running_avg_; }

  /// Recomputes running_avg from the residuals (no gradient evaluations).
  void refresh(const FiniteSum& f);

 private:
  friend Vector saga_step_gradient(const FiniteSum&, Index, const Vector&, SagaTable&,
                                   EvalCounter&);
  std::vector<double> residuals_;
  Vector running_avg_;
  Index updates_since_refresh_ = 0;
};

/// (r_i(w) - r_i^old) x_i + running_avg + shared gradient at w, then stores
/// r_i(w). Counts one evaluation. The running mean is rebuilt every N updates.
Vector saga_step_gradient(const FiniteSum& f, Index i, const Vector& w, SagaTable& table,
                          EvalCounter& counter);

struct SarahState {
  Vector v;
  Vector x_prev;

  static SarahState at_anchor(const FiniteSum& f, const Vector& anchor, EvalCounter& counter);
};

/// v <- g_B(w) - g_B(x_prev) + v on one shared batch B, x_prev <- w.
/// Counts 2b evaluations and returns the new v.
Vector sarah_step(const FiniteSum& f, const MiniBatch& batch, const Vector& w, SarahState& state,
                  EvalCounter& counter);

}  // namespace trsvr
