#pragma once

#include <string>

#include "trsvr/estimator.hpp"
#include "trsvr/objective.hpp"
#include "trsvr/tr_solver.hpp"

namespace trsvr {

/// How the model curvature is built at each iterate.
enum class HessianMode { Identity, EstH, Exact };

std::string to_string(HessianMode mode);
HessianMode hessian_mode_from_string(const std::string& name);

/// Finite-difference step eps = eps0 * (1 + |w|).
struct FdStepRule {
  double eps0 = 1e-6;

  double step(const Vector& w) const { return eps0 * (1.0 + w.norm()); }
  bool operator==(const FdStepRule&) const = default;
};

/// |v| (g_B(w + eps v/|v|) - g_B(w)) / eps on one shared batch B.
/// `base_gradient` is g_B(w) when the caller already has it; otherwise it is
/// computed here and counted as b component evaluations. The probe at the
/// shifted point always counts b in hvp_probe_evals.
Vector finite_diff_hvp(const FiniteSum& f, const MiniBatch& batch, const Vector& w, const Vector& v,
                       const FdStepRule& rule, EvalCounter& counter,
                       const Vector* base_gradient = nullptr);

/// EstH operator over `batch` at `w`. `counter` may be null for uncounted
/// diagnostics. Zero input maps to zero without a probe.
HessianOperator<double> make_esth_operator(const FiniteSum& f, const MiniBatch& batch,
                                           const Vector& w, const Vector& base_gradient,
                                           const FdStepRule& rule, EvalCounter* counter);

/// Exact Hessian of the batch-average (or of the full objective when `batch`
/// is empty). Each product counts one evaluation per sample when counted.
HessianOperator<double> make_exact_operator(const FiniteSum& f, const MiniBatch& batch,
                                            const Vector& w, EvalCounter* counter);

}  // namespace trsvr
