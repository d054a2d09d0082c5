#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Eigenvalues>

#include "trsvr/types.hpp"

namespace trsvr {

enum class HessianKind { Identity, EstH, Exact, Dense };

/// Matrix-free symmetric operator v -> H v used as the model curvature.
template <typename Scalar>
class HessianOperator {
 public:
  using VectorType = VectorX<Scalar>;
  using ApplyFn = std::function<VectorType(const VectorType&)>;

  HessianOperator(HessianKind kind, Index dim, ApplyFn apply,
                  std::optional<Scalar> known_norm = std::nullopt)
      : kind_(kind), dim_(dim), apply_(std::move(apply)), known_norm_(known_norm) {}

  static HessianOperator identity(Index dim) {
    return HessianOperator(HessianKind::Identity, dim, [](const VectorType& v) { return v; },
                           Scalar(1));
  }

  /// Dense symmetric matrix; the operator norm is computed exactly.
  static HessianOperator dense(MatrixX<Scalar> m) {
    Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> eig(m, Eigen::EigenvaluesOnly);
    const Scalar norm = eig.eigenvalues().cwiseAbs().maxCoeff();
    auto shared = std::make_shared<const MatrixX<Scalar>>(std::move(m));
    const Index dim = shared->rows();
    return HessianOperator(
        HessianKind::Dense, dim, [shared](const VectorType& v) -> VectorType { return *shared * v; },
        norm);
  }

  VectorType apply(const VectorType& v) const {
    ++applications_;
    return apply_(v);
  }

  HessianKind kind() const { return kind_; }
  Index dim() const { return dim_; }
  /// Exact |H|_2 when the operator knows it.
  std::optional<Scalar> known_norm() const { return known_norm_; }
  Index applications() const { return applications_; }

 private:
  HessianKind kind_;
  Index dim_;
  ApplyFn apply_;
  std::optional<Scalar> known_norm_;
  mutable Index applications_ = 0;
};

enum class CgTermination { ResidualTol, Boundary, NegativeCurvature, MaxIters };

inline const char* to_string(CgTermination t) {
  switch (t) {
    case CgTermination::ResidualTol: return "residual_tol";
    case CgTermination::Boundary: return "boundary";
    case CgTermination::NegativeCurvature: return "negative_curvature";
    case CgTermination::MaxIters: return "max_iters";
  }
  return "unknown";
}

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Delta = alpha |g_bar|
template <typename Scalar>
Scalar trust_radius(Scalar alpha, const VectorX<Scalar>& g_bar) {
  if (!(alpha > Scalar(0))) throw std::invalid_argument("radius-control parameter must be positive");
  return alpha * g_bar.norm();
}

/// CG stopping tolerance min(1e-8, 0.01 |g|).
template <typename Scalar>
Scalar default_cg_tolerance(Scalar g_norm) {
  return std::min(Scalar(1e-8), Scalar(0.01) * g_norm);
}

/// min g^T p + 1/2 p^T H p  subject to |p| <= radius
template <typename Scalar>
struct TrSubproblem {
  VectorX<Scalar> g_bar;
  const HessianOperator<Scalar>* hessian = nullptr;
  Scalar radius = 0;
  int cg_max_iters = 200;
  Scalar cg_tol = 0;

  static TrSubproblem make(VectorX<Scalar> g, const HessianOperator<Scalar>& h, Scalar radius,
                           int cg_max_iters) {
    const Scalar tol = default_cg_tolerance(g.norm());
    return {std::move(g), &h, radius, cg_max_iters, tol};
  }
};

template <typename Scalar>
struct TrStep {
  VectorX<Scalar> step;
  Scalar model_decrease = 0;  // m(step) - m(0) <= 0
  bool hit_boundary = false;
  int cg_iters = 0;
  CgTermination termination = CgTermination::ResidualTol;
  /// Model value at every CG iterate, ending with the returned step.
  std::vector<Scalar> model_trace;
};

template <typename Scalar>
Scalar model_value(const TrSubproblem<Scalar>& sub, const VectorX<Scalar>& p) {
  if (p.size() != sub.g_bar.size()) throw std::invalid_argument("dimension mismatch");
  return sub.g_bar.dot(p) + Scalar(0.5) * p.dot(sub.hessian->apply(p));
}

/// Upper bound on the model change of any step with at least Cauchy decrease.
template <typename Scalar>
Scalar cauchy_decrease_bound(Scalar g_norm, Scalar radius, Scalar h_norm) {
  return -g_norm * radius + Scalar(0.5) * h_norm * radius * radius;
}

/// Minimizer of the model along -g_bar inside the trust region.
template <typename Scalar>
TrStep<Scalar> cauchy_point(const TrSubproblem<Scalar>& sub) {
  const Scalar g_norm = sub.g_bar.norm();
  if (g_norm == Scalar(0)) throw std::invalid_argument("Cauchy point undefined for zero gradient");
  const Scalar gHg = sub.g_bar.dot(sub.hessian->apply(sub.g_bar));
  Scalar tau = 1;
  if (gHg > Scalar(0)) tau = std::min(Scalar(1), g_norm * g_norm * g_norm / (sub.radius * gHg));

  TrStep<Scalar> out;
  out.step = -(tau * sub.radius / g_norm) * sub.g_bar;
  out.hit_boundary = tau == Scalar(1);
  out.termination = out.hit_boundary ? CgTermination::Boundary : CgTermination::ResidualTol;
  out.model_decrease = model_value(sub, out.step);
  out.model_trace = {out.model_decrease};
  return out;
}

namespace detail {

// Positive root of |p + tau d|^2 = radius^2.
template <typename Scalar>
Scalar boundary_tau(const VectorX<Scalar>& p, const VectorX<Scalar>& d, Scalar radius) {
  const Scalar a = d.squaredNorm();
  const Scalar b = Scalar(2) * p.dot(d);
  const Scalar c = std::min(Scalar(0), p.squaredNorm() - radius * radius);
  if (p.squaredNorm() == Scalar(0)) return radius / std::sqrt(a);
  const Scalar root = std::sqrt(b * b - Scalar(4) * a * c);
  return b >= Scalar(0) ? (Scalar(-2) * c) / (b + root) : (root - b) / (Scalar(2) * a);
}

template <typename Scalar>
void require_finite(const VectorX<Scalar>& v) {
  if (!v.allFinite()) throw SolverError("Hessian operator returned non-finite values");
}

}  // namespace detail

/// Steihaug-Toint truncated CG from p = 0. Exits on the residual tolerance,
/// at the boundary when an iterate leaves the region, along the current
/// direction on nonpositive curvature, or after cg_max_iters iterations.
/// The first iterate is the Cauchy point and the model never increases, so
/// the result has at least Cauchy decrease. A zero g_bar yields a zero step.
template <typename Scalar>
TrStep<Scalar> steihaug_cg(const TrSubproblem<Scalar>& sub) {
  using VectorType = VectorX<Scalar>;
  const Index n = sub.g_bar.size();
  if (sub.hessian == nullptr || sub.hessian->dim() != n) {
    throw std::invalid_argument("subproblem Hessian dimension mismatch");
  }
  if (sub.cg_max_iters < 1) throw std::invalid_argument("cg_max_iters must be >= 1");

  TrStep<Scalar> out;
  out.step = VectorType::Zero(n);
  const Scalar g_norm = sub.g_bar.norm();
  if (g_norm == Scalar(0) || sub.radius <= Scalar(0)) {
    out.model_trace = {Scalar(0)};
    return out;
  }

  const VectorType& g = sub.g_bar;
  VectorType z = VectorType::Zero(n);
  VectorType hz = VectorType::Zero(n);  // H z, tracked so the model needs no extra products
  VectorType r = g;
  VectorType d = -r;
  Scalar rr = r.squaredNorm();

  auto model_at = [&](const VectorType& p, const VectorType& hp) {
    return g.dot(p) + Scalar(0.5) * p.dot(hp);
  };
  auto finish = [&](const VectorType& p, const VectorType& hp, CgTermination why) {
    out.step = p;
    out.termination = why;
    out.hit_boundary = why == CgTermination::Boundary || why == CgTermination::NegativeCurvature;
    const Scalar norm = out.step.norm();
    if (norm > sub.radius) out.step *= sub.radius / norm;
    out.model_decrease = model_at(p, hp);
    out.model_trace.push_back(out.model_decrease);
    return out;
  };
  out.model_trace.push_back(Scalar(0));

  for (int iter = 0; iter < sub.cg_max_iters; ++iter) {
    out.cg_iters = iter + 1;
    const VectorType hd = sub.hessian->apply(d);
    detail::require_finite(hd);
    const Scalar dhd = d.dot(hd);

    if (dhd <= Scalar(0)) {
      const Scalar tau = detail::boundary_tau(z, d, sub.radius);
      return finish(z + tau * d, hz + tau * hd, CgTermination::NegativeCurvature);
    }
    const Scalar step_len = rr / dhd;
    VectorType z_next = z + step_len * d;
    if (z_next.norm() >= sub.radius) {
      const Scalar tau = detail::boundary_tau(z, d, sub.radius);
      return finish(z + tau * d, hz + tau * hd, CgTermination::Boundary);
    }
    VectorType hz_next = hz + step_len * hd;
    r += step_len * hd;
    const Scalar rr_next = r.squaredNorm();
    if (std::sqrt(rr_next) <= sub.cg_tol) {
      return finish(z_next, hz_next, CgTermination::ResidualTol);
    }
    out.model_trace.push_back(model_at(z_next, hz_next));
    z = std::move(z_next);
    hz = std::move(hz_next);
    d = -r + (rr_next / rr) * d;
    rr = rr_next;
  }
  out.model_trace.pop_back();
  return finish(z, hz, CgTermination::MaxIters);
}

/// Power iteration on a symmetric operator; returns |lambda|_max estimate.
template <typename Scalar>
Scalar estimate_operator_norm(const HessianOperator<Scalar>& h, int iters = 30,
                              std::uint64_t seed = 0x5eed) {
  if (auto known = h.known_norm()) return *known;
  Rng rng(seed);
  std::normal_distribution<double> normal;
  VectorX<Scalar> v(h.dim());
  for (Index j = 0; j < v.size(); ++j) v[j] = Scalar(normal(rng));
  v.normalize();
  Scalar estimate = 0;
  for (int k = 0; k < iters; ++k) {
    VectorX<Scalar> hv = h.apply(v);
    estimate = hv.norm();
    if (estimate == Scalar(0) || !std::isfinite(static_cast<double>(estimate))) break;
    v = hv / estimate;
  }
  return estimate;
}

}  // namespace trsvr
