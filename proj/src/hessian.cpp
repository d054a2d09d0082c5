#include "trsvr/hessian.hpp"

#include <memory>
#include <stdexcept>

#include "trsvr/reduce.hpp"

namespace trsvr {

std::string to_string(HessianMode mode) {
  switch (mode) {
    case HessianMode::Identity: return "id";
    case HessianMode::EstH: return "esth";
    case HessianMode::Exact: return "exact";
  }
  return "unknown";
}

HessianMode hessian_mode_from_string(const std::string& name) {
  if (name == "id" || name == "identity") return HessianMode::Identity;
  if (name == "esth") return HessianMode::EstH;
  if (name == "exact") return HessianMode::Exact;
  throw std::invalid_argument("unknown Hessian mode '" + name + "'");
}

namespace {

Vector fd_probe(const FiniteSum& f, const MiniBatch& batch, const Vector& w, const Vector& v,
                const Vector& base, const FdStepRule& rule) {
  const double v_norm = v.norm();
  const double eps = rule.step(w);
  const Vector shifted = w + (eps / v_norm) * v;
  Vector out = batch_gradient(f, batch.indices, shifted);
  out -= base;
  out *= v_norm / eps;
  return out;
}

}  // namespace

Vector finite_diff_hvp(const FiniteSum& f, const MiniBatch& batch, const Vector& w, const Vector& v,
                       const FdStepRule& rule, EvalCounter& counter, const Vector* base_gradient) {
  if (v.size() != f.dim() || w.size() != f.dim()) throw std::invalid_argument("dimension mismatch");
  if (v.norm() == 0.0) throw std::invalid_argument("finite-difference direction must be nonzero");
  if (!(rule.eps0 > 0.0)) throw std::invalid_argument("finite-difference step must be positive");
  Vector base;
  if (base_gradient == nullptr) {
    base = minibatch_gradient(f, batch, w, counter);
    base_gradient = &base;
  }
  counter.hvp_probe_evals += static_cast<std::uint64_t>(batch.size());
  return fd_probe(f, batch, w, v, *base_gradient, rule);
}

HessianOperator<double> make_esth_operator(const FiniteSum& f, const MiniBatch& batch,
                                           const Vector& w, const Vector& base_gradient,
                                           const FdStepRule& rule, EvalCounter* counter) {
  struct State {
    const FiniteSum* f;
    MiniBatch batch;
    Vector w;
    Vector base;
    FdStepRule rule;
    EvalCounter* counter;
  };
  auto state = std::make_shared<const State>(State{&f, batch, w, base_gradient, rule, counter});
  return HessianOperator<double>(HessianKind::EstH, f.dim(), [state](const Vector& v) -> Vector {
    if (v.norm() == 0.0) return Vector::Zero(v.size());
    if (state->counter != nullptr) {
      state->counter->hvp_probe_evals += static_cast<std::uint64_t>(state->batch.size());
    }
    return fd_probe(*state->f, state->batch, state->w, v, state->base, state->rule);
  });
}

HessianOperator<double> make_exact_operator(const FiniteSum& f, const MiniBatch& batch,
                                            const Vector& w, EvalCounter* counter) {
  struct State {
    const FiniteSum* f;
    std::vector<Index> indices;
    Vector w;
    EvalCounter* counter;
  };
  auto indices = batch.indices.empty() ? iota_indices(f.size()) : batch.indices;
  auto state = std::make_shared<const State>(State{&f, std::move(indices), w, counter});
  return HessianOperator<double>(HessianKind::Exact, f.dim(), [state](const Vector& v) -> Vector {
    if (state->counter != nullptr) {
      state->counter->hvp_probe_evals += static_cast<std::uint64_t>(state->indices.size());
    }
    return exact_hvp(*state->f, state->indices, state->w, v);
  });
}

}  // namespace trsvr
