#include "trsvr/estimator.hpp"

#include <stdexcept>

#include "trsvr/reduce.hpp"

namespace trsvr {

MiniBatch MiniBatch::full(Index n) { return {iota_indices(n)}; }

MiniBatch sample_minibatch(Index n, Index b, Rng& rng) {
  if (n < 1 || b < 1 || b > n) throw std::invalid_argument("batch size must lie in [1, N]");
  std::uniform_int_distribution<Index> pick(0, n - 1);
  MiniBatch batch;
  batch.indices.resize(static_cast<std::size_t>(b));
  for (auto& i : batch.indices) i = pick(rng);
  return batch;
}

MiniBatch draw_batch(Index n, Index b, Rng& rng) {
  if (b == n) return MiniBatch::full(n);
  return sample_minibatch(n, b, rng);
}

Vector minibatch_gradient(const FiniteSum& f, const MiniBatch& batch, const Vector& w,
                          EvalCounter& counter) {
  Vector g = batch_gradient(f, batch.indices, w);
  counter.component_grad_evals += static_cast<std::uint64_t>(batch.size());
  return g;
}

SvrgReference SvrgReference::at(const FiniteSum& f, const Vector& x, EvalCounter& counter) {
  SvrgReference ref{x, full_gradient(f, x)};
  counter.component_grad_evals += static_cast<std::uint64_t>(f.size());
  counter.full_grad_evals += 1;
  return ref;
}

Vector svrg_gradient(const FiniteSum& f, const MiniBatch& batch, const Vector& w,
                     const SvrgReference& ref, EvalCounter& counter) {
  if (ref.x_ref.size() != f.dim() || ref.g_ref.size() != f.dim()) {
    throw std::invalid_argument("SVRG reference dimension mismatch");
  }
  Vector g = batch_gradient_diff(f, batch.indices, w, ref.x_ref);
  g += ref.g_ref;
  counter.component_grad_evals += 2 * static_cast<std::uint64_t>(batch.size());
  return g;
}

// SAGA ----------------------------------------------------------------------

namespace {

const FiniteSum::LinearModel& require_linear_model(const FiniteSum& f) {
  const auto* glm = f.linear_model();
  if (glm == nullptr) throw std::invalid_argument("SAGA needs a generalized-linear objective");
  return *glm;
}

}  // namespace

SagaTable SagaTable::at_anchor(const FiniteSum& f, const Vector& anchor, EvalCounter& counter) {
  const auto& glm = require_linear_model(f);
  if (anchor.size() != f.dim()) throw std::invalid_argument("dimension mismatch");
  SagaTable table;
  table.residuals_.resize(static_cast<std::size_t>(f.size()));
  for (Index i = 0; i < f.size(); ++i) {
    table.residuals_[static_cast<std::size_t>(i)] = glm.residual(i, anchor);
  }
  counter.component_grad_evals += static_cast<std::uint64_t>(f.size());
  table.refresh(f);
  return table;
}

void SagaTable::refresh(const FiniteSum& f) {
  const auto& glm = require_linear_model(f);
  const auto idx = iota_indices(f.size());
  running_avg_ = pairwise_sum(idx, f.dim(), [&](Index i, Vector& acc) {
    glm.add_row(i, residuals_[static_cast<std::size_t>(i)], acc);
  });
  running_avg_ /= static_cast<double>(f.size());
  updates_since_refresh_ = 0;
}

Vector saga_step_gradient(const FiniteSum& f, Index i, const Vector& w, SagaTable& table,
                          EvalCounter& counter) {
  const auto& glm = require_linear_model(f);
  if (i < 0 || i >= f.size()) throw std::out_of_range("component index out of range");
  if (w.size() != f.dim()) throw std::invalid_argument("dimension mismatch");

  auto& stored = table.residuals_[static_cast<std::size_t>(i)];
  const double fresh = glm.residual(i, w);
  const double delta = fresh - stored;

  Vector g = table.running_avg_;
  glm.add_row(i, delta, g);
  f.add_shared_gradient(w, g);
  counter.component_grad_evals += 1;

  stored = fresh;
  glm.add_row(i, delta / static_cast<double>(f.size()), table.running_avg_);
  if (++table.updates_since_refresh_ >= f.size()) table.refresh(f);
  return g;
}

// SARAH ---------------------------------------------------------------------

SarahState SarahState::at_anchor(const FiniteSum& f, const Vector& anchor, EvalCounter& counter) {
  SarahState state{full_gradient(f, anchor), anchor};
  counter.component_grad_evals += static_cast<std::uint64_t>(f.size());
  counter.full_grad_evals += 1;
  return state;
}

Vector sarah_step(const FiniteSum& f, const MiniBatch& batch, const Vector& w, SarahState& state,
                  EvalCounter& counter) {
  Vector v = batch_gradient_diff(f, batch.indices, w, state.x_prev);
  v += state.v;
  counter.component_grad_evals += 2 * static_cast<std::uint64_t>(batch.size());
  state.v = v;
  state.x_prev = w;
  return v;
}

}  // namespace trsvr
