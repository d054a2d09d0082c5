#include "trsvr/objective.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "trsvr/reduce.hpp"

namespace trsvr {

std::vector<Index> iota_indices(Index n) {
  std::vector<Index> idx(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
  return idx;
}

void FiniteSum::add_sample_gradient_diff(Index i, const Vector& w, const Vector& w_ref,
                                         double scale, Vector& out) const {
  add_sample_gradient(i, w, scale, out);
  add_sample_gradient(i, w_ref, -scale, out);
}

void ObjectiveSpec::validate() const {
  if (!(l2_coef >= 0.0) || !(dw_coef >= 0.0) || !std::isfinite(l2_coef) ||
      !std::isfinite(dw_coef) || !std::isfinite(dw_center)) {
    throw std::invalid_argument("objective coefficients must be finite and nonnegative");
  }
  if (mode == ObjectiveMode::Convex && dw_coef != 0.0) {
    throw std::invalid_argument("convex objective cannot carry a double-well term");
  }
}

std::string to_string(ObjectiveMode mode) {
  return mode == ObjectiveMode::Convex ? "convex" : "nonconvex";
}

ObjectiveMode objective_mode_from_string(const std::string& name) {
  if (name == "convex") return ObjectiveMode::Convex;
  if (name == "nonconvex") return ObjectiveMode::Nonconvex;
  throw std::invalid_argument("unknown objective mode '" + name + "'");
}

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// LogisticObjective --------------------------------------------------------

LogisticObjective::LogisticObjective(const ObjectiveSpec& spec, const Dataset& data)
    : spec_(spec), data_(&data) {
  spec_.validate();
}

double LogisticObjective::margin(Index i, const Vector& w) const {
  double m = 0.0;
  for (SparseRows::InnerIterator it(data_->rows, i); it; ++it) m += it.value() * w[it.index()];
  return m;
}

double LogisticObjective::sample_value(Index i, const Vector& w) const {
  return softplus(-data_->labels[i] * margin(i, w));
}

// d/dm log(1 + exp(-y m)) = -y * sigmoid(-y m)
double LogisticObjective::residual(Index i, const Vector& w) const {
  const double y = data_->labels[i];
  return -y * sigmoid(-y * margin(i, w));
}

void LogisticObjective::add_row(Index i, double scale, Vector& out) const {
  for (SparseRows::InnerIterator it(data_->rows, i); it; ++it) out[it.index()] += scale * it.value();
}

void LogisticObjective::add_sample_gradient(Index i, const Vector& w, double scale,
                                            Vector& out) const {
  add_row(i, scale * residual(i, w), out);
}

void LogisticObjective::add_sample_gradient_diff(Index i, const Vector& w, const Vector& w_ref,
                                                 double scale, Vector& out) const {
  add_row(i, scale * (residual(i, w) - residual(i, w_ref)), out);
}

void LogisticObjective::add_sample_hvp(Index i, const Vector& w, const Vector& v, double scale,
                                       Vector& out) const {
  const double s = sigmoid(data_->labels[i] * margin(i, w));
  const double curvature = s * (1.0 - s);
  add_row(i, scale * curvature * margin(i, v), out);
}

double LogisticObjective::shared_value(const Vector& w) const {
  double value = 0.5 * spec_.l2_coef * w.squaredNorm();
  if (spec_.dw_coef != 0.0) {
    const double a2 = spec_.dw_center * spec_.dw_center;
    value += spec_.dw_coef / static_cast<double>(dim()) * (w.array().square() - a2).square().sum();
  }
  return value;
}

void LogisticObjective::add_shared_gradient(const Vector& w, Vector& out) const {
  out += spec_.l2_coef * w;
  if (spec_.dw_coef != 0.0) {
    const double a2 = spec_.dw_center * spec_.dw_center;
    const double c = 4.0 * spec_.dw_coef / static_cast<double>(dim());
    out.array() += c * w.array() * (w.array().square() - a2);
  }
}

void LogisticObjective::add_shared_hvp(const Vector& w, const Vector& v, Vector& out) const {
  out += spec_.l2_coef * v;
  if (spec_.dw_coef != 0.0) {
    const double a2 = spec_.dw_center * spec_.dw_center;
    const double c = 4.0 * spec_.dw_coef / static_cast<double>(dim());
    out.array() += c * (3.0 * w.array().square() - a2) * v.array();
  }
}

// QuadraticSum -------------------------------------------------------------

QuadraticSum::QuadraticSum(std::vector<Matrix> hessians, std::vector<Vector> linear, double l2)
    : hessians_(std::move(hessians)), linear_(std::move(linear)), l2_(l2) {
  if (hessians_.empty()) throw std::invalid_argument("quadratic sum needs at least one component");
  dim_ = hessians_.front().rows();
  if (linear_.empty()) linear_.assign(hessians_.size(), Vector::Zero(dim_));
  if (linear_.size() != hessians_.size()) throw std::invalid_argument("component count mismatch");
  convex_ = l2_ >= 0.0;
  for (std::size_t i = 0; i < hessians_.size(); ++i) {
    const Matrix& a = hessians_[i];
    if (a.rows() != dim_ || a.cols() != dim_ || linear_[i].size() != dim_) {
      throw std::invalid_argument("component dimension mismatch");
    }
    if ((a - a.transpose()).norm() > 1e-12 * (1.0 + a.norm())) {
      throw std::invalid_argument("component Hessian must be symmetric");
    }
  }
  Matrix mean = Matrix::Zero(dim_, dim_);
  for (const Matrix& a : hessians_) mean += a;
  mean /= static_cast<double>(hessians_.size());
  mean.diagonal().array() += l2_;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(mean, Eigen::EigenvaluesOnly);
  convex_ = eig.eigenvalues().minCoeff() >= 0.0;
}

QuadraticSum QuadraticSum::single(const Matrix& a, Index copies) {
  return QuadraticSum(std::vector<Matrix>(static_cast<std::size_t>(copies), a), {});
}

double QuadraticSum::sample_value(Index i, const Vector& w) const {
  const auto k = static_cast<std::size_t>(i);
  return 0.5 * w.dot(hessians_[k] * w) - linear_[k].dot(w);
}

void QuadraticSum::add_sample_gradient(Index i, const Vector& w, double scale, Vector& out) const {
  const auto k = static_cast<std::size_t>(i);
  out += scale * (hessians_[k] * w - linear_[k]);
}

void QuadraticSum::add_sample_hvp(Index i, const Vector&, const Vector& v, double scale,
                                  Vector& out) const {
  out += scale * (hessians_[static_cast<std::size_t>(i)] * v);
}

double QuadraticSum::shared_value(const Vector& w) const { return 0.5 * l2_ * w.squaredNorm(); }

void QuadraticSum::add_shared_gradient(const Vector& w, Vector& out) const { out += l2_ * w; }

void QuadraticSum::add_shared_hvp(const Vector&, const Vector& v, Vector& out) const {
  out += l2_ * v;
}

double QuadraticSum::lipschitz() const {
  double best = 0.0;
  for (const Matrix& a : hessians_) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(a, Eigen::EigenvaluesOnly);
    best = std::max(best, eig.eigenvalues().cwiseAbs().maxCoeff());
  }
  return best + std::abs(l2_);
}

// Oracles -------------------------------------------------------------------

namespace {

void check_index(const FiniteSum& f, Index i) {
  if (i < 0 || i >= f.size()) throw std::out_of_range("component index out of range");
}

void check_dim(const FiniteSum& f, const Vector& w) {
  if (w.size() != f.dim()) throw std::invalid_argument("dimension mismatch");
}

void check_batch(const FiniteSum& f, std::span<const Index> indices) {
  if (indices.empty()) throw std::invalid_argument("empty index set");
  for (Index i : indices) check_index(f, i);
}

}  // namespace

double component_value(const FiniteSum& f, Index i, const Vector& w) {
  check_index(f, i);
  check_dim(f, w);
  return f.sample_value(i, w) + f.shared_value(w);
}

Vector component_gradient(const FiniteSum& f, Index i, const Vector& w) {
  check_index(f, i);
  check_dim(f, w);
  Vector g = Vector::Zero(f.dim());
  f.add_sample_gradient(i, w, 1.0, g);
  f.add_shared_gradient(w, g);
  return g;
}

double full_value(const FiniteSum& f, const Vector& w) {
  check_dim(f, w);
  if (f.size() < 1) throw std::invalid_argument("empty dataset");
  const auto idx = iota_indices(f.size());
  const double sum = pairwise_sum_scalar(idx, [&](Index i) { return f.sample_value(i, w); });
  return sum / static_cast<double>(f.size()) + f.shared_value(w);
}

Vector batch_gradient(const FiniteSum& f, std::span<const Index> indices, const Vector& w) {
  check_dim(f, w);
  check_batch(f, indices);
  Vector g = pairwise_sum(indices, f.dim(),
                          [&](Index i, Vector& acc) { f.add_sample_gradient(i, w, 1.0, acc); });
  g /= static_cast<double>(indices.size());
  f.add_shared_gradient(w, g);
  return g;
}

Vector full_gradient(const FiniteSum& f, const Vector& w) {
  if (f.size() < 1) throw std::invalid_argument("empty dataset");
  const auto idx = iota_indices(f.size());
  return batch_gradient(f, idx, w);
}

Vector batch_gradient_diff(const FiniteSum& f, std::span<const Index> indices, const Vector& w,
                           const Vector& w_ref) {
  check_dim(f, w);
  check_dim(f, w_ref);
  check_batch(f, indices);
  Vector g = pairwise_sum(indices, f.dim(), [&](Index i, Vector& acc) {
    f.add_sample_gradient_diff(i, w, w_ref, 1.0, acc);
  });
  g /= static_cast<double>(indices.size());
  f.add_shared_gradient(w, g);
  // Subtracting the reference's shared gradient keeps w == w_ref exact.
  Vector shared_ref = Vector::Zero(f.dim());
  f.add_shared_gradient(w_ref, shared_ref);
  g -= shared_ref;
  return g;
}

Vector exact_hvp(const FiniteSum& f, std::span<const Index> indices, const Vector& w,
                 const Vector& v) {
  check_dim(f, w);
  check_dim(f, v);
  check_batch(f, indices);
  Vector hv = pairwise_sum(indices, f.dim(),
                           [&](Index i, Vector& acc) { f.add_sample_hvp(i, w, v, 1.0, acc); });
  hv /= static_cast<double>(indices.size());
  f.add_shared_hvp(w, v, hv);
  return hv;
}

Vector exact_hvp(const FiniteSum& f, const Vector& w, const Vector& v) {
  const auto idx = iota_indices(f.size());
  return exact_hvp(f, idx, w, v);
}

double component_value(const ObjectiveSpec& spec, const Dataset& data, Index i, const Vector& w) {
  return component_value(LogisticObjective(spec, data), i, w);
}

Vector component_gradient(const ObjectiveSpec& spec, const Dataset& data, Index i,
                          const Vector& w) {
  return component_gradient(LogisticObjective(spec, data), i, w);
}

double full_value(const ObjectiveSpec& spec, const Dataset& data, const Vector& w) {
  return full_value(LogisticObjective(spec, data), w);
}

Vector full_gradient(const ObjectiveSpec& spec, const Dataset& data, const Vector& w) {
  return full_gradient(LogisticObjective(spec, data), w);
}

LipschitzEstimate lipschitz_bound(const ObjectiveSpec& spec, const Dataset& data,
                                  double ball_radius, bool per_component) {
  spec.validate();
  if (!(ball_radius > 0.0)) throw std::invalid_argument("ball radius must be positive");
  if (data.size() < 1) throw std::invalid_argument("empty dataset");
  double shared = spec.l2_coef;
  if (spec.mode == ObjectiveMode::Nonconvex && spec.dw_coef != 0.0) {
    const double a2 = spec.dw_center * spec.dw_center;
    const double r2 = ball_radius * ball_radius;
    shared += 4.0 * spec.dw_coef / static_cast<double>(data.dim()) * std::max(3.0 * r2 - a2, a2);
  }
  LipschitzEstimate est;
  est.ball_radius = ball_radius;
  est.L = shared + data.max_row_squared_norm() / 4.0;
  if (per_component) {
    std::vector<double> li(static_cast<std::size_t>(data.size()));
    for (Index i = 0; i < data.size(); ++i) {
      li[static_cast<std::size_t>(i)] = shared + data.row_squared_norm(i) / 4.0;
    }
    est.per_component = std::move(li);
  }
  return est;
}

}  // namespace trsvr
