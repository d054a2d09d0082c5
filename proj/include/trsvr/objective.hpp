#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "trsvr/dataset.hpp"
#include "trsvr/types.hpp"

namespace trsvr {

/// Finite-sum objective f(w) = (1/N) sum_i f_i(w) where every component splits
/// as f_i(w) = sample_i(w) + shared(w). The shared part carries regularizers
/// that appear identically in each component.
class FiniteSum {
 public:
  /// Generalized-linear structure: sample_i(w) = phi_i(x_i^T w), so its
  /// gradient is a scalar residual times the feature row.
  class LinearModel {
   public:
    virtual ~LinearModel() = default;
    virtual double residual(Index i, const Vector& w) const = 0;
    virtual void add_row(Index i, double scale, Vector& out) const = 0;
  };

  virtual ~FiniteSum() = default;

  virtual Index size() const = 0;
  virtual Index dim() const = 0;
  virtual bool is_convex() const = 0;

  virtual double sample_value(Index i, const Vector& w) const = 0;
  /// out += scale * grad sample_i(w)
  virtual void add_sample_gradient(Index i, const Vector& w, double scale, Vector& out) const = 0;
  /// out += scale * (grad sample_i(w) - grad sample_i(w_ref))
  virtual void add_sample_gradient_diff(Index i, const Vector& w, const Vector& w_ref, double scale,
                                        Vector& out) const;
  /// out += scale * hess sample_i(w) * v
  virtual void add_sample_hvp(Index i, const Vector& w, const Vector& v, double scale,
                              Vector& out) const = 0;

  virtual double shared_value(const Vector& w) const = 0;
  virtual void add_shared_gradient(const Vector& w, Vector& out) const = 0;
  virtual void add_shared_hvp(const Vector& w, const Vector& v, Vector& out) const = 0;

  virtual const LinearModel* linear_model() const { return nullptr; }
};

enum class ObjectiveMode { Convex, Nonconvex };

/// Logistic loss with l2 and double-well regularization:
///   f_i(w) = log(1 + exp(-y_i x_i^T w)) + (l2/2)|w|^2 + (dw/d) sum_j (w_j^2 - a^2)^2
struct ObjectiveSpec {
  double l2_coef = 1e-4;
  double dw_coef = 0.0;
  double dw_center = 0.5;
  ObjectiveMode mode = ObjectiveMode::Convex;

  void validate() const;
  bool operator==(const ObjectiveSpec&) const = default;

  static ObjectiveSpec convex(double l2) { return {l2, 0.0, 0.5, ObjectiveMode::Convex}; }
  static ObjectiveSpec nonconvex(double l2, double dw, double center) {
    return {l2, dw, center, ObjectiveMode::Nonconvex};
  }
};

std::string to_string(ObjectiveMode mode);
ObjectiveMode objective_mode_from_string(const std::string& name);

/// Non-owning view; the dataset must outlive the objective.
class LogisticObjective final : public FiniteSum, public FiniteSum::LinearModel {
 public:
  LogisticObjective(const ObjectiveSpec& spec, const Dataset& data);

  const ObjectiveSpec& spec() const { return spec_; }
  const Dataset& data() const { return *data_; }

  Index size() const override { return data_->size(); }
  Index dim() const override { return data_->dim(); }
  bool is_convex() const override { return spec_.mode == ObjectiveMode::Convex; }

  double margin(Index i, const Vector& w) const;

  double sample_value(Index i, const Vector& w) const override;
  void add_sample_gradient(Index i, const Vector& w, double scale, Vector& out) const override;
  void add_sample_gradient_diff(Index i, const Vector& w, const Vector& w_ref, double scale,
                                Vector& out) const override;
  void add_sample_hvp(Index i, const Vector& w, const Vector& v, double scale,
                      Vector& out) const override;

  double shared_value(const Vector& w) const override;
  void add_shared_gradient(const Vector& w, Vector& out) const override;
  void add_shared_hvp(const Vector& w, const Vector& v, Vector& out) const override;

  const FiniteSum::LinearModel* linear_model() const override { return this; }
  double residual(Index i, const Vector& w) const override;
  void add_row(Index i, double scale, Vector& out) const override;

 private:
  ObjectiveSpec spec_;
  const Dataset* data_;
};

/// f_i(w) = 1/2 w^T A_i w - b_i^T w, plus an optional shared (l2/2)|w|^2.
/// Used as an exactly solvable test problem and for stability studies.
class QuadraticSum final : public FiniteSum {
 public:
  QuadraticSum(std::vector<Matrix> hessians, std::vector<Vector> linear, double l2 = 0.0);

  /// N identical copies of 1/2 w^T A w.
  static QuadraticSum single(const Matrix& a, Index copies = 1);

  Index size() const override { return static_cast<Index>(hessians_.size()); }
  Index dim() const override { return dim_; }
  bool is_convex() const override { return convex_; }

  double sample_value(Index i, const Vector& w) const override;
  void add_sample_gradient(Index i, const Vector& w, double scale, Vector& out) const override;
  void add_sample_hvp(Index i, const Vector& w, const Vector& v, double scale,
                      Vector& out) const override;

  double shared_value(const Vector& w) const override;
  void add_shared_gradient(const Vector& w, Vector& out) const override;
  void add_shared_hvp(const Vector& w, const Vector& v, Vector& out) const override;

  /// Largest |eigenvalue| over the components, plus l2.
  double lipschitz() const;

 private:
  std::vector<Matrix> hessians_;
  std::vector<Vector> linear_;
  double l2_;
  Index dim_;
  bool convex_;
};

// Component oracles -------------------------------------------------------

double component_value(const FiniteSum& f, Index i, const Vector& w);
Vector component_gradient(const FiniteSum& f, Index i, const Vector& w);

/// Means over all N components. Sample terms are reduced over a fixed pairwise
/// tree, then the shared term is added once, so results are bit-reproducible.
double full_value(const FiniteSum& f, const Vector& w);
Vector full_gradient(const FiniteSum& f, const Vector& w);

/// Mean gradient over an index list (duplicates allowed), same reduction as
/// full_gradient: a batch of 0..N-1 in order reproduces it bit-for-bit.
Vector batch_gradient(const FiniteSum& f, std::span<const Index> indices, const Vector& w);
/// (1/b) sum_i (grad f_i(w) - grad f_i(w_ref)), shared terms included.
Vector batch_gradient_diff(const FiniteSum& f, std::span<const Index> indices, const Vector& w,
                           const Vector& w_ref);

/// Average of exact component Hessian-vector products.
Vector exact_hvp(const FiniteSum& f, const Vector& w, const Vector& v);
Vector exact_hvp(const FiniteSum& f, std::span<const Index> indices, const Vector& w,
                 const Vector& v);

// Convenience forms on (spec, data) --------------------------------------

double component_value(const ObjectiveSpec& spec, const Dataset& data, Index i, const Vector& w);
Vector component_gradient(const ObjectiveSpec& spec, const Dataset& data, Index i,
                          const Vector& w);
double full_value(const ObjectiveSpec& spec, const Dataset& data, const Vector& w);
Vector full_gradient(const ObjectiveSpec& spec, const Dataset& data, const Vector& w);

/// Numerically stable log(1 + exp(z)).
double softplus(double z);
/// Numerically stable 1 / (1 + exp(-z)).
double sigmoid(double z);

// Lipschitz bounds ---------------------------------------------------------

struct LipschitzEstimate {
  double L = 0.0;
  double ball_radius = 10.0;
  std::optional<std::vector<double>> per_component;
};

/// Convex: L = l2 + max_i |x_i|^2 / 4 (exact). Nonconvex adds the double-well
/// curvature bound (4 dw / d) max(3R^2 - a^2, a^2) over the inf-norm ball R.
LipschitzEstimate lipschitz_bound(const ObjectiveSpec& spec, const Dataset& data,
                                  double ball_radius = 10.0, bool per_component = false);

}  // namespace trsvr
