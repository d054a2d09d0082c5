#include <doctest.h>

#include <cmath>
#include <numeric>

#include "oracles.hpp"
#include "trsvr/objective.hpp"
#include "trsvr/reduce.hpp"
#include "trsvr/synthetic.hpp"

using namespace trsvr;

namespace {

Dataset random_dataset(Index n, Index d, std::mt19937_64& rng, double density = 0.7) {
  std::normal_distribution<double> normal;
  std::bernoulli_distribution keep(density);
  std::vector<std::vector<SparseEntry>> rows(static_cast<std::size_t>(n));
  std::vector<double> labels(static_cast<std::size_t>(n));
  for (auto& row : rows) {
    for (Index j = 0; j < d; ++j) {
      if (keep(rng)) row.emplace_back(j, normal(rng));
    }
  }
  for (auto& y : labels) y = keep(rng) ? 1.0 : -1.0;
  return make_dataset(d, rows, labels);
}

Vector random_vector(Index d, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> normal;
  Vector v(d);
  for (Index j = 0; j < d; ++j) v[j] = scale * normal(rng);
  return v;
}

double rel_err(const Vector& a, const Vector& b) {
  return (a - b).norm() / std::max(1e-300, b.norm());
}

}  // namespace

TEST_CASE("value at the origin") {
  std::mt19937_64 rng(1);
  const Dataset data = random_dataset(6, 4, rng);
  const Vector w = Vector::Zero(4);
  const auto nc = ObjectiveSpec::nonconvex(1e-4, 1e-4, 0.5);
  CHECK(component_value(nc, data, 2, w) == doctest::Approx(std::log(2.0) + 6.25e-6).epsilon(1e-15));
  const auto cv = ObjectiveSpec::convex(1e-4);
  CHECK(component_value(cv, data, 3, w) == std::log(2.0));
}

TEST_CASE("value matches a scalar reference") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const Dataset data = random_dataset(3, 5, rng);
    const Vector w = random_vector(5, rng, 2.0);
    for (const auto& spec : {ObjectiveSpec::convex(0.3), ObjectiveSpec::nonconvex(1e-2, 0.7, 0.5)}) {
      for (Index i = 0; i < data.size(); ++i) {
        const double got = component_value(spec, data, i, w);
        const double want = oracle::component_value(spec, data, i, w);
        CHECK(std::abs(got - want) <= 1e-14 * std::abs(want));
      }
    }
  }
}

TEST_CASE("gradient at the origin") {
  std::mt19937_64 rng(3);
  const Dataset data = random_dataset(5, 6, rng);
  const Vector w = Vector::Zero(6);
  const auto spec = ObjectiveSpec::nonconvex(1e-4, 1e-4, 0.5);
  for (Index i = 0; i < data.size(); ++i) {
    const Vector x = data.rows.row(i).transpose();
    const Vector want = -0.5 * data.labels[i] * x;
    CHECK((component_gradient(spec, data, i, w) - want).norm() <= 1e-16);
  }

  const Dataset unit = make_dataset(3, {{{0, 1.0}}}, {1.0});
  const Vector g = component_gradient(ObjectiveSpec::convex(0.0), unit, 0, Vector::Zero(3));
  CHECK(g[0] == -0.5);
  CHECK(g[1] == 0.0);
  CHECK(g[2] == 0.0);
}

TEST_CASE("gradients match central differences") {
  std::mt19937_64 rng(4);
  int checked = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Index d = trial % 2 == 0 ? 8 : 5;
    const Dataset data = random_dataset(4, d, rng);
    const Vector w = random_vector(d, rng);
    const Index i = trial % data.size();
    const auto spec = trial % 2 == 0 ? ObjectiveSpec::convex(1e-2) : ObjectiveSpec::nonconvex(1e-2, 0.5, 0.5);
    const double h = 1e-6 * (1.0 + w.lpNorm<Eigen::Infinity>());
    const Vector fd = oracle::fd_gradient(
        [&](const Vector& v) { return oracle::component_value(spec, data, i, v); }, w, h);
    CHECK(rel_err(component_gradient(spec, data, i, w), fd) < 1e-6);
    ++checked;
  }
  CHECK(checked == 100);
}

TEST_CASE("full value and gradient are means of components") {
  std::mt19937_64 rng(5);
  const auto spec = ObjectiveSpec::nonconvex(1e-3, 1e-2, 0.5);
  const Dataset one = random_dataset(1, 4, rng);
  const Vector w1 = random_vector(4, rng);
  CHECK(full_value(spec, one, w1) == doctest::Approx(component_value(spec, one, 0, w1)).epsilon(1e-15));
  CHECK((full_gradient(spec, one, w1) - component_gradient(spec, one, 0, w1)).norm() <=
        1e-15 * component_gradient(spec, one, 0, w1).norm());

  const Dataset data = random_dataset(100, 7, rng);
  const Vector w = random_vector(7, rng);
  Vector mean = Vector::Zero(7);
  double vmean = 0.0;
  for (Index i = 0; i < 100; ++i) {
    mean += component_gradient(spec, data, i, w);
    vmean += component_value(spec, data, i, w);
  }
  mean /= 100.0;
  vmean /= 100.0;
  CHECK(rel_err(full_gradient(spec, data, w), mean) < 1e-13);
  CHECK(std::abs(full_value(spec, data, w) - vmean) < 1e-13 * std::abs(vmean));
}

TEST_CASE("gradient at the origin for symmetric data") {
  // Each row appears with both labels mirrored: x with +1 and -x with -1.
  std::mt19937_64 rng(6);
  std::vector<std::vector<SparseEntry>> rows;
  std::vector<double> labels;
  for (int k = 0; k < 5; ++k) {
    const Vector x = random_vector(3, rng);
    rows.push_back({{0, x[0]}, {1, x[1]}, {2, x[2]}});
    labels.push_back(1.0);
    rows.push_back({{0, -x[0]}, {1, -x[1]}, {2, -x[2]}});
    labels.push_back(-1.0);
  }
  const Dataset data = make_dataset(3, rows, labels);
  Vector want = Vector::Zero(3);
  for (Index i = 0; i < data.size(); ++i) want -= data.labels[i] * Vector(data.rows.row(i).transpose());
  want /= 2.0 * static_cast<double>(data.size());
  CHECK(rel_err(full_gradient(ObjectiveSpec::convex(1e-4), data, Vector::Zero(3)), want) < 1e-14);
}

TEST_CASE("an in-order full batch reproduces the full gradient bitwise") {
  std::mt19937_64 rng(7);
  const Dataset data = random_dataset(300, 9, rng);
  const LogisticObjective f(ObjectiveSpec::nonconvex(1e-4, 1e-3, 0.5), data);
  const Vector w = random_vector(9, rng);
  const auto all = iota_indices(300);
  CHECK(batch_gradient(f, all, w) == full_gradient(f, w));
  CHECK(batch_gradient_diff(f, all, w, w) == Vector::Zero(9));
}

TEST_CASE("exact Hessian-vector products") {
  std::mt19937_64 rng(8);
  const Dataset data = random_dataset(20, 6, rng);
  const LogisticObjective f(ObjectiveSpec::nonconvex(1e-2, 0.3, 0.5), data);
  const Vector w = random_vector(6, rng);
  CHECK(exact_hvp(f, w, Vector::Zero(6)) == Vector::Zero(6));

  const Dataset empty = make_dataset(4, {{}, {}}, {1.0, -1.0});
  const LogisticObjective ridge(ObjectiveSpec::convex(2.0), empty);
  const Vector v = random_vector(4, rng);
  CHECK((exact_hvp(ridge, random_vector(4, rng), v) - 2.0 * v).norm() <= 1e-15 * v.norm());

  for (int trial = 0; trial < 20; ++trial) {
    const Vector u = random_vector(6, rng);
    const Vector z = random_vector(6, rng);
    CHECK(std::abs(u.dot(exact_hvp(f, w, z)) - z.dot(exact_hvp(f, w, u))) <= 1e-10);
  }
}

TEST_CASE("exact products match directional differences of the full gradient") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const Dataset data = random_dataset(30, 5, rng);
    const auto spec = trial % 2 ? ObjectiveSpec::convex(1e-3) : ObjectiveSpec::nonconvex(1e-3, 0.2, 0.5);
    const LogisticObjective f(spec, data);
    const Vector w = random_vector(5, rng);
    const Vector v = random_vector(5, rng);
    const double h = 1e-5;
    const Vector fd = (full_gradient(f, w + h * v) - full_gradient(f, w - h * v)) / (2.0 * h);
    CHECK(rel_err(exact_hvp(f, w, v), fd) < 1e-4);
  }
}

TEST_CASE("Lipschitz bounds") {
  const Dataset zeros = make_dataset(3, {{}, {}}, {1.0, -1.0});
  CHECK(lipschitz_bound(ObjectiveSpec::convex(1e-4), zeros).L == doctest::Approx(1e-4).epsilon(1e-15));

  std::vector<SparseEntry> row;
  for (Index j = 0; j < 50; ++j) row.emplace_back(j, 2.0);  // |x|^2 = 200
  const Dataset single = make_dataset(50, {row}, {1.0});
  CHECK(lipschitz_bound(ObjectiveSpec::convex(1e-4), single).L == doctest::Approx(50.0001).epsilon(1e-14));

  const Dataset ten = make_dataset(10, {{}}, {1.0});
  const auto nc = lipschitz_bound(ObjectiveSpec::nonconvex(0.0, 1e-4, 0.5), ten, 10.0);
  CHECK(nc.L == doctest::Approx(0.011990).epsilon(1e-12));
  CHECK(nc.ball_radius == 10.0);

  std::mt19937_64 rng(10);
  const Dataset data = random_dataset(40, 6, rng);
  const auto per = lipschitz_bound(ObjectiveSpec::convex(1e-4), data, 10.0, true);
  REQUIRE(per.per_component.has_value());
  CHECK(per.per_component->size() == 40);
  CHECK(*std::max_element(per.per_component->begin(), per.per_component->end()) == doctest::Approx(per.L));
}

TEST_CASE("the Lipschitz bound holds inside the ball") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  int violations = 0;
  for (const auto& spec : {ObjectiveSpec::convex(1e-3), ObjectiveSpec::nonconvex(1e-4, 1e-1, 0.5)}) {
    const Dataset data = random_dataset(25, 6, rng);
    const LogisticObjective f(spec, data);
    const double L = lipschitz_bound(spec, data, 10.0).L;
    for (int k = 0; k < 100; ++k) {
      Vector a(6), b(6);
      for (Index j = 0; j < 6; ++j) {
        a[j] = u(rng);
        b[j] = u(rng);
      }
      if ((full_gradient(f, a) - full_gradient(f, b)).norm() > L * (a - b).norm()) ++violations;
    }
  }
  CHECK(violations == 0);
}

TEST_CASE("values stay finite for extreme margins") {
  for (double m : {-700.0, -100.0, -1.0, 0.0, 1.0, 100.0, 700.0}) {
    const Dataset data = make_dataset(1, {{{0, 1.0}}}, {1.0});
    const Vector w = Vector::Constant(1, m);
    const auto spec = ObjectiveSpec::convex(0.0);
    CHECK(std::isfinite(component_value(spec, data, 0, w)));
    CHECK(component_gradient(spec, data, 0, w).allFinite());
  }
  CHECK(softplus(-800.0) >= 0.0);
  CHECK(softplus(-30.0) > 0.0);
  CHECK(softplus(800.0) == 800.0);
  CHECK(sigmoid(-800.0) >= 0.0);
  CHECK(sigmoid(800.0) == 1.0);
  CHECK(component_value(ObjectiveSpec::convex(0.0), make_dataset(1, {{{0, 1.0}}}, {-1.0}), 0,
                        Vector::Constant(1, 700.0)) == doctest::Approx(700.0));
}

TEST_CASE("oracles reject bad input") {
  std::mt19937_64 rng(12);
  const Dataset data = random_dataset(3, 4, rng);
  const auto spec = ObjectiveSpec::convex(1e-4);
  CHECK_THROWS_AS(component_value(spec, data, 3, Vector::Zero(4)), std::out_of_range);
  CHECK_THROWS_AS(component_value(spec, data, -1, Vector::Zero(4)), std::out_of_range);
  CHECK_THROWS_AS(component_gradient(spec, data, 0, Vector::Zero(5)), std::invalid_argument);
  CHECK_THROWS_AS(full_gradient(spec, data, Vector::Zero(3)), std::invalid_argument);
  CHECK_THROWS_AS(exact_hvp(LogisticObjective(spec, data), Vector::Zero(4), Vector::Zero(2)),
                  std::invalid_argument);
  ObjectiveSpec bad = ObjectiveSpec::convex(1e-4);
  bad.dw_coef = 1e-3;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  CHECK_THROWS_AS(ObjectiveSpec::convex(-1.0).validate(), std::invalid_argument);
}

TEST_CASE("quadratic sums") {
  Matrix a(2, 2);
  a << 2, 0, 0, 4;
  const QuadraticSum q = QuadraticSum::single(a, 3);
  const Vector w = Vector::Ones(2);
  CHECK(full_value(q, w) == doctest::Approx(3.0));
  CHECK(full_gradient(q, w) == a * w);
  CHECK(q.lipschitz() == 4.0);
  CHECK(q.is_convex());
  Matrix neg(2, 2);
  neg << 1, 0, 0, -1;
  CHECK_FALSE(QuadraticSum::single(neg).is_convex());
}

TEST_CASE("synthetic generator") {
  SyntheticParams p;
  p.samples = 800;
  p.dim = 8;
  p.condition_number = 1.0;
  p.seed = 3;
  const SyntheticProblem iso = generate_synthetic(p);
  const Matrix x = Matrix(iso.data.rows);
  const Matrix cov = x.transpose() * x / static_cast<double>(p.samples);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  CHECK(eig.eigenvalues().maxCoeff() / eig.eigenvalues().minCoeff() <= 2.0);

  const SyntheticProblem again = generate_synthetic(p);
  CHECK(again.data == iso.data);
  CHECK(again.ground_truth == iso.ground_truth);
  CHECK(to_libsvm_string(again.data) == to_libsvm_string(iso.data));

  p.seed = 4;
  CHECK_FALSE(generate_synthetic(p).data == iso.data);

  SyntheticParams full_scale;
  full_scale.samples = 80000;
  full_scale.dim = 32;
  full_scale.condition_number = 1e4;
  const SyntheticProblem big = generate_synthetic(full_scale);
  CHECK(big.data.size() == 80000);
  CHECK(big.data.dim() == 32);
  const Matrix xb = Matrix(big.data.rows);
  Eigen::SelfAdjointEigenSolver<Matrix> eb(xb.transpose() * xb / 80000.0);
  const double ratio = eb.eigenvalues().maxCoeff() / eb.eigenvalues().minCoeff();
  CHECK(ratio > 0.8e4);
  CHECK(ratio < 1.25e4);
  CHECK(eb.eigenvalues().mean() == doctest::Approx(1.0).epsilon(0.05));
  for (Index i = 0; i < big.data.size(); ++i) CHECK_UNARY(big.data.labels[i] == 1.0 || big.data.labels[i] == -1.0);

  p.dim = 1;
  CHECK_THROWS_AS(generate_synthetic(p), std::invalid_argument);
  p.dim = 8;
  p.condition_number = 0.5;
  CHECK_THROWS_AS(generate_synthetic(p), std::invalid_argument);
}
