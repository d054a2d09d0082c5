#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "trsvr/baselines.hpp"
#include "trsvr/theory.hpp"
#include "trsvr/trsvr.hpp"

using namespace trsvr;

namespace {

Dataset random_dataset(Index n, Index d, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  std::bernoulli_distribution coin(0.5);
  Matrix x(n, d);
  Vector y(n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < d; ++j) x(i, j) = normal(rng);
    y[i] = coin(rng) ? 1.0 : -1.0;
  }
  return make_dense_dataset(x, y);
}

Vector random_vector(Index d, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Vector v(d);
  for (Index j = 0; j < d; ++j) v[j] = normal(rng);
  return v;
}

QuadraticSum random_quadratic(Index n, Index d, std::mt19937_64& rng) {
  std::vector<Matrix> hs;
  std::vector<Vector> bs;
  for (Index i = 0; i < n; ++i) {
    hs.push_back(oracle::random_symmetric(d, rng, 1.0, 4.0));
    bs.push_back(random_vector(d, rng));
  }
  return QuadraticSum(hs, bs);
}

Trajectory run_trsvr(const FiniteSum& f, const TrsvrConfig& cfg, const Vector& x0,
                     const TrsvrHooks& hooks = {}) {
  Recorder rec(f, "trsvr", cfg.seed, 0.0);
  rec.set_timing(false);
  return trsvr_run(f, cfg, x0, rec, hooks);
}

Trajectory run_base(const FiniteSum& f, const BaselineConfig& cfg, const Vector& x0) {
  Recorder rec(f, to_string(cfg.method), cfg.seed, 0.0);
  rec.set_timing(false);
  return run_baseline(f, cfg, x0, rec);
}

Vector gradient_descent(const FiniteSum& f, Vector x, double lr, Index steps) {
  for (Index t = 0; t < steps; ++t) x -= lr * full_gradient(f, x);
  return x;
}

}  // namespace

TEST_CASE("TRSVR with full batches and identity curvature is gradient descent") {
  std::mt19937_64 rng(1);
  const Dataset data = random_dataset(30, 4, rng);
  const LogisticObjective f(ObjectiveSpec::convex(1e-2), data);
  const Vector x0 = random_vector(4, rng);
  TrsvrConfig cfg;
  cfg.alpha = 0.5;
  cfg.batch_size = 30;
  cfg.inner_len = 1;
  cfg.hessian = HessianMode::Identity;
  cfg.epochs = 12;
  const Trajectory out = run_trsvr(f, cfg, x0);
  CHECK((out.final_iterate - gradient_descent(f, x0, 0.5, 12)).norm() <= 1e-12);
  CHECK(out.counters.hvp_probe_evals == 0);
  CHECK(out.cauchy_violations == 0);
}

TEST_CASE("TRSVR with exact curvature solves a quadratic like Newton") {
  std::mt19937_64 rng(2);
  const QuadraticSum q = random_quadratic(8, 5, rng);
  TrsvrConfig cfg;
  cfg.alpha = 10.0;
  cfg.batch_size = 8;
  cfg.inner_len = 1;
  cfg.hessian = HessianMode::Exact;
  cfg.epochs = 3;
  const Trajectory out = run_trsvr(q, cfg, random_vector(5, rng));
  REQUIRE(out.records.size() >= 2);
  CHECK(full_gradient(q, out.final_iterate).norm() <= 1e-12);
}

TEST_CASE("TRSVR determinism, accounting and anchors") {
  std::mt19937_64 rng(3);
  const Dataset data = random_dataset(60, 5, rng);
  const LogisticObjective f(ObjectiveSpec::nonconvex(1e-3, 1e-2, 0.5), data);
  const Vector x0 = random_vector(5, rng);
  TrsvrConfig cfg;
  cfg.alpha = 0.3;
  cfg.batch_size = 6;
  cfg.inner_len = 7;
  cfg.epochs = 4;
  cfg.seed = 11;

  const Trajectory a = run_trsvr(f, cfg, x0);
  const Trajectory b = run_trsvr(f, cfg, x0);
  CHECK(a.records == b.records);
  CHECK(a.final_iterate == b.final_iterate);
  cfg.seed = 12;
  CHECK(run_trsvr(f, cfg, x0).final_iterate != a.final_iterate);
  cfg.seed = 11;

  CHECK(a.counters.component_grad_evals == 4u * (60u + 7u * 2u * 6u));
  CHECK(a.counters.full_grad_evals == 4u);
  REQUIRE(a.outer_loops.size() == 4);
  std::uint64_t probes = 0;
  for (const auto& loop : a.outer_loops) {
    CHECK(loop.inner_steps == 7);
    CHECK(loop.component_grad_evals == 60u + 84u);
    CHECK(loop.hvp_probe_evals % 6u == 0u);
    CHECK(loop.hvp_probe_evals >= 6u);
    probes += loop.hvp_probe_evals;
  }
  CHECK(probes == a.counters.hvp_probe_evals);
  CHECK(a.cauchy_checks == 28);
  CHECK(a.cauchy_violations == 0);
  CHECK(a.radii.size() == 28);
  CHECK(a.records.back().effective_passes ==
        doctest::Approx(static_cast<double>(a.counters.component_grad_evals + a.counters.hvp_probe_evals) / 60.0));

  // Every outer loop is anchored at the point the previous one ended on.
  std::vector<Vector> anchors, ends;
  Vector last = x0;
  TrsvrHooks hooks;
  hooks.on_inner_step = [&](const InnerStepInfo& info) {
    if (info.s == 0) {
      anchors.push_back(info.ref.x_ref);
      CHECK(info.x == info.ref.x_ref);
      ends.push_back(last);
    }
    last = info.x + info.step.step;
  };
  const Trajectory c = run_trsvr(f, cfg, x0, hooks);
  REQUIRE(anchors.size() == 4);
  for (std::size_t k = 0; k < anchors.size(); ++k) CHECK(anchors[k] == ends[k]);
  CHECK(c.final_iterate == last);

  // Records fall on epoch ends and every ceil(S/10) inner steps in between.
  CHECK(resolved_record_every(0, 7) == 1);
  CHECK(resolved_record_every(0, 100) == 10);
  CHECK(resolved_record_every(3, 100) == 3);
  CHECK(a.records.front().epoch == 0.0);
  CHECK(a.records.back().epoch == 4.0);
  CHECK(a.records.size() == 1 + 4 * 7);
}

TEST_CASE("TRSVR runs down the median optimality gap") {
  std::mt19937_64 rng(4);
  const Dataset data = random_dataset(200, 5, rng);
  const LogisticObjective f(ObjectiveSpec::convex(1e-2), data);
  TrsvrConfig base;
  base.alpha = 0.5;
  base.batch_size = 10;
  base.inner_len = 20;
  base.epochs = 8;
  base.hessian = HessianMode::EstH;
  const Vector x0 = random_vector(5, rng);

  // Reference optimum by exact Newton trust region.
  BaselineConfig tr;
  tr.method = BaselineMethod::ClassicTR;
  tr.hessian = HessianMode::Exact;
  tr.epochs = 100;
  tr.delta0 = 10.0;
  const double f_star = full_value(f, run_base(f, tr, x0).final_iterate);

  std::vector<std::vector<double>> gaps(9);
  for (std::uint64_t seed = 0; seed < 9; ++seed) {
    TrsvrConfig cfg = base;
    cfg.seed = seed;
    const Trajectory out = run_trsvr(f, cfg, x0);
    for (const auto& r : out.records) {
      if (r.epoch == std::floor(r.epoch)) gaps[static_cast<std::size_t>(r.epoch)].push_back(r.f_value - f_star);
    }
  }
  std::vector<double> medians;
  for (auto& g : gaps) {
    REQUIRE(g.size() == 9);
    std::nth_element(g.begin(), g.begin() + 4, g.end());
    medians.push_back(g[4]);
  }
  for (std::size_t k = 1; k < medians.size(); ++k) CHECK(medians[k] <= medians[k - 1] + 1e-12);
  CHECK(medians.back() <= 1e-6 * medians.front());
}

TEST_CASE("TRSVR edge cases") {
  std::mt19937_64 rng(5);
  const QuadraticSum q = QuadraticSum::single(Matrix::Identity(3, 3), 4);
  TrsvrConfig cfg;
  cfg.batch_size = 2;
  cfg.inner_len = 3;
  cfg.epochs = 2;
  const Trajectory still = run_trsvr(q, cfg, Vector::Zero(3));
  REQUIRE(still.stationary_event.has_value());
  CHECK(*still.stationary_event == std::make_pair(Index{0}, Index{0}));
  CHECK(still.final_iterate == Vector::Zero(3));
  CHECK(still.cauchy_checks == 0);

  cfg.epochs = 0;
  const Trajectory none = run_trsvr(q, cfg, Vector::Ones(3));
  CHECK(none.records.size() == 1);
  CHECK(none.counters.component_grad_evals == 0);

  cfg.epochs = 10;
  cfg.max_passes = 3.0;
  const Trajectory capped = run_trsvr(q, cfg, Vector::Ones(3));
  CHECK(capped.outer_loops.size() < 10);
  CHECK(capped.records.back().effective_passes >= 3.0);

  TrsvrConfig bad;
  bad.batch_size = 2;
  bad.alpha = 0.0;
  CHECK_THROWS_AS(bad.validate(4), std::invalid_argument);
  bad.alpha = 1.0;
  bad.batch_size = 5;
  CHECK_THROWS_AS(bad.validate(4), std::invalid_argument);
  bad.batch_size = 2;
  bad.inner_len = 0;
  CHECK_THROWS_AS(bad.validate(4), std::invalid_argument);
  bad.inner_len = 1;
  CHECK_NOTHROW(bad.validate(4));
  CHECK_THROWS_AS(run_trsvr(q, bad, Vector::Zero(2)), std::invalid_argument);

}

TEST_CASE("SGD and Adam") {
  std::mt19937_64 rng(6);
  const Dataset data = random_dataset(20, 3, rng);
  const LogisticObjective f(ObjectiveSpec::convex(1e-2), data);
  const Vector x0 = random_vector(3, rng);

  BaselineConfig sgd;
  sgd.method = BaselineMethod::SGD;
  sgd.batch_size = 20;
  sgd.momentum = 0.0;
  sgd.lr = 0.3;
  sgd.epochs = 15;
  const Trajectory out = run_base(f, sgd, x0);
  CHECK((out.final_iterate - gradient_descent(f, x0, 0.3, 15)).norm() <= 1e-13);
  CHECK(out.counters.component_grad_evals == 300u);

  sgd.batch_size = 3;
  sgd.epochs = 2;
  const Trajectory small = run_base(f, sgd, x0);
  CHECK(small.outer_loops.size() == 2);
  CHECK(small.outer_loops[0].inner_steps == 7);

  BaselineConfig adam;
  adam.method = BaselineMethod::Adam;
  adam.batch_size = 20;
  adam.lr = 1e-3;
  adam.epochs = 1;
  const Trajectory one = run_base(f, adam, x0);
  // 20 bias-corrected steps of size about lr along -sign(g) at first.
  const Vector moved = one.final_iterate - x0;
  const Vector g0 = full_gradient(f, x0);
  for (Index j = 0; j < 3; ++j) {
    CHECK(moved[j] * g0[j] < 0.0);
    CHECK(std::abs(moved[j]) <= 20.0 * 1e-3 * (1.0 + 1e-6));
  }

  // x <- -2 x on 1/2 w^2: the objective blows up and the run stops.
  BaselineConfig wild = sgd;
  wild.momentum = 0.0;
  wild.batch_size = 1;
  wild.lr = 3.0;
  wild.epochs = 100;
  const Trajectory blown = run_base(QuadraticSum::single(Matrix::Identity(2, 2)), wild, Vector::Ones(2));
  CHECK(blown.diverged);
  CHECK(blown.diagnostic == "objective diverged");
  CHECK(blown.outer_loops.size() < 100);

  adam.beta1 = 1.0;
  CHECK_THROWS_AS(adam.validate(20), std::invalid_argument);
  sgd.momentum = 1.0;
  CHECK_THROWS_AS(sgd.validate(20), std::invalid_argument);
  for (auto m : {BaselineMethod::SGD, BaselineMethod::Adam, BaselineMethod::SVRG, BaselineMethod::SAGA,
                 BaselineMethod::SARAH, BaselineMethod::ClassicTR, BaselineMethod::TRish}) {
    CHECK(baseline_method_from_string(to_string(m)) == m);
  }
  CHECK(baseline_method_from_string("classic-tr") == BaselineMethod::ClassicTR);
  CHECK_THROWS_AS(baseline_method_from_string("lbfgs"), std::invalid_argument);
}

TEST_CASE("classic trust region") {
  // f = 50 w^2 with identity model curvature: from 0.6 the unit step overshoots.
  const QuadraticSum q = QuadraticSum::single(Matrix::Constant(1, 1, 100.0), 1);
  BaselineConfig cfg;
  cfg.method = BaselineMethod::ClassicTR;
  cfg.hessian = HessianMode::Identity;
  cfg.delta0 = 1.0;
  cfg.epochs = 2;
  const Trajectory out = run_base(q, cfg, Vector::Constant(1, 0.6));
  REQUIRE(out.radii.size() == 2);
  CHECK(out.radii[0] == 1.0);
  CHECK(out.radii[1] == 0.25);
  // rho is about 0.17: accepted, yet the radius shrinks.
  CHECK(out.records[1].f_value == doctest::Approx(8.0));

  cfg.epochs = 1;
  const Trajectory rejected = run_base(q, cfg, Vector::Constant(1, 0.4));
  CHECK(rejected.final_iterate[0] == 0.4);
  CHECK(rejected.records.back().f_value == doctest::Approx(8.0));

  std::mt19937_64 rng(7);
  const QuadraticSum quad = random_quadratic(5, 4, rng);
  cfg.hessian = HessianMode::Exact;
  cfg.delta0 = 100.0;
  cfg.epochs = 1;
  const Trajectory newton = run_base(quad, cfg, random_vector(4, rng));
  CHECK(newton.records.back().grad_norm_sq <= 1e-18);
  CHECK(newton.counters.full_grad_evals == 1u);

  // Growth is capped at delta_max.
  cfg.hessian = HessianMode::Identity;
  cfg.delta0 = 0.01;
  cfg.delta_max = 0.03;
  cfg.epochs = 5;
  const Trajectory grow = run_base(QuadraticSum::single(Matrix::Identity(2, 2)), cfg, Vector::Constant(2, 10.0));
  CHECK(grow.radii == std::vector<double>{0.01, 0.02, 0.03, 0.03, 0.03});

  cfg.delta_max = 0.001;
  CHECK_THROWS_AS(cfg.validate(1), std::invalid_argument);
  cfg.delta_max = 0.0;
  cfg.eta_accept = 0.3;
  CHECK_THROWS_AS(cfg.validate(1), std::invalid_argument);

  cfg.eta_accept = 1e-4;
  cfg.grad_norm_sq_tol = 1e-3;
  cfg.epochs = 50;
  cfg.delta0 = 10.0;
  const Trajectory stop = run_base(QuadraticSum::single(Matrix::Identity(2, 2)), cfg, Vector::Constant(2, 1.0));
  CHECK(stop.outer_loops.size() == 1);
}

TEST_CASE("TRish radius zones") {
  CHECK(trish_radius(0.5, 4.0, 0.5, 0.1) == doctest::Approx(0.5 * 4.0 * 0.1));
  CHECK(trish_radius(0.5, 4.0, 0.5, 0.25) == 0.5);
  CHECK(trish_radius(0.5, 4.0, 0.5, 1.0) == 0.5);
  CHECK(trish_radius(0.5, 4.0, 0.5, 2.0) == 0.5);
  CHECK(trish_radius(0.5, 4.0, 0.5, 8.0) == doctest::Approx(0.5 * 0.5 * 8.0));
  CHECK(trish_radius(0.5, 4.0, 0.5, 0.0) == 0.0);

  BaselineConfig cfg;
  cfg.method = BaselineMethod::TRish;
  cfg.gamma1 = 0.1;
  cfg.gamma2 = 0.2;
  CHECK_THROWS_AS(cfg.validate(10), std::invalid_argument);
  cfg.gamma1 = 4.91;
  cfg.gamma2 = 0.03;
  cfg.alpha = -1.0;
  CHECK_THROWS_AS(cfg.validate(10), std::invalid_argument);

  std::mt19937_64 rng(8);
  const Dataset data = random_dataset(40, 3, rng);
  const LogisticObjective f(ObjectiveSpec::convex(1e-2), data);
  cfg.alpha = 0.4;
  cfg.batch_size = 8;
  cfg.epochs = 3;
  const Trajectory out = run_base(f, cfg, random_vector(3, rng));
  CHECK(out.radii.size() == 15);
  CHECK(out.records.back().f_value < out.records.front().f_value);
  CHECK(out.counters.component_grad_evals == 15u * 8u);
}

TEST_CASE("variance-reduced descent baselines") {
  std::mt19937_64 rng(9);
  const Dataset data = random_dataset(25, 3, rng);
  const LogisticObjective f(ObjectiveSpec::convex(1e-2), data);
  const Vector x0 = random_vector(3, rng);

  BaselineConfig svrg;
  svrg.method = BaselineMethod::SVRG;
  svrg.batch_size = 25;
  svrg.inner_len = 4;
  svrg.lr = 0.4;
  svrg.epochs = 3;
  const Trajectory out = run_base(f, svrg, x0);
  CHECK((out.final_iterate - gradient_descent(f, x0, 0.4, 12)).norm() <= 1e-11);
  CHECK(out.counters.component_grad_evals == 3u * (25u + 4u * 50u));

  const Dataset one = random_dataset(1, 3, rng);
  const LogisticObjective f1(ObjectiveSpec::convex(1e-2), one);
  BaselineConfig saga;
  saga.method = BaselineMethod::SAGA;
  saga.lr = 0.2;
  saga.epochs = 10;
  BaselineConfig sgd = saga;
  sgd.method = BaselineMethod::SGD;
  sgd.momentum = 0.0;
  sgd.batch_size = 1;
  CHECK((run_base(f1, saga, x0).final_iterate - run_base(f1, sgd, x0).final_iterate).norm() <= 1e-13);

  BaselineConfig sarah;
  sarah.method = BaselineMethod::SARAH;
  sarah.batch_size = 5;
  sarah.inner_len = 5;
  sarah.lr = 0.3;
  sarah.epochs = 6;
  const Trajectory s = run_base(f, sarah, x0);
  CHECK(s.records.back().grad_norm_sq < s.records.front().grad_norm_sq);
  CHECK(s.counters.component_grad_evals == 6u * (25u + 4u * 10u));

  saga.lr = 0.0;
  CHECK_THROWS_AS(saga.validate(1), std::invalid_argument);
}

TEST_CASE("theorem parameters") {
  const TheoryParams p = theorem_params(1e6, 2.0 / 3.0, 1.0, 1.0, 1.0, 1.0);
  CHECK(p.valid());
  CHECK(p.derived_b == 10000);
  CHECK(p.derived_alpha == doctest::Approx(1.0 / 6.0));
  CHECK(p.S_max == 85);
  CHECK(p.schedule_len == 85);
  CHECK(p.z_value == doctest::Approx(6.0 / 100.0));
  REQUIRE(p.lambda_schedule.size() == 86);
  CHECK(p.lambda_schedule.back() == 0.0);
  for (std::size_t s = 1; s < p.lambda_schedule.size(); ++s) {
    CHECK(p.lambda_schedule[s] < p.lambda_schedule[s - 1]);
  }
  REQUIRE(p.Lambda_schedule.size() == 85);
  CHECK(p.Lambda_min == *std::min_element(p.Lambda_schedule.begin(), p.Lambda_schedule.end()));
  // Independent evaluation of one schedule entry.
  const double a = 1.0 / 6.0, z = 0.06;
  CHECK(p.Lambda_schedule[84] == doctest::Approx(a / 4.0));
  CHECK(p.lambda_schedule[84] == doctest::Approx(a * a * 1.0 * 3.0 / (2.0 * 1e4)));
  CHECK(p.Lambda_schedule[83] == doctest::Approx(a / 4.0 - p.lambda_schedule[84] * (1.0 + 1.0 / (a * z)) * a * a));
  CHECK(p.v0_estimate == doctest::Approx(0.25 - (std::exp(1.0) - 1.0) * 10001.0 / (16.0 * 9.0)));

  const TheoryParams big_alpha = theorem_params(1e6, 2.0 / 3.0, 1.0, 1.0, 0.1, 0.1);
  CHECK_FALSE(big_alpha.valid());
  CHECK(std::find(big_alpha.violations.begin(), big_alpha.violations.end(), "derived alpha outside (0, 1]") !=
        big_alpha.violations.end());

  CHECK_FALSE(theorem_params(1e6, 2.0 / 3.0, 0.0, 1.0, 1.0, 1.0).valid());
  CHECK_FALSE(theorem_params(1e6, 1.5, 1.0, 1.0, 1.0, 1.0).valid());
  CHECK_FALSE(theorem_params(0.0, 0.5, 1.0, 1.0, 1.0, 1.0).valid());
  CHECK_FALSE(theorem_params(1e6, 0.5, 1.0, 1.0, -1.0, 1.0).valid());

  const TheoryParams tiny = theorem_params(4.0, 1.0, 1.0, 1.0, 100.0, 1.0);
  CHECK(tiny.S_max < 1);
  CHECK_FALSE(tiny.valid());

  const TheoryParams capped = theorem_params(1e6, 2.0 / 3.0, 1.0, 1.0, 1.0, 1.0, 10);
  CHECK(capped.schedule_len == 10);
  CHECK(capped.S_max == 85);
}
