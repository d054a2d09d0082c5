#pragma once

#include <limits>
#include <string>

#include "trsvr/hessian.hpp"
#include "trsvr/trajectory.hpp"

namespace trsvr {

enum class BaselineMethod { SGD, Adam, SVRG, SAGA, SARAH, ClassicTR, TRish };

std::string to_string(BaselineMethod method);
BaselineMethod baseline_method_from_string(const std::string& name);

/// Settings for every comparison method; each method reads its own fields.
///
/// Epoch semantics: SVRG and SARAH count outer loops of `inner_len` steps,
/// ClassicTR counts iterations, and the single-loop methods (SGD, Adam, SAGA,
/// TRish) count ceil(N / b) steps per epoch.
struct BaselineConfig {
  BaselineMethod method = BaselineMethod::SVRG;
  double lr = 1e-2;
  double momentum = 0.9;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_adam = 1e-8;
  /// Classic TR initial radius; delta_max <= 0 means 10 * delta0.
  double delta0 = 1.0;
  double delta_max = 0.0;
  double eta_accept = 1e-4;
  /// TRish radius scale and zone factors (gamma1 > gamma2 > 0).
  double alpha = 0.1;
  double gamma1 = 4.91;
  double gamma2 = 0.03;
  Index batch_size = 1;
  Index inner_len = 100;
  HessianMode hessian = HessianMode::EstH;
  int cg_max_iters = 500;
  FdStepRule fd;
  Index epochs = 10;
  std::uint64_t seed = 0;
  Index record_every = 0;
  /// Classic TR stops once |grad f|^2 <= grad_norm_sq_tol.
  double grad_norm_sq_tol = 0.0;
  double max_passes = std::numeric_limits<double>::infinity();

  void validate(Index n) const;
  bool operator==(const BaselineConfig&) const = default;
};

/// v <- momentum v + g~, x <- x - lr v
Trajectory sgd_momentum_run(const FiniteSum& f, const BaselineConfig& config, const Vector& x0,
                            Recorder& recorder);

/// Bias-corrected Adam.
Trajectory adam_run(const FiniteSum& f, const BaselineConfig& config, const Vector& x0,
                    Recorder& recorder);

/// Deterministic trust region: full gradient, Steihaug-CG step, ratio test.
Trajectory classic_tr_run(const FiniteSum& f, const BaselineConfig& config, const Vector& x0,
                          Recorder& recorder);

/// Three-zone radius rule of the fully stochastic trust-region method.
/// Zone boundaries belong to the middle zone.
double trish_radius(double alpha, double gamma1, double gamma2, double g_norm);

/// Fully stochastic trust region: no acceptance test, radius from trish_radius.
Trajectory trish_run(const FiniteSum& f, const BaselineConfig& config, const Vector& x0,
                     Recorder& recorder);

/// x <- x - lr * estimate with SVRG / SAGA / SARAH estimators.
Trajectory vr_descent_run(const FiniteSum& f, const BaselineConfig& config, const Vector& x0,
                          Recorder& recorder);

/// Dispatches on config.method.
Trajectory run_baseline(const FiniteSum& f, const BaselineConfig& config, const Vector& x0,
                        Recorder& recorder);

}  // namespace trsvr
