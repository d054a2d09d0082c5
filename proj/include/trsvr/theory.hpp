#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace trsvr {

/// Parameter choices of the convergence theorem for a given problem size.
/// gamma_exp is the batch-size exponent (b ~ N^gamma_exp), unrelated to the
/// double-well coefficient of the nonconvex objective.
struct TheoryParams {
  double n = 0;
  double gamma_exp = 0;
  double mu0 = 0;
  double mu1 = 0;
  double L = 0;
  double kappa_H = 0;

  std::int64_t derived_b = 0;
  double derived_alpha = 0;
  std::int64_t S_max = 0;
  double z_value = 0;
  /// lambda_schedule[s] = lambda_s for s = 0..S, with lambda_S = 0.
  std::vector<double> lambda_schedule;
  /// Lambda_s = alpha/4 - lambda_{s+1}(1 + 1/(alpha z)) alpha^2 for s = 0..S-1.
  std::vector<double> Lambda_schedule;
  double Lambda_min = 0;
  /// mu0 b v0 / (2 (L + kappa_H) N^gamma_exp)
  double Lambda_min_lower_bound = 0;
  double v0_estimate = 0;
  /// S used for the schedules: S_max, capped at the requested length.
  std::int64_t schedule_len = 0;

  /// Hypotheses of the theorem that the inputs violate; empty when valid.
  std::vector<std::string> violations;
  bool valid() const { return violations.empty(); }
};

/// b = ceil(mu1 N^g), alpha = mu0 b / (2 (L + 2 kappa_H) N^g),
/// S_max = floor(N^{3g/2} / (mu0 (b + mu0 L^2 b / (2 (L + 2 kappa_H))))),
/// z = 2 (L + 2 kappa_H) / N^{g/2}, and the backward lambda recursion.
/// Invalid inputs are reported in `violations`, never clipped.
TheoryParams theorem_params(double n, double gamma_exp, double mu0, double mu1, double L,
                            double kappa_H, std::int64_t max_schedule_len = 1'000'000);

}  // namespace trsvr
