#include "trsvr/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace trsvr {

namespace {

// Powers like (10^6)^(2/3) land a few ulps off an integer; snap those.
double snapped_pow(double base, double exponent) {
  const double p = std::pow(base, exponent);
  const double r = std::round(p);
  if (r != 0.0 && std::abs(p - r) <= 1e-12 * std::abs(r)) return r;
  return p;
}

bool in_unit_interval(double v) { return v > 0.0 && v <= 1.0; }

}  // namespace

TheoryParams theorem_params(double n, double gamma_exp, double mu0, double mu1, double L,
                            double kappa_H, std::int64_t max_schedule_len) {
  TheoryParams p;
  p.n = n;
  p.gamma_exp = gamma_exp;
  p.mu0 = mu0;
  p.mu1 = mu1;
  p.L = L;
  p.kappa_H = kappa_H;

  if (!(n >= 1.0) || !std::isfinite(n)) p.violations.push_back("N must be >= 1");
  if (!in_unit_interval(gamma_exp)) p.violations.push_back("gamma_exp must lie in (0, 1]");
  if (!in_unit_interval(mu0)) p.violations.push_back("mu0 must lie in (0, 1]");
  if (!in_unit_interval(mu1)) p.violations.push_back("mu1 must lie in (0, 1]");
  if (!(L > 0.0) || !std::isfinite(L)) p.violations.push_back("L must be positive");
  if (!(kappa_H > 0.0) || !std::isfinite(kappa_H)) p.violations.push_back("kappa_H must be positive");
  if (!p.violations.empty()) return p;

  const double n_g = snapped_pow(n, gamma_exp);
  const double n_3g2 = snapped_pow(n, 1.5 * gamma_exp);
  const double n_g2 = snapped_pow(n, 0.5 * gamma_exp);
  const double l2k = L + 2.0 * kappa_H;

  p.derived_b = static_cast<std::int64_t>(std::ceil(mu1 * n_g));
  const double b = static_cast<double>(p.derived_b);
  p.derived_alpha = mu0 * b / (2.0 * l2k * n_g);
  const double s_max = std::floor(n_3g2 / (mu0 * (b + mu0 * L * L * b / (2.0 * l2k))));
  p.S_max = static_cast<std::int64_t>(std::min(s_max, 9.0e18));
  p.z_value = 2.0 * l2k / n_g2;
  p.v0_estimate = 0.25 - mu0 * L * L * (std::exp(1.0) - 1.0) * (mu0 * b + 1.0) / (16.0 * l2k * l2k);
  p.Lambda_min_lower_bound = mu0 * b * p.v0_estimate / (2.0 * (L + kappa_H) * n_g);

  if (!in_unit_interval(p.derived_alpha)) p.violations.push_back("derived alpha outside (0, 1]");
  if (p.S_max < 1) p.violations.push_back("S_max < 1");
  if (static_cast<double>(p.derived_b) > n) p.violations.push_back("derived b exceeds N");

  const double alpha = p.derived_alpha;
  const double z = p.z_value;
  const std::int64_t S = std::clamp<std::int64_t>(p.S_max, 0, max_schedule_len);
  p.schedule_len = S;
  p.lambda_schedule.assign(static_cast<std::size_t>(S + 1), 0.0);
  const double base = alpha * alpha * L * L * l2k / (2.0 * b);
  const double growth = 1.0 + alpha * z + (alpha * alpha + alpha / z) * L * L / b;
  for (std::int64_t s = S - 1; s >= 0; --s) {
    p.lambda_schedule[static_cast<std::size_t>(s)] =
        base + p.lambda_schedule[static_cast<std::size_t>(s + 1)] * growth;
  }
  p.Lambda_schedule.resize(static_cast<std::size_t>(S));
  p.Lambda_min = S > 0 ? std::numeric_limits<double>::infinity() : 0.0;
  for (std::int64_t s = 0; s < S; ++s) {
    const double lam_next = p.lambda_schedule[static_cast<std::size_t>(s + 1)];
    const double v = 0.25 * alpha - lam_next * (1.0 + 1.0 / (alpha * z)) * alpha * alpha;
    p.Lambda_schedule[static_cast<std::size_t>(s)] = v;
    p.Lambda_min = std::min(p.Lambda_min, v);
  }
  return p;
}

}  // namespace trsvr
