#pragma once

#include <cstdint>

#include "trsvr/dataset.hpp"

namespace trsvr {

struct SyntheticParams {
  Index samples = 8000;
  Index dim = 32;
  double condition_number = 1e4;
  std::uint64_t seed = 0;
  /// Rescale the spectrum to mean eigenvalue 1 (trace = dim). The ratio
  /// s_max / s_min stays condition_number either way.
  bool unit_mean_spectrum = true;

  bool operator==(const SyntheticParams&) const = default;
};

struct SyntheticProblem {
  Dataset data;
  Vector ground_truth;
};

/// Ill-conditioned logistic data. Rows are zero-mean Gaussian with covariance
/// Q diag(s) Q^T, s log-spaced on [1, condition_number] (optionally rescaled
/// to unit mean), Q a seeded random orthogonal matrix. Labels are +1 with probability sigmoid(x_i^T w*),
/// w* ~ N(0, I). Deterministic per seed.
SyntheticProblem generate_synthetic(const SyntheticParams& params);

/// Haar-distributed orthogonal matrix (QR of a Gaussian matrix, sign-fixed).
Matrix random_orthogonal(Index dim, Rng& rng);

}  // namespace trsvr
