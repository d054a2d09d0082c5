#include "trsvr/synthetic.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/QR>

#include "trsvr/objective.hpp"

namespace trsvr {

Matrix random_orthogonal(Index dim, Rng& rng) {
  std::normal_distribution<double> normal;
  Matrix g(dim, dim);
  for (Index j = 0; j < dim; ++j) {
    for (Index i = 0; i < dim; ++i) g(i, j) = normal(rng);
  }
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(dim, dim);
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index j = 0; j < dim; ++j) {
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  return q;
}

SyntheticProblem generate_synthetic(const SyntheticParams& params) {
  const Index n = params.samples;
  const Index d = params.dim;
  if (d < 2 || n < d) throw std::invalid_argument("synthetic data needs samples >= dim >= 2");
  if (!(params.condition_number >= 1.0) || !std::isfinite(params.condition_number)) {
    throw std::invalid_argument("condition number must be >= 1");
  }

  Rng rng(params.seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> uniform;

  const Matrix q = random_orthogonal(d, rng);
  Vector spectrum(d);
  const double log_kappa = std::log(params.condition_number);
  for (Index j = 0; j < d; ++j) {
    spectrum[j] = std::exp(log_kappa * static_cast<double>(j) / static_cast<double>(d - 1));
  }
  if (params.unit_mean_spectrum) spectrum /= spectrum.mean();
  const Vector scale = spectrum.cwiseSqrt();
  const Matrix factor = q * scale.asDiagonal();

  Vector truth(d);
  for (Index j = 0; j < d; ++j) truth[j] = normal(rng);

  Matrix features(n, d);
  Vector labels(n);
  Vector z(d);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < d; ++j) z[j] = normal(rng);
    features.row(i) = (factor * z).transpose();
    const double p = sigmoid(features.row(i).dot(truth));
    labels[i] = uniform(rng) < p ? 1.0 : -1.0;
  }
  return {make_dense_dataset(features, labels), truth};
}

}  // namespace trsvr
