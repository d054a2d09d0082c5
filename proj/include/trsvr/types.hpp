#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace trsvr {

using Index = Eigen::Index;

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

// Iterates, gradients and steps all live in R^d.
using Vector = VectorX<double>;
using Matrix = MatrixX<double>;

// Every stochastic component draws from this engine so runs replay per seed.
using Rng = std::mt19937_64;

}  // namespace trsvr
