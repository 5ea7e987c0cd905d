#pragma once

#include "mlac/graph.hpp"

#include <Eigen/Eigenvalues>

#include <random>

namespace testing {

using namespace mlac;

inline MatrixXd p3_weights() {
  MatrixXd w(3, 3);
  w << 0, 1, 0, 1, 0, 1, 0, 1, 0;
  return w;
}

inline Layer p3_layer(double shift = 0.0) { return build_layer(WeightOperator::dense(p3_weights()), shift); }

/// Symmetric weights with entries in (0.1, 1.1) on a random pattern plus a ring
/// so that no degree vanishes.
inline MatrixXd random_weights(Index n, double density, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  MatrixXd w = MatrixXd::Zero(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j)
      if (u(rng) < density || j == i + 1) w(i, j) = w(j, i) = 0.1 + u(rng);
  return w;
}

inline VectorXd random_vector(Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  VectorXd v(n);
  for (Index i = 0; i < n; ++i) v(i) = g(rng);
  return v;
}

/// I - D^{-1/2} W D^{-1/2} + delta I, assembled from the raw weights.
inline MatrixXd sym_laplacian_of(const MatrixXd& w, double delta = 0.0) {
  const VectorXd d = w.rowwise().sum();
  const VectorXd s = d.cwiseSqrt().cwiseInverse();
  return MatrixXd::Identity(w.rows(), w.rows()) * (1.0 + delta) - s.asDiagonal() * w * s.asDiagonal();
}

/// Matrix function through a symmetric eigendecomposition.
inline MatrixXd sym_power(const MatrixXd& a, double p) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(a);
  const VectorXd lp = es.eigenvalues().array().pow(p).matrix();
  return es.eigenvectors() * lp.asDiagonal() * es.eigenvectors().transpose();
}

/// ((1/T) sum_t (L_t + delta I)^p)^{1/p}
inline MatrixXd power_mean_oracle(const std::vector<MatrixXd>& weights, double p, double delta) {
  const Index n = weights.front().rows();
  MatrixXd m = MatrixXd::Zero(n, n);
  for (const auto& w : weights) m += sym_power(sym_laplacian_of(w, delta), p);
  m /= static_cast<double>(weights.size());
  return sym_power(m, 1.0 / p);
}

}  // namespace testing
