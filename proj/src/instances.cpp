#include "proxbound/instances.hpp"

#include <cmath>
#include <numbers>

namespace proxbound {

double Rng::normal() {
  // 1 - u keeps the logarithm finite.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Vector Rng::normal_vector(Eigen::Index n) {
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = normal();
  return v;
}

Matrix Rng::normal_matrix(Eigen::Index rows, Eigen::Index cols) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = normal();
  }
  return m;
}

namespace instances {

AdditiveProblem lasso(Eigen::Index rows, Eigen::Index cols, double lambda, std::uint64_t seed) {
  Rng rng(seed);
  Matrix A = rng.normal_matrix(rows, cols);
  Vector b = rng.normal_vector(rows);
  return AdditiveProblem(SmoothFunction::quadratic(std::move(A), std::move(b)),
                         SeparablePenalty::abs_value(lambda));
}

SmoothMap robust_regression_map(Eigen::Index m, Eigen::Index n, double scale, double noise,
                                std::uint64_t seed) {
  Rng rng(seed);
  Matrix a = rng.normal_matrix(m, n);
  std::vector<Matrix> Q;
  Q.reserve(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) {
    Matrix G = rng.normal_matrix(n, n);
    Q.push_back(scale * 0.5 * (G + G.transpose()));
  }
  const Vector x_true = rng.normal_vector(n);
  const Vector e = noise * rng.normal_vector(m);
  Vector b = a * x_true + e;
  for (Eigen::Index i = 0; i < m; ++i) {
    b[i] += 0.5 * x_true.dot(Q[static_cast<std::size_t>(i)] * x_true);
  }
  return SmoothMap::quadratic_map(std::move(Q), std::move(a), -b);
}

CompositeProblem robust_regression_seed7() {
  return CompositeProblem(SeparablePenalty::elastic_net(0.1, 1.0), SeparablePenalty::abs_value(1.0),
                          robust_regression_map(20, 10, 0.1, 0.1, 7));
}

}  // namespace instances
}  // namespace proxbound
