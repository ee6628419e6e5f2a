#pragma once

#include "proxbound/proxgrad.hpp"
#include "proxbound/proxlinear.hpp"

#include <cstdint>
#include <random>

namespace proxbound {

/// Seeded generator whose streams are reproducible across platforms:
/// mt19937_64 words mapped to doubles by explicit formulas (the standard
/// library distributions are implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal by Box-Muller (cosine branch only).
  double normal();

  Vector normal_vector(Eigen::Index n);
  /// Entries drawn in row-major order.
  Matrix normal_matrix(Eigen::Index rows, Eigen::Index cols);

 private:
  std::mt19937_64 engine_;
};

namespace instances {

/// 1/2 ||A x - b||^2 + lambda ||x||_1 with A (rows x cols) and b standard
/// normal, drawn in that order from Rng(seed).
AdditiveProblem lasso(Eigen::Index rows, Eigen::Index cols, double lambda, std::uint64_t seed);

/// The LASSO instance used throughout the acceptance checks: 20 x 10, seed 42, lambda 0.1.
inline AdditiveProblem lasso_seed42() { return lasso(20, 10, 0.1, 42); }

/// Random quadratic map c_i(x) = 1/2 x^T Q_i x + a_i^T x - b_i with Q_i =
/// scale * sym(normal), a_i normal, and b = c_0(x_true) + noise so that
/// h o c measures robust regression residuals. Draw order: a, Q_1..Q_m,
/// x_true, noise.
SmoothMap robust_regression_map(Eigen::Index m, Eigen::Index n, double scale, double noise,
                                std::uint64_t seed);

/// h = |.|_1, c = robust_regression_map(20, 10, 0.1, 0.1, seed 7),
/// g = elasticnet(lambda1=0.1, lambda2=1). The elastic-net curvature keeps the
/// minimizer off a vertex of the residual arrangement, so convergence is
/// linear rather than finite.
CompositeProblem robust_regression_seed7();

}  // namespace instances
}  // namespace proxbound
