#pragma once

#include "proxbound/core.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace proxbound {

namespace smooth {

/// 1/2 ||A x - b||^2
struct Quadratic {
  Matrix A;
  Vector b;
};

/// sum_i log(1 + exp(-b_i (A x)_i)), labels b_i (typically +-1).
struct Logistic {
  Matrix A;
  Vector b;
};

/// sum_i max(|x_i| - 1, 0)^2. Minimized exactly on the box [-1, 1]^n.
struct Corridor {
  Eigen::Index dim;
};

/// sum_i huber_mu((A x - b)_i), huber_mu the Moreau envelope of |.|.
struct HuberLoss {
  Matrix A;
  Vector b;
  double mu;
};

/// <a, x> + c0
struct Linear {
  Vector a;
  double c0;
};

/// sum_i max(|(A x - b)_i| - 1, 0)^2
struct CorridorAffine {
  Matrix A;
  Vector b;
};

/// sum_i cos((A x - b)_i). Smooth and nonconvex.
struct CosineSum {
  Matrix A;
  Vector b;
};

using FunctionKind =
    std::variant<Quadratic, Logistic, Corridor, HuberLoss, Linear, CorridorAffine, CosineSum>;

/// c(x) = A x + b
struct Affine {
  Matrix A;
  Vector b;
};

/// c_i(x) = 1/2 x^T Q_i x + a_i^T x + b_i, with Q_i symmetric.
struct QuadraticMap {
  std::vector<Matrix> Q;
  Matrix a;  // m x n, row i is a_i^T
  Vector b;
};

using MapKind = std::variant<Affine, QuadraticMap>;

}  // namespace smooth

/// A C^1 function with beta-Lipschitz gradient. Immutable after
/// construction; beta is derived analytically from the data unless declared.
class SmoothFunction {
 public:
  explicit SmoothFunction(smooth::FunctionKind kind);

  static SmoothFunction quadratic(Matrix A, Vector b) {
    return SmoothFunction(smooth::Quadratic{std::move(A), std::move(b)});
  }
  static SmoothFunction logistic(Matrix A, Vector b) {
    return SmoothFunction(smooth::Logistic{std::move(A), std::move(b)});
  }
  static SmoothFunction corridor(Eigen::Index dim) { return SmoothFunction(smooth::Corridor{dim}); }
  static SmoothFunction huber_loss(Matrix A, Vector b, double mu) {
    return SmoothFunction(smooth::HuberLoss{std::move(A), std::move(b), mu});
  }
  static SmoothFunction linear(Vector a, double c0) {
    return SmoothFunction(smooth::Linear{std::move(a), c0});
  }
  static SmoothFunction corridor_affine(Matrix A, Vector b) {
    return SmoothFunction(smooth::CorridorAffine{std::move(A), std::move(b)});
  }
  static SmoothFunction cosine_sum(Matrix A, Vector b) {
    return SmoothFunction(smooth::CosineSum{std::move(A), std::move(b)});
  }

  /// Same function with a declared gradient Lipschitz constant in place of
  /// the derived one (which may make it wrong).
  SmoothFunction with_beta(double beta) const;

  const smooth::FunctionKind& kind() const { return kind_; }
  std::string name() const;
  Eigen::Index dim() const { return dim_; }
  double beta() const { return beta_; }
  /// True for every kind except CosineSum.
  bool convex() const;

  double eval(const Vector& x) const;
  Vector grad(const Vector& x) const;

 private:
  smooth::FunctionKind kind_;
  Eigen::Index dim_ = 0;
  double beta_ = 0.0;
};

/// A C^1 map R^n -> R^m whose Jacobian is jac_beta-Lipschitz in operator norm.
class SmoothMap {
 public:
  explicit SmoothMap(smooth::MapKind kind);

  static SmoothMap affine(Matrix A, Vector b) {
    return SmoothMap(smooth::Affine{std::move(A), std::move(b)});
  }
  static SmoothMap quadratic_map(std::vector<Matrix> Q, Matrix a, Vector b) {
    return SmoothMap(smooth::QuadraticMap{std::move(Q), std::move(a), std::move(b)});
  }

  const smooth::MapKind& kind() const { return kind_; }
  std::string name() const;
  Eigen::Index in_dim() const { return n_; }
  Eigen::Index out_dim() const { return m_; }
  /// 0 for Affine; sqrt(sum_i ||Q_i||_2^2) for QuadraticMap.
  double jac_beta() const { return jac_beta_; }

  Vector eval(const Vector& x) const;
  Matrix jacobian(const Vector& x) const;
  std::pair<Vector, Matrix> eval_jac(const Vector& x) const { return {eval(x), jacobian(x)}; }

 private:
  smooth::MapKind kind_;
  Eigen::Index n_ = 0;
  Eigen::Index m_ = 0;
  double jac_beta_ = 0.0;
};

/// max_i |analytic_i - central_difference_i| / (1 + |analytic_i|).
double fd_check(const SmoothFunction& f, const Vector& x, double h);
/// Same measure over all Jacobian entries.
double fd_check(const SmoothMap& c, const Vector& x, double h);

/// Plain-text dense matrix: first line "rows cols", then row-major reals.
Matrix load_matrix(const std::filesystem::path& path);
/// A matrix file with one row or one column.
Vector load_vector(const std::filesystem::path& path);
void save_matrix(const std::filesystem::path& path, const Matrix& m);

}  // namespace proxbound
