#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>

namespace proxbound {

/// Iterates, gradients and subgradients all live in dense coordinate vectors.
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Round-trip text for a double (17 significant digits).
std::string format_real(double v);

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  DimensionError(const std::string& what, std::ptrdiff_t expected, std::ptrdiff_t got)
      : Error(what + ": expected dimension " + std::to_string(expected) + ", got " +
              std::to_string(got)) {}
};

/// A point lies outside the effective domain of a penalty.
class DomainError : public Error {
 public:
  using Error::Error;
};

class UnsupportedError : public Error {
 public:
  using Error::Error;
};

/// An iterative routine hit its iteration cap (or step underflow) before
/// reaching the requested accuracy.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : Error(what + " (residual " + format_real(residual) + ")"), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

inline void require_dim(const char* what, std::ptrdiff_t expected, std::ptrdiff_t got) {
  if (expected != got) throw DimensionError(what, expected, got);
}

inline bool all_finite(const Vector& v) { return v.allFinite(); }

/// Largest eigenvalue of a symmetric positive semidefinite matrix by power
/// iteration. Deterministic start vector.
double power_iteration_psd(const Matrix& m, double rel_tol = 1e-12, int max_iter = 100000);

/// Spectral norm of an arbitrary matrix, ||M||_2.
double spectral_norm(const Matrix& m);

}  // namespace proxbound
