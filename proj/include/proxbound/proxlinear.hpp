#pragma once

#include "proxbound/penalty.hpp"
#include "proxbound/smooth.hpp"
#include "proxbound/trace.hpp"

#include <optional>

namespace proxbound {

/// phi = g + h o c with g separable convex, h finite convex and L-Lipschitz,
/// and c smooth with beta-Lipschitz Jacobian.
struct CompositeProblem {
  /// L is derived from h (Euclidean), beta from c.
  CompositeProblem(SeparablePenalty g, SeparablePenalty h, SmoothMap c);

  SeparablePenalty g;
  SeparablePenalty h;
  SmoothMap c;
  double L;
  double beta;
  /// Set when h o c is the identity applied to a scalar smooth f on the
  /// region of interest (the additive case written in composite form); rows
  /// then also carry the sharper (1 + beta t) certificate.
  bool additive_form = false;

  Eigen::Index dim() const { return c.in_dim(); }
  double phi(const Vector& x) const;
};

struct SigmaPolicy {
  enum class Kind { Fixed, Adaptive };
  Kind kind = Kind::Adaptive;
  double sigma = 0.0;

  static SigmaPolicy adaptive() { return {}; }
  static SigmaPolicy fixed(double sigma) { return {Kind::Fixed, sigma}; }
  double value(double t) const { return kind == Kind::Adaptive ? t : sigma; }
};

struct ProxLinearConfig {
  /// Defaults to 1/(L beta), or 1 when L beta = 0.
  std::optional<double> t0;
  double q = 0.5;
  double eps = 1e-8;
  int max_iter = 10000;
  double inner_tol = 1e-12;
  SigmaPolicy sigma = SigmaPolicy::adaptive();
  bool keep_iterates = false;
  bool timing = false;

  /// Throws InvalidArgument naming the first violated constraint.
  void validate() const;
};

/// phi(x; y) = g(y) + h(c(x) + grad c(x) (y - x))
double linearized_value(const CompositeProblem& p, const Vector& x, const Vector& y);

struct SubproblemSolution {
  Vector y;
  /// Dual multiplier w in dom h*, usable as a warm start.
  Vector w;
  double residual = 0.0;
  int iterations = 0;
};

/// Minimizes phi(x; y) + ||y - x||^2 / (2t) over y through its dual
///   max_{w in dom h*}  <w, c(x) - J x> - h*(w) + min_y { g(y) + <J^T w, y> + ||y - x||^2/(2t) }
/// by proximal gradient ascent on w (step 1/(t ||J||^2 + 1)). The primal
/// point is recovered as y = prox_{tg}(x - t J^T w); iteration stops when the
/// norm of the dual prox-gradient map falls to inner_tol. Throws
/// ConvergenceError after 10^6 iterations.
SubproblemSolution solve_subproblem_detailed(const CompositeProblem& p, const Vector& x, double t,
                                             double inner_tol,
                                             const Vector* warm_start = nullptr);

Vector solve_subproblem(const CompositeProblem& p, const Vector& x, double t, double inner_tol);

/// G_t(x) = (x - x^t) / t
Vector prox_linear_map(const CompositeProblem& p, const Vector& x, double t, double inner_tol);

struct NearStationarity {
  /// (3 L beta t + 2) ||G_t(x)||
  double bound = 0.0;
  /// (1 + beta t) ||G_t(x)||, additive form only.
  std::optional<double> sharp;
};

NearStationarity near_stationarity_certificate(const CompositeProblem& p, double gnorm, double t);

/// Prox-linear method with backtracking: shrink t by q until
///   phi(x^t) <= phi(x) - (sigma / 2) ||G_t(x)||^2,
/// then step to x^t. t is never increased between iterations.
IterationTrace run_prox_linear(const CompositeProblem& p, const Vector& x0,
                               const ProxLinearConfig& cfg);

}  // namespace proxbound
