#pragma once

#include "proxbound/core.hpp"

#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace proxbound {

/// Closed interval of the extended real line; ends may be infinite.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double v, double tol = 0.0) const { return v >= lo - tol && v <= hi + tol; }
  /// Euclidean projection of v onto the interval.
  double project(double v) const { return v < lo ? lo : (v > hi ? hi : v); }
  double distance(double v) const { return v < lo ? lo - v : (v > hi ? v - hi : 0.0); }
};

namespace penalty {

// Scalar members of the catalog. Each acts on one coordinate; `w` is the
// coordinate weight, which scales the penalty's multiplier(s).

struct Zero {
  double value(double, double) const { return 0.0; }
  double prox(double x, double, double) const { return x; }
  Interval subgradient(double, double) const { return {0.0, 0.0}; }
};

/// lambda * |x|
struct AbsValue {
  double lambda;
  double value(double x, double w) const;
  double prox(double x, double t, double w) const;
  Interval subgradient(double x, double w) const;
};

/// lambda1 * |x| + (lambda2 / 2) * x^2
struct ElasticNet {
  double lambda1;
  double lambda2;
  double value(double x, double w) const;
  double prox(double x, double t, double w) const;
  Interval subgradient(double x, double w) const;
};

/// Indicator of [lo, hi]: 0 inside, +inf outside. Weights are ignored.
struct BoxIndicator {
  double lo;
  double hi;
  double value(double x, double w) const;
  double prox(double x, double t, double w) const;
  Interval subgradient(double x, double w) const;
};

/// lambda * max(|x| - epsilon, 0), the vapnik loss.
struct EpsilonInsensitive {
  double lambda;
  double epsilon;
  double value(double x, double w) const;
  double prox(double x, double t, double w) const;
  Interval subgradient(double x, double w) const;
};

/// lambda * (tau * max(x, 0) + (1 - tau) * max(-x, 0)), the quantile loss.
struct CheckFunction {
  double lambda;
  double tau;
  double value(double x, double w) const;
  double prox(double x, double t, double w) const;
  Interval subgradient(double x, double w) const;
};

/// Moreau envelope of lambda * |.| with parameter mu:
///   x^2 / (2 mu)               if |x| <= lambda mu
///   lambda |x| - lambda^2 mu/2 otherwise.
/// Differentiable everywhere with derivative clamp(x / mu, -lambda, lambda).
struct HuberEnvelope {
  double lambda;
  double mu;
  double value(double x, double w) const;
  double derivative(double x, double w) const;
  /// Solves derivative(y) + (y - x) / t = 0 by Newton's method on the
  /// monotone piecewise-linear left-hand side.
  double prox(double x, double t, double w) const;
  Interval subgradient(double x, double w) const;
};

using Kind = std::variant<Zero, AbsValue, ElasticNet, BoxIndicator, EpsilonInsensitive,
                          CheckFunction, HuberEnvelope>;

}  // namespace penalty

/// A separable closed convex penalty g(x) = sum_i g_i(x_i). Immutable.
class SeparablePenalty {
 public:
  explicit SeparablePenalty(penalty::Kind kind, Vector weights = Vector());

  static SeparablePenalty zero() { return SeparablePenalty(penalty::Zero{}); }
  static SeparablePenalty abs_value(double lambda) {
    return SeparablePenalty(penalty::AbsValue{lambda});
  }
  static SeparablePenalty elastic_net(double l1, double l2) {
    return SeparablePenalty(penalty::ElasticNet{l1, l2});
  }
  static SeparablePenalty box(double lo, double hi) {
    return SeparablePenalty(penalty::BoxIndicator{lo, hi});
  }
  static SeparablePenalty epsilon_insensitive(double lambda, double eps) {
    return SeparablePenalty(penalty::EpsilonInsensitive{lambda, eps});
  }
  static SeparablePenalty check(double lambda, double tau) {
    return SeparablePenalty(penalty::CheckFunction{lambda, tau});
  }
  static SeparablePenalty huber_envelope(double lambda, double mu) {
    return SeparablePenalty(penalty::HuberEnvelope{lambda, mu});
  }

  /// Parses `kind(param=value,...)`, e.g. `absvalue(lambda=0.1)`, `box(lo=-1,hi=1)`.
  static SeparablePenalty parse(std::string_view spec);

  const penalty::Kind& kind() const { return kind_; }
  std::string name() const;
  /// Canonical spec string; parse(describe()) reproduces the penalty.
  std::string describe() const;

  /// Empty when all weights are 1; otherwise must match the dimension.
  const Vector& weights() const { return weights_; }
  double weight(Eigen::Index i) const { return weights_.size() == 0 ? 1.0 : weights_[i]; }

  bool is_indicator() const { return std::holds_alternative<penalty::BoxIndicator>(kind_); }
  bool is_finite_valued() const { return !is_indicator(); }

  /// Sum of g_i(x_i); +inf exactly when x leaves the domain.
  double eval(const Vector& x) const;
  bool in_domain(const Vector& x) const;
  Vector prox(const Vector& x, double t) const;
  /// Coordinatewise subdifferential. Throws DomainError outside dom g.
  std::vector<Interval> subgradient_intervals(const Vector& x) const;

  double moreau_envelope(const Vector& x, double t) const;
  Vector moreau_grad(const Vector& x, double t) const;

  bool has_conjugate_prox() const;
  /// prox_{s g*}(z), for kinds with an implemented conjugate.
  Vector conjugate_prox(const Vector& z, double s) const;
  /// || prox_{tg}(x) + t prox_{g*/t}(x/t) - x ||.
  double moreau_decomposition_residual(const Vector& x, double t) const;

  /// Per-coordinate box dom g* = [lo_i, hi_i] together with the smooth and
  /// absolute-value parts of g* on it, for the finite-valued outer kinds of a
  /// composite problem: g*_i(w) = eps_i |w| + (mu_i / 2) w^2 on [lo_i, hi_i].
  struct ConjugateModel {
    Vector lo, hi, abs_coef, quad_coef;
  };
  ConjugateModel conjugate_model(Eigen::Index dim) const;

  /// Euclidean Lipschitz constant of g on R^dim (max norm of a subgradient).
  double lipschitz_constant(Eigen::Index dim) const;

 private:
  void check_dim(const Vector& x) const;

  penalty::Kind kind_;
  Vector weights_;
};

/// Soft-thresholding: sign(x) max(|x| - tau, 0). Ties |x| == tau go to 0.
inline double soft_threshold(double x, double tau) {
  if (x > tau) return x - tau;
  if (x < -tau) return x + tau;
  return 0.0;
}

}  // namespace proxbound
