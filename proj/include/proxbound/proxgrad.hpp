#pragma once

#include "proxbound/penalty.hpp"
#include "proxbound/smooth.hpp"
#include "proxbound/trace.hpp"

#include <optional>

namespace proxbound {

/// phi = f + g with f smooth (beta-Lipschitz gradient) and g separable convex.
struct AdditiveProblem {
  AdditiveProblem(SmoothFunction f, SeparablePenalty g);
  /// `f_convex` may only be set for a convex kind of f.
  AdditiveProblem(SmoothFunction f, SeparablePenalty g, bool f_convex);

  SmoothFunction f;
  SeparablePenalty g;
  bool f_convex;

  Eigen::Index dim() const { return f.dim(); }
  double beta() const { return f.beta(); }
  double phi(const Vector& x) const;
};

struct ProxGradConfig {
  /// Defaults to 1/beta; larger values are clamped to 1/beta with a warning.
  std::optional<double> t;
  int max_iter = 10000;
  double eps = 1e-8;
  /// Measure dist(0, d phi(x_{k+1})) at every step alongside the bound.
  bool record_certificates = true;
  bool keep_iterates = false;
  bool timing = false;
};

/// Step length a run with `cfg` uses; appends a warning when it clamps.
double resolve_step(const AdditiveProblem& p, const ProxGradConfig& cfg,
                    std::vector<std::string>* warnings = nullptr);

/// G_t(x) = (x - prox_{tg}(x - t grad f(x))) / t.
Vector prox_grad_map(const AdditiveProblem& p, const Vector& x, double t);

/// dist(0, grad f(x) + dg(x)), exact by per-coordinate interval projection.
double additive_stationarity(const AdditiveProblem& p, const Vector& x);

/// Iterates x_{k+1} = prox_{tg}(x_k - t grad f(x_k)) until ||G_t(x_k)|| <= eps.
///
/// Each step records the decrease slack
///   phi(x_k) - phi(x_{k+1}) - (t/2)(2 - beta t) ||G_t(x_k)||^2,
/// which reduces to the familiar ||G||^2 / (2 beta) margin at t = 1/beta, and
/// the improved near-stationarity bound (1 + beta t) ||G_t(x_k)|| on
/// dist(0, d phi(x_{k+1})).
IterationTrace run_prox_gradient(const AdditiveProblem& p, const Vector& x0,
                                 const ProxGradConfig& cfg);

/// prox_{t phi}(x) for convex phi, computed by prox-gradient on
/// y -> f(y) + ||y - x||^2 / (2t) plus g with step 1/(beta + 1/t), until the
/// inner prox-gradient map has norm <= inner_tol.
Vector proximal_point_step(const AdditiveProblem& p, const Vector& x, double t,
                           double inner_tol = 1e-10);

/// The proximal point algorithm z_{k+1} = prox_{t phi}(z_k). Rows carry
/// gnorm = ||z_k - z_{k+1}|| / t, which bounds dist(0, d phi(z_{k+1})).
IterationTrace run_proximal_point(const AdditiveProblem& p, const Vector& x0, double t,
                                  const ProxGradConfig& cfg, double inner_tol = 1e-10);

}  // namespace proxbound
