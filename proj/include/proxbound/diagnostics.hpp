#pragma once

#include "proxbound/proxgrad.hpp"
#include "proxbound/proxlinear.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace proxbound {

class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

/// The minimizing set S and optimal value phi* of a problem instance.
struct ReferenceSolution {
  /// S is the box [lo, hi], known in closed form.
  struct AnalyticBox {
    Vector lo;
    Vector hi;
  };
  /// S is (taken to be) the single point x_star, with ||G_t(x_star)|| <= accuracy.
  struct Computed {
    Vector x_star;
    double accuracy;
  };

  std::variant<AnalyticBox, Computed> set;
  double phi_star = 0.0;

  static ReferenceSolution analytic_box(Vector lo, Vector hi, double phi_star);
  static ReferenceSolution computed(Vector x_star, double phi_star, double accuracy);

  /// dist(x, S). For a computed reference this is ||x - x*||, an upper bound
  /// on the true distance when S is not a singleton.
  double distance(const Vector& x) const;
  /// Nearest point of S to x.
  Vector nearest(const Vector& x) const;
  Vector center() const;
  /// max |s_i| over the box corners, or ||x*||_inf.
  double sup_norm() const;
};

/// Final iterate of a prox-gradient run to ||G_t|| <= accuracy (t = 1/beta).
ReferenceSolution compute_reference(const AdditiveProblem& p, const Vector& x0,
                                    double accuracy = 1e-12, int max_iter = 1000000);
/// Final iterate of a prox-linear run with eps = accuracy. The recorded
/// accuracy is the achieved ||G_t|| at that point.
ReferenceSolution compute_reference(const CompositeProblem& p, const Vector& x0,
                                    ProxLinearConfig cfg, double accuracy = 1e-12);

/// dist(0, grad f(x) + dg(x)), exact.
double dist_to_stationarity(const AdditiveProblem& p, const Vector& x);
/// min ||v + J^T w|| over v in dg(x), w in dh(c(x)). Solved by projected
/// gradient over w with v eliminated in closed form; returns the achieved
/// norm, an upper bound on the distance that is exact at convergence.
double dist_to_stationarity(const CompositeProblem& p, const Vector& x);

struct SamplingOptions {
  std::size_t n_samples = 10000;
  std::uint64_t seed = 0;
  /// Half-width of the sampling box; default 5 (1 + sup_norm(S)).
  std::optional<double> radius;
  /// Tilt v: samples and growth refer to phi - <v, .> (estimate_alpha only).
  Vector tilt;
  /// measure_constants: number of samples with the largest dist / ||G_t||
  /// used as starting points of a local ascent on that ratio. The points it
  /// reaches join the sample set, so every estimate still refers to one set.
  std::size_t refine_starts = 32;
};

struct SublevelSample {
  Vector x;
  double phi;  // tilted value when a tilt is set
  double dist;
};

/// Uniform draws from the box around S, kept when phi <= phi* + nu. A draw
/// that fails is pulled halfway toward the center, repeatedly, until it lies
/// in the sublevel set; this keeps acceptance usable when the sublevel set is
/// a thin sliver of the box.
std::vector<SublevelSample> draw_sublevel_samples(const AdditiveProblem& p,
                                                  const ReferenceSolution& ref, double nu,
                                                  const SamplingOptions& opts);

/// min over samples of 2 (phi(x) - phi*) / dist^2(x, S).
double estimate_alpha(const AdditiveProblem& p, const ReferenceSolution& ref, double nu,
                      const SamplingOptions& opts);
/// max over samples of dist(x, S) / ||G_t(x)||.
double estimate_gamma(const AdditiveProblem& p, const ReferenceSolution& ref, double nu, double t,
                      const SamplingOptions& opts);

struct ConstantsReport {
  double alpha_hat = 0.0;
  double gamma_hat = 0.0;
  /// max dist(x, S) / dist(0, d phi(x))
  double L_hat_sub = 0.0;
  /// max dist(x, S) / ||(x - prox_{t phi}(x)) / t||
  double L_hat_prox = 0.0;
  double nu = 0.0;
  double t = 0.0;
  double beta = 0.0;
  std::size_t sample_count = 0;
  /// Proximal points prox_{t phi}(x) of the samples; they join the alpha and
  /// L_hat_sub estimates.
  std::size_t companion_count = 0;
  /// Points added by the local ascent on dist / ||G_t||.
  std::size_t refined_count = 0;
  /// min over samples of dist(0, d phi(x)) - ||G_t(x)||
  double easy_bound_slack = 0.0;
  /// min over samples of ||prox step|| / t - (1 - beta t) ||G_t(x)||
  double sandwich_lower_slack = 0.0;
  /// min over samples of (1 + beta t) ||G_t(x)|| - ||prox step|| / t
  double sandwich_upper_slack = 0.0;

  std::string to_key_value() const;
  static std::string csv_header();
  std::string csv_row() const;
};

/// Growth, error-bound and subdifferential constants of a convex additive
/// problem measured on one sample set.
ConstantsReport measure_constants(const AdditiveProblem& p, const ReferenceSolution& ref, double nu,
                                  double t, const SamplingOptions& opts, double inner_tol = 1e-10);

struct RelationCheck {
  std::string name;
  double measured = 0.0;
  double bound = 0.0;
  bool pass = false;
  /// Positive when the relation holds, in the units of `measured`.
  double slack = 0.0;
};

struct RelationReport {
  RelationCheck gamma_from_alpha;    // gamma <= (2/alpha + t)(1 + beta t)
  RelationCheck L_from_alpha;        // L <= 2 / alpha
  RelationCheck L_hat_from_L;        // L_hat <= L + t
  RelationCheck alpha_from_gamma;    // alpha >= 1 / gamma
  bool all_pass() const;
  std::vector<RelationCheck> checks() const;
};

/// Multiplicative tolerance `tol` on every relation.
RelationReport verify_constant_relations(double alpha, double gamma, double L, double L_hat,
                                         double t, double beta, double tol = 1e-3);

inline double gamma_from_alpha_bound(double alpha, double t, double beta) {
  return (2.0 / alpha + t) * (1.0 + beta * t);
}

struct SandwichPoint {
  double lower_slack;  // step - (1 - beta t) ||G_t||
  double step_norm;    // ||x - prox_{t phi}(x)|| / t
  double upper_slack;  // (1 + beta t) ||G_t|| - step
  double gnorm;
};

std::vector<SandwichPoint> verify_sandwich(const AdditiveProblem& p, double t,
                                           const std::vector<Vector>& points,
                                           double inner_tol = 1e-10);

/// beta / (2 nu) dist0^2 + 2 beta gamma ln(gap0 / eps); 0 when gap0 <= eps.
/// nu = +inf drops the first term.
double iteration_bound(double beta, double nu, double gamma, double dist0_sq, double gap0,
                       double eps);

/// exp of the least-squares slope of ln(phi_k - phi*) over the trailing
/// `tail_fraction` of the iterations whose gap exceeds 1e-14. Throws
/// InsufficientDataError with fewer than 10 such iterations or when the fit
/// shows no decrease.
double fit_tail_rate(const std::vector<double>& phi, double phi_star, double tail_fraction);
double fit_tail_rate(const IterationTrace& trace, double phi_star, double tail_fraction);

/// Per-step slack rate_k (phi_k - phi*) - (phi_{k+1} - phi*) of the convex
/// prox-gradient geometric decrease with gamma_k = dist(x_k, S) / ||G_t(x_k)||
/// and rate_k = 1 - c / (c + gamma_k - t/2), c = (t/2)(2 - beta t); at
/// t = 1/beta, rate_k = 1 - 1/(2 beta gamma_k). Needs trace iterates.
std::vector<double> additive_decrease_slacks(const AdditiveProblem& p, const IterationTrace& trace,
                                             const ReferenceSolution& ref);

/// Prox-linear counterpart: gamma_k = max(1, ||x_k - x*|| / ||G_t(x_k)||),
/// K = (1 + L beta / 2) gamma_k^2 + (t/2)(L beta t - 2), rate_k = 1 - sigma / (sigma + 2K),
/// which is 1 - 1/(L beta (2 + L beta) gamma_k^2) at t = sigma = 1/(L beta).
std::vector<double> composite_decrease_slacks(const CompositeProblem& p,
                                              const IterationTrace& trace,
                                              const ReferenceSolution& ref,
                                              const SigmaPolicy& sigma);

/// Rate 1 - 1/(25 + 10 L beta gamma) of prox-linear under tilt-stability.
inline double tilt_stable_rate(double L, double beta, double gamma) {
  return 1.0 - 1.0 / (25.0 + 10.0 * L * beta * gamma);
}

}  // namespace proxbound
