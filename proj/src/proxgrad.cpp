#include "proxbound/proxgrad.hpp"

#include <chrono>
#include <cmath>

namespace proxbound {

namespace {

constexpr int kInnerIterationCap = 1000000;

class Stopwatch {
 public:
  explicit Stopwatch(bool enabled) : enabled_(enabled), start_(Clock::now()) {}
  double seconds() const {
    if (!enabled_) return 0.0;
    return std::chrono::duration<double>(Clock::now() - start_).count();
  }

 private:
  using Clock = std::chrono::steady_clock;
  bool enabled_;
  Clock::time_point start_;
};

void require_domain(const AdditiveProblem& p, const Vector& x, const char* what) {
  require_dim(what, p.dim(), x.size());
  if (!x.allFinite()) throw InvalidArgument(std::string(what) + ": non-finite point");
  if (!p.g.in_domain(x)) throw DomainError(std::string(what) + ": point outside dom g");
}

}  // namespace

AdditiveProblem::AdditiveProblem(SmoothFunction f_, SeparablePenalty g_)
    : AdditiveProblem(f_, std::move(g_), f_.convex()) {}

AdditiveProblem::AdditiveProblem(SmoothFunction f_, SeparablePenalty g_, bool f_convex_)
    : f(std::move(f_)), g(std::move(g_)), f_convex(f_convex_) {
  if (g.weights().size() != 0) require_dim("penalty weights", f.dim(), g.weights().size());
  if (f_convex && !f.convex()) {
    throw InvalidArgument("f_convex set for a nonconvex smooth function (" + f.name() + ")");
  }
}

double AdditiveProblem::phi(const Vector& x) const {
  const double gx = g.eval(x);
  if (gx == kInf) return kInf;
  return f.eval(x) + gx;
}

double resolve_step(const AdditiveProblem& p, const ProxGradConfig& cfg,
                    std::vector<std::string>* warnings) {
  const double beta = p.beta();
  if (!cfg.t) {
    if (!(beta > 0.0)) throw InvalidArgument("step t must be given when beta = 0");
    return 1.0 / beta;
  }
  const double t = *cfg.t;
  if (!(t > 0.0) || !std::isfinite(t)) throw InvalidArgument("step t must be positive");
  if (beta > 0.0 && t > 1.0 / beta) {
    if (warnings) {
      warnings->push_back("step t=" + format_real(t) + " exceeds 1/beta; clamped to " +
                          format_real(1.0 / beta));
    }
    return 1.0 / beta;
  }
  return t;
}

Vector prox_grad_map(const AdditiveProblem& p, const Vector& x, double t) {
  require_domain(p, x, "prox_grad_map");
  if (!(t > 0.0)) throw InvalidArgument("prox_grad_map: t must be positive");
  return (x - p.g.prox(x - t * p.f.grad(x), t)) / t;
}

double additive_stationarity(const AdditiveProblem& p, const Vector& x) {
  require_domain(p, x, "stationarity");
  const Vector grad = p.f.grad(x);
  const auto intervals = p.g.subgradient_intervals(x);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double d = intervals[static_cast<std::size_t>(i)].distance(-grad[i]);
    sum += d * d;
  }
  return std::sqrt(sum);
}

IterationTrace run_prox_gradient(const AdditiveProblem& p, const Vector& x0,
                                 const ProxGradConfig& cfg) {
  require_domain(p, x0, "run_prox_gradient");
  if (cfg.max_iter < 0 || !(cfg.eps > 0.0)) throw InvalidArgument("bad prox-gradient config");
  IterationTrace trace;
  const double t = resolve_step(p, cfg, &trace.warnings);
  const double beta = p.beta();
  const double decrease_coef = 0.5 * t * (2.0 - beta * t);
  const Stopwatch clock(cfg.timing);

  Vector x = x0;
  double phi = p.phi(x);
  for (int k = 0;; ++k) {
    if (cfg.keep_iterates) trace.iterates.push_back(x);
    const Vector next = p.g.prox(x - t * p.f.grad(x), t);
    const double gnorm = (x - next).norm() / t;

    IterationRecord row;
    row.k = k;
    row.phi = phi;
    row.gnorm = gnorm;
    row.t = t;
    row.certificate = (1.0 + beta * t) * gnorm;
    if (gnorm <= cfg.eps || k >= cfg.max_iter) {
      trace.status = gnorm <= cfg.eps ? Status::Converged : Status::MaxIter;
      row.elapsed_s = clock.seconds();
      trace.rows.push_back(row);
      break;
    }
    const double phi_next = p.phi(next);
    row.decrease_residual = phi - phi_next - decrease_coef * gnorm * gnorm;
    if (cfg.record_certificates) {
      row.stationarity_next = additive_stationarity(p, next);
    }
    row.elapsed_s = clock.seconds();
    trace.rows.push_back(row);
    x = next;
    phi = phi_next;
  }
  trace.x_final = x;
  return trace;
}

Vector proximal_point_step(const AdditiveProblem& p, const Vector& x, double t,
                           double inner_tol) {
  if (!p.f_convex) throw UnsupportedError("proximal_point_step requires convex f");
  require_dim("proximal_point_step", p.dim(), x.size());
  if (!(t > 0.0) || !(inner_tol > 0.0)) {
    throw InvalidArgument("proximal_point_step: t and inner_tol must be positive");
  }
  const double s = 1.0 / (p.beta() + 1.0 / t);
  Vector y = p.g.prox(x, s);
  double residual = kInf;
  for (int it = 0; it < kInnerIterationCap; ++it) {
    const Vector grad = p.f.grad(y) + (y - x) / t;
    Vector next = p.g.prox(y - s * grad, s);
    residual = (y - next).norm() / s;
    y = std::move(next);
    if (residual <= inner_tol) return y;
  }
  throw ConvergenceError("proximal_point_step: inner iteration cap exceeded", residual);
}

IterationTrace run_proximal_point(const AdditiveProblem& p, const Vector& x0, double t,
                                  const ProxGradConfig& cfg, double inner_tol) {
  require_domain(p, x0, "run_proximal_point");
  if (!(t > 0.0)) throw InvalidArgument("run_proximal_point: t must be positive");
  IterationTrace trace;
  const Stopwatch clock(cfg.timing);
  Vector x = x0;
  double phi = p.phi(x);
  for (int k = 0;; ++k) {
    if (cfg.keep_iterates) trace.iterates.push_back(x);
    const Vector next = proximal_point_step(p, x, t, inner_tol);
    const double gnorm = (x - next).norm() / t;
    IterationRecord row;
    row.k = k;
    row.phi = phi;
    row.gnorm = gnorm;
    row.t = t;
    row.certificate = gnorm;
    if (gnorm <= cfg.eps || k >= cfg.max_iter) {
      trace.status = gnorm <= cfg.eps ? Status::Converged : Status::MaxIter;
      row.elapsed_s = clock.seconds();
      trace.rows.push_back(row);
      break;
    }
    const double phi_next = p.phi(next);
    // phi(z+) + ||z+ - z||^2 / (2t) <= phi(z)
    row.decrease_residual = phi - phi_next - 0.5 * t * gnorm * gnorm;
    if (cfg.record_certificates) row.stationarity_next = additive_stationarity(p, next);
    row.elapsed_s = clock.seconds();
    trace.rows.push_back(row);
    x = next;
    phi = phi_next;
  }
  trace.x_final = x;
  return trace;
}

}  // namespace proxbound
