#include "proxbound/proxlinear.hpp"

#include <chrono>
#include <cmath>

namespace proxbound {

namespace {

constexpr int kInnerIterationCap = 1000000;
constexpr double kStepUnderflow = 1e-12;

void require_domain(const CompositeProblem& p, const Vector& x, const char* what) {
  require_dim(what, p.dim(), x.size());
  if (!x.allFinite()) throw InvalidArgument(std::string(what) + ": non-finite point");
  if (!p.g.in_domain(x)) throw DomainError(std::string(what) + ": point outside dom g");
}

}  // namespace

CompositeProblem::CompositeProblem(SeparablePenalty g_, SeparablePenalty h_, SmoothMap c_)
    : g(std::move(g_)), h(std::move(h_)), c(std::move(c_)), L(0.0), beta(c.jac_beta()) {
  if (g.weights().size() != 0) require_dim("g weights", c.in_dim(), g.weights().size());
  try {
    L = h.lipschitz_constant(c.out_dim());
  } catch (const UnsupportedError& e) {
    throw InvalidArgument(std::string("outer function h: ") + e.what());
  }
}

double CompositeProblem::phi(const Vector& x) const {
  const double gx = g.eval(x);
  if (gx == kInf) return kInf;
  return gx + h.eval(c.eval(x));
}

void ProxLinearConfig::validate() const {
  if (t0 && (!(*t0 > 0.0) || !std::isfinite(*t0))) throw InvalidArgument("t0 must be positive");
  if (!(q > 0.0 && q < 1.0)) throw InvalidArgument("q must lie in (0,1)");
  if (!(eps > 0.0)) throw InvalidArgument("eps must be positive");
  if (!(inner_tol > 0.0)) throw InvalidArgument("inner_tol must be positive");
  if (max_iter < 0) throw InvalidArgument("max_iter must be nonnegative");
  if (sigma.kind == SigmaPolicy::Kind::Fixed && !(sigma.sigma > 0.0)) {
    throw InvalidArgument("sigma must be positive");
  }
}

double linearized_value(const CompositeProblem& p, const Vector& x, const Vector& y) {
  require_dim("linearized_value", p.dim(), x.size());
  require_dim("linearized_value", p.dim(), y.size());
  const double gy = p.g.eval(y);
  if (gy == kInf) throw DomainError("linearized_value: y outside dom g");
  const auto [cx, J] = p.c.eval_jac(x);
  return gy + p.h.eval(cx + J * (y - x));
}

SubproblemSolution solve_subproblem_detailed(const CompositeProblem& p, const Vector& x, double t,
                                             double inner_tol, const Vector* warm_start) {
  require_dim("solve_subproblem", p.dim(), x.size());
  if (!(t > 0.0) || !(inner_tol > 0.0)) {
    throw InvalidArgument("solve_subproblem: t and inner_tol must be positive");
  }
  const auto [cx, J] = p.c.eval_jac(x);
  const auto conj = p.h.conjugate_model(cx.size());
  const double jnorm = spectral_norm(J);
  const double s = 1.0 / (t * jnorm * jnorm + 1.0);
  const Vector shift = cx - J * x;

  auto project = [&](const Vector& v) {
    Vector out(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      const double shrunk = soft_threshold(v[i], s * conj.abs_coef[i]) / (1.0 + s * conj.quad_coef[i]);
      out[i] = std::clamp(shrunk, conj.lo[i], conj.hi[i]);
    }
    return out;
  };

  Vector w = warm_start && warm_start->size() == cx.size()
                 ? warm_start->cwiseMax(conj.lo).cwiseMin(conj.hi).eval()
                 : Vector::Zero(cx.size()).cwiseMax(conj.lo).cwiseMin(conj.hi).eval();
  SubproblemSolution sol;
  double residual = kInf;
  for (int it = 0; it < kInnerIterationCap; ++it) {
    const Vector y = p.g.prox(x - t * (J.transpose() * w), t);
    const Vector ascent = shift + J * y;
    Vector next = project(w + s * ascent);
    residual = (next - w).norm() / s;
    w = std::move(next);
    if (residual <= inner_tol) {
      sol.iterations = it + 1;
      sol.residual = residual;
      sol.y = p.g.prox(x - t * (J.transpose() * w), t);
      sol.w = w;
      return sol;
    }
  }
  throw ConvergenceError("solve_subproblem: inner iteration cap exceeded", residual);
}

Vector solve_subproblem(const CompositeProblem& p, const Vector& x, double t, double inner_tol) {
  return solve_subproblem_detailed(p, x, t, inner_tol).y;
}

Vector prox_linear_map(const CompositeProblem& p, const Vector& x, double t, double inner_tol) {
  return (x - solve_subproblem(p, x, t, inner_tol)) / t;
}

NearStationarity near_stationarity_certificate(const CompositeProblem& p, double gnorm, double t) {
  if (!(gnorm >= 0.0) || !(t > 0.0)) {
    throw InvalidArgument("near_stationarity_certificate: need gnorm >= 0 and t > 0");
  }
  NearStationarity out;
  out.bound = (3.0 * p.L * p.beta * t + 2.0) * gnorm;
  if (p.additive_form) out.sharp = (1.0 + p.beta * t) * gnorm;
  return out;
}

IterationTrace run_prox_linear(const CompositeProblem& p, const Vector& x0,
                               const ProxLinearConfig& cfg) {
  cfg.validate();
  require_domain(p, x0, "run_prox_linear");
  const double lb = p.L * p.beta;
  double t = cfg.t0.value_or(lb > 0.0 ? 1.0 / lb : 1.0);
  const bool timing = cfg.timing;
  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return timing ? std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()
                  : 0.0;
  };

  IterationTrace trace;
  Vector x = x0;
  double phi = p.phi(x);
  Vector warm;
  for (int k = 0;; ++k) {
    if (cfg.keep_iterates) trace.iterates.push_back(x);
    auto sol = solve_subproblem_detailed(p, x, t, cfg.inner_tol, warm.size() ? &warm : nullptr);
    double gnorm = (x - sol.y).norm() / t;

    IterationRecord row;
    row.k = k;
    row.phi = phi;
    if (gnorm <= cfg.eps || k >= cfg.max_iter) {
      trace.status = gnorm <= cfg.eps ? Status::Converged : Status::MaxIter;
      row.gnorm = gnorm;
      row.t = t;
      const auto cert = near_stationarity_certificate(p, gnorm, t);
      row.certificate = cert.bound;
      if (cert.sharp) row.certificate_sharp = *cert.sharp;
      row.elapsed_s = elapsed();
      trace.rows.push_back(row);
      break;
    }

    // Roundoff allowance in the acceptance test; the exact test is recorded
    // in decrease_residual.
    const double slack = 1e-13 * (1.0 + std::abs(phi));
    double phi_next = p.phi(sol.y);
    int backtracks = 0;
    while (phi_next > phi - 0.5 * cfg.sigma.value(t) * gnorm * gnorm + slack) {
      t *= cfg.q;
      ++backtracks;
      if (t < kStepUnderflow) {
        throw ConvergenceError("run_prox_linear: backtracking underflow at iteration " +
                                   std::to_string(k),
                               gnorm);
      }
      sol = solve_subproblem_detailed(p, x, t, cfg.inner_tol, &sol.w);
      gnorm = (x - sol.y).norm() / t;
      phi_next = p.phi(sol.y);
    }
    row.gnorm = gnorm;
    row.t = t;
    row.backtracks = backtracks;
    row.decrease_residual = phi - 0.5 * cfg.sigma.value(t) * gnorm * gnorm - phi_next;
    const auto cert = near_stationarity_certificate(p, gnorm, t);
    row.certificate = cert.bound;
    if (cert.sharp) row.certificate_sharp = *cert.sharp;
    row.elapsed_s = elapsed();
    trace.rows.push_back(row);
    warm = sol.w;
    x = sol.y;
    phi = phi_next;
  }
  trace.x_final = x;
  return trace;
}

}  // namespace proxbound
