#include "proxbound/diagnostics.hpp"

#include "proxbound/instances.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace proxbound {

namespace {

constexpr double kMinDistance = 1e-8;
constexpr double kMinGradMap = 1e-10;
constexpr std::size_t kMinSamples = 10;
constexpr int kShrinkSteps = 60;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double tilted_phi(const AdditiveProblem& p, const Vector& x, const Vector& tilt) {
  const double v = p.phi(x);
  return tilt.size() ? v - tilt.dot(x) : v;
}

}  // namespace

ReferenceSolution ReferenceSolution::analytic_box(Vector lo, Vector hi, double phi_star) {
  require_dim("reference box", lo.size(), hi.size());
  if ((lo.array() > hi.array()).any()) throw InvalidArgument("reference box requires lo <= hi");
  return ReferenceSolution{AnalyticBox{std::move(lo), std::move(hi)}, phi_star};
}

ReferenceSolution ReferenceSolution::computed(Vector x_star, double phi_star, double accuracy) {
  return ReferenceSolution{Computed{std::move(x_star), accuracy}, phi_star};
}

Vector ReferenceSolution::nearest(const Vector& x) const {
  return std::visit(overloaded{
                        [&](const AnalyticBox& b) -> Vector {
                          require_dim("reference", b.lo.size(), x.size());
                          return x.cwiseMax(b.lo).cwiseMin(b.hi);
                        },
                        [&](const Computed& c) -> Vector {
                          require_dim("reference", c.x_star.size(), x.size());
                          return c.x_star;
                        },
                    },
                    set);
}

double ReferenceSolution::distance(const Vector& x) const { return (x - nearest(x)).norm(); }

Vector ReferenceSolution::center() const {
  return std::visit(overloaded{
                        [](const AnalyticBox& b) -> Vector { return 0.5 * (b.lo + b.hi); },
                        [](const Computed& c) -> Vector { return c.x_star; },
                    },
                    set);
}

double ReferenceSolution::sup_norm() const {
  return std::visit(overloaded{
                        [](const AnalyticBox& b) {
                          return std::max(b.lo.cwiseAbs().maxCoeff(), b.hi.cwiseAbs().maxCoeff());
                        },
                        [](const Computed& c) { return c.x_star.cwiseAbs().maxCoeff(); },
                    },
                    set);
}

ReferenceSolution compute_reference(const AdditiveProblem& p, const Vector& x0, double accuracy,
                                    int max_iter) {
  ProxGradConfig cfg;
  cfg.eps = accuracy;
  cfg.max_iter = max_iter;
  cfg.record_certificates = false;
  const IterationTrace trace = run_prox_gradient(p, x0, cfg);
  if (trace.status != Status::Converged) {
    throw ConvergenceError("compute_reference: accuracy not reached", trace.last().gnorm);
  }
  return ReferenceSolution::computed(trace.x_final, trace.last().phi, trace.last().gnorm);
}

ReferenceSolution compute_reference(const CompositeProblem& p, const Vector& x0,
                                    ProxLinearConfig cfg, double accuracy) {
  cfg.eps = accuracy;
  cfg.keep_iterates = false;
  cfg.timing = false;
  const IterationTrace trace = run_prox_linear(p, x0, cfg);
  return ReferenceSolution::computed(trace.x_final, trace.last().phi, trace.last().gnorm);
}

double dist_to_stationarity(const AdditiveProblem& p, const Vector& x) {
  return additive_stationarity(p, x);
}

double dist_to_stationarity(const CompositeProblem& p, const Vector& x) {
  require_dim("dist_to_stationarity", p.dim(), x.size());
  if (!p.g.in_domain(x)) throw DomainError("dist_to_stationarity: point outside dom g");
  const auto [cx, J] = p.c.eval_jac(x);
  const auto g_box = p.g.subgradient_intervals(x);
  const auto h_box = p.h.subgradient_intervals(cx);
  const Eigen::Index m = cx.size();

  // Residual of -J^T w against the g-subdifferential box.
  auto residual = [&](const Vector& w) {
    Vector u = -(J.transpose() * w);
    for (Eigen::Index i = 0; i < u.size(); ++i) {
      u[i] -= g_box[static_cast<std::size_t>(i)].project(u[i]);
    }
    return u;
  };
  auto project_h = [&](Vector w) {
    for (Eigen::Index i = 0; i < m; ++i) w[i] = h_box[static_cast<std::size_t>(i)].project(w[i]);
    return w;
  };

  Vector w = project_h(Vector::Zero(m));
  const double jnorm = spectral_norm(J);
  if (jnorm == 0.0) return residual(w).norm();
  const double step = 1.0 / (jnorm * jnorm);
  for (int it = 0; it < 100000; ++it) {
    const Vector grad = -(J * residual(w));
    Vector next = project_h(w - step * grad);
    const double moved = (next - w).norm() / step;
    w = std::move(next);
    if (moved <= 1e-10) break;
  }
  return residual(w).norm();
}

std::vector<SublevelSample> draw_sublevel_samples(const AdditiveProblem& p,
                                                  const ReferenceSolution& ref, double nu,
                                                  const SamplingOptions& opts) {
  if (!(nu > 0.0)) throw InvalidArgument("sampling: nu must be positive");
  if (opts.tilt.size()) require_dim("tilt", p.dim(), opts.tilt.size());
  const Vector center = ref.center();
  require_dim("reference", p.dim(), center.size());
  const double radius = opts.radius.value_or(5.0 * (1.0 + ref.sup_norm()));
  const double level = ref.phi_star + nu;
  Rng rng(opts.seed);
  std::vector<SublevelSample> out;
  out.reserve(opts.n_samples);
  Vector offset(p.dim());
  for (std::size_t s = 0; s < opts.n_samples; ++s) {
    for (Eigen::Index i = 0; i < offset.size(); ++i) offset[i] = rng.uniform(-radius, radius);
    for (int shrink = 0; shrink <= kShrinkSteps; ++shrink) {
      const Vector x = center + offset;
      const double v = tilted_phi(p, x, opts.tilt);
      if (v <= level) {
        out.push_back({x, v, ref.distance(x)});
        break;
      }
      offset *= 0.5;
    }
  }
  return out;
}

double estimate_alpha(const AdditiveProblem& p, const ReferenceSolution& ref, double nu,
                      const SamplingOptions& opts) {
  double alpha = kInf;
  std::size_t used = 0;
  for (const auto& s : draw_sublevel_samples(p, ref, nu, opts)) {
    if (s.dist <= kMinDistance) continue;
    alpha = std::min(alpha, 2.0 * (s.phi - ref.phi_star) / (s.dist * s.dist));
    ++used;
  }
  if (used < kMinSamples) {
    throw InsufficientDataError("estimate_alpha: only " + std::to_string(used) +
                                " accepted samples");
  }
  return std::max(alpha, 0.0);
}

double estimate_gamma(const AdditiveProblem& p, const ReferenceSolution& ref, double nu, double t,
                      const SamplingOptions& opts) {
  SamplingOptions plain = opts;
  plain.tilt = Vector();
  double gamma = 0.0;
  std::size_t used = 0;
  for (const auto& s : draw_sublevel_samples(p, ref, nu, plain)) {
    if (s.dist <= kMinDistance) continue;
    const double gnorm = prox_grad_map(p, s.x, t).norm();
    if (gnorm <= kMinGradMap) continue;
    gamma = std::max(gamma, s.dist / gnorm);
    ++used;
  }
  if (used < kMinSamples) {
    throw InsufficientDataError("estimate_gamma: only " + std::to_string(used) +
                                " accepted samples");
  }
  return gamma;
}

namespace {

double gamma_ratio(const AdditiveProblem& p, const ReferenceSolution& ref, const Vector& x,
                   double t) {
  const double d = ref.distance(x);
  if (d <= kMinDistance) return 0.0;
  const double gnorm = prox_grad_map(p, x, t).norm();
  return gnorm <= kMinGradMap ? 0.0 : d / gnorm;
}

// Compass search on dist(x, S) / ||G_t(x)|| over the sublevel set, started
// from the samples where the ratio is largest. Returns the end points.
std::vector<Vector> refine_gamma(const AdditiveProblem& p, const ReferenceSolution& ref, double nu,
                                 double t, const std::vector<SublevelSample>& samples,
                                 std::size_t starts) {
  std::vector<std::pair<double, std::size_t>> ranked;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double r = gamma_ratio(p, ref, samples[i].x, t);
    if (r > 0.0) ranked.emplace_back(r, i);
  }
  starts = std::min(starts, ranked.size());
  std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(starts),
                    ranked.end(), [](const auto& a, const auto& b) {
                      return a.first > b.first || (a.first == b.first && a.second < b.second);
                    });
  const double level = ref.phi_star + nu;
  std::vector<Vector> out;
  for (std::size_t s = 0; s < starts; ++s) {
    Vector x = samples[ranked[s].second].x;
    double best = ranked[s].first;
    double h = 0.25 * ref.distance(x);
    const double h_min = 1e-9 * h;
    for (int evals = 0; h > h_min && evals < 100000;) {
      bool moved = false;
      for (Eigen::Index i = 0; i < x.size() && !moved; ++i) {
        for (double sign : {1.0, -1.0}) {
          Vector y = x;
          y[i] += sign * h;
          ++evals;
          if (!p.g.in_domain(y) || p.phi(y) > level) continue;
          const double r = gamma_ratio(p, ref, y, t);
          if (r > best) {
            best = r;
            x = std::move(y);
            moved = true;
            break;
          }
        }
      }
      if (!moved) h *= 0.5;
    }
    out.push_back(std::move(x));
  }
  return out;
}

}  // namespace

ConstantsReport measure_constants(const AdditiveProblem& p, const ReferenceSolution& ref, double nu,
                                  double t, const SamplingOptions& opts, double inner_tol) {
  if (!p.f_convex) throw UnsupportedError("measure_constants requires convex f");
  SamplingOptions plain = opts;
  plain.tilt = Vector();
  const auto samples = draw_sublevel_samples(p, ref, nu, plain);

  std::vector<SublevelSample> points = samples;
  for (auto& x : refine_gamma(p, ref, nu, t, samples, opts.refine_starts)) {
    const double v = p.phi(x);
    const double d = ref.distance(x);
    points.push_back({std::move(x), v, d});
  }

  ConstantsReport r;
  r.refined_count = points.size() - samples.size();
  r.nu = nu;
  r.t = t;
  r.beta = p.beta();
  r.alpha_hat = kInf;
  r.easy_bound_slack = kInf;
  r.sandwich_lower_slack = kInf;
  r.sandwich_upper_slack = kInf;
  const double bt = p.beta() * t;

  auto absorb_growth = [&](const Vector& x, double phi, double dist) {
    if (dist <= kMinDistance) return false;
    r.alpha_hat = std::min(r.alpha_hat, 2.0 * (phi - ref.phi_star) / (dist * dist));
    const double stat = dist_to_stationarity(p, x);
    if (stat > 0.0) r.L_hat_sub = std::max(r.L_hat_sub, dist / stat);
    return true;
  };

  for (const auto& s : points) {
    if (!absorb_growth(s.x, s.phi, s.dist)) continue;
    ++r.sample_count;
    const double gnorm = prox_grad_map(p, s.x, t).norm();
    const Vector prox = proximal_point_step(p, s.x, t, inner_tol);
    const double step = (s.x - prox).norm() / t;
    if (gnorm > kMinGradMap) r.gamma_hat = std::max(r.gamma_hat, s.dist / gnorm);
    if (step > 0.0) r.L_hat_prox = std::max(r.L_hat_prox, s.dist / step);
    r.easy_bound_slack = std::min(r.easy_bound_slack, dist_to_stationarity(p, s.x) - gnorm);
    r.sandwich_lower_slack = std::min(r.sandwich_lower_slack, step - (1.0 - bt) * gnorm);
    r.sandwich_upper_slack = std::min(r.sandwich_upper_slack, (1.0 + bt) * gnorm - step);
    if (absorb_growth(prox, p.phi(prox), ref.distance(prox))) ++r.companion_count;
  }
  if (r.sample_count < kMinSamples) {
    throw InsufficientDataError("measure_constants: only " + std::to_string(r.sample_count) +
                                " accepted samples");
  }
  r.alpha_hat = std::max(r.alpha_hat, 0.0);
  return r;
}

std::string ConstantsReport::to_key_value() const {
  std::ostringstream out;
  out << "alpha_hat=" << format_real(alpha_hat) << '\n'
      << "gamma_hat=" << format_real(gamma_hat) << '\n'
      << "L_hat_sub=" << format_real(L_hat_sub) << '\n'
      << "L_hat_prox=" << format_real(L_hat_prox) << '\n'
      << "nu=" << format_real(nu) << '\n'
      << "t=" << format_real(t) << '\n'
      << "beta=" << format_real(beta) << '\n'
      << "sample_count=" << sample_count << '\n'
      << "companion_count=" << companion_count << '\n'
      << "refined_count=" << refined_count << '\n'
      << "easy_bound_slack=" << format_real(easy_bound_slack) << '\n'
      << "sandwich_lower_slack=" << format_real(sandwich_lower_slack) << '\n'
      << "sandwich_upper_slack=" << format_real(sandwich_upper_slack) << '\n';
  return out.str();
}

std::string ConstantsReport::csv_header() {
  return "alpha_hat,gamma_hat,L_hat_sub,L_hat_prox,nu,t,beta,sample_count,companion_count,"
         "refined_count,easy_bound_slack,sandwich_lower_slack,sandwich_upper_slack";
}

std::string ConstantsReport::csv_row() const {
  std::ostringstream out;
  out << format_real(alpha_hat) << ',' << format_real(gamma_hat) << ',' << format_real(L_hat_sub)
      << ',' << format_real(L_hat_prox) << ',' << format_real(nu) << ',' << format_real(t) << ','
      << format_real(beta) << ',' << sample_count << ',' << companion_count << ','
      << refined_count << ','
      << format_real(easy_bound_slack) << ',' << format_real(sandwich_lower_slack) << ','
      << format_real(sandwich_upper_slack);
  return out.str();
}

bool RelationReport::all_pass() const {
  return gamma_from_alpha.pass && L_from_alpha.pass && L_hat_from_L.pass && alpha_from_gamma.pass;
}

std::vector<RelationCheck> RelationReport::checks() const {
  return {gamma_from_alpha, L_from_alpha, L_hat_from_L, alpha_from_gamma};
}

RelationReport verify_constant_relations(double alpha, double gamma, double L, double L_hat,
                                         double t, double beta, double tol) {
  if (!(alpha > 0.0) || !(gamma > 0.0) || !(t > 0.0) || !(beta >= 0.0)) {
    throw InvalidArgument("verify_constant_relations: inputs must be positive");
  }
  auto upper = [&](std::string name, double measured, double bound) {
    const double limit = bound * (1.0 + tol);
    return RelationCheck{std::move(name), measured, bound, measured <= limit, limit - measured};
  };
  RelationReport r;
  r.gamma_from_alpha = upper("gamma_from_alpha", gamma, gamma_from_alpha_bound(alpha, t, beta));
  r.L_from_alpha = upper("L_from_alpha", L, 2.0 / alpha);
  r.L_hat_from_L = upper("L_hat_from_L", L_hat, L + t);
  const double floor = (1.0 - tol) / gamma;
  r.alpha_from_gamma = RelationCheck{"alpha_from_gamma", alpha, 1.0 / gamma, alpha >= floor,
                                     alpha - floor};
  return r;
}

std::vector<SandwichPoint> verify_sandwich(const AdditiveProblem& p, double t,
                                           const std::vector<Vector>& points, double inner_tol) {
  const double bt = p.beta() * t;
  std::vector<SandwichPoint> out;
  out.reserve(points.size());
  for (const Vector& x : points) {
    const double gnorm = prox_grad_map(p, x, t).norm();
    const double step = (x - proximal_point_step(p, x, t, inner_tol)).norm() / t;
    out.push_back({step - (1.0 - bt) * gnorm, step, (1.0 + bt) * gnorm - step, gnorm});
  }
  return out;
}

double iteration_bound(double beta, double nu, double gamma, double dist0_sq, double gap0,
                       double eps) {
  if (!(eps > 0.0)) throw InvalidArgument("iteration_bound: eps must be positive");
  if (gap0 <= eps) return 0.0;
  const double first = std::isinf(nu) ? 0.0 : beta / (2.0 * nu) * dist0_sq;
  return first + 2.0 * beta * gamma * std::log(gap0 / eps);
}

double fit_tail_rate(const std::vector<double>& phi, double phi_star, double tail_fraction) {
  if (!(tail_fraction > 0.0 && tail_fraction <= 1.0)) {
    throw InvalidArgument("fit_tail_rate: tail_fraction must lie in (0,1]");
  }
  std::vector<std::pair<double, double>> points;  // (k, ln gap)
  for (std::size_t k = 0; k < phi.size(); ++k) {
    const double gap = phi[k] - phi_star;
    if (gap > 1e-14) points.emplace_back(static_cast<double>(k), std::log(gap));
  }
  const auto keep = static_cast<std::size_t>(
      std::ceil(tail_fraction * static_cast<double>(points.size())));
  if (keep < 10) {
    throw InsufficientDataError("fit_tail_rate: insufficient tail data (" + std::to_string(keep) +
                                " points)");
  }
  const auto first = points.end() - static_cast<std::ptrdiff_t>(keep);
  double mk = 0.0, my = 0.0;
  for (auto it = first; it != points.end(); ++it) {
    mk += it->first;
    my += it->second;
  }
  mk /= static_cast<double>(keep);
  my /= static_cast<double>(keep);
  double sxy = 0.0, sxx = 0.0;
  for (auto it = first; it != points.end(); ++it) {
    sxy += (it->first - mk) * (it->second - my);
    sxx += (it->first - mk) * (it->first - mk);
  }
  const double slope = sxy / sxx;
  if (!(slope < 0.0)) {
    throw InsufficientDataError("fit_tail_rate: insufficient tail data (no decrease, rate " +
                                format_real(std::exp(slope)) + ")");
  }
  return std::exp(slope);
}

double fit_tail_rate(const IterationTrace& trace, double phi_star, double tail_fraction) {
  std::vector<double> phi;
  phi.reserve(trace.rows.size());
  for (const auto& r : trace.rows) phi.push_back(r.phi);
  return fit_tail_rate(phi, phi_star, tail_fraction);
}

std::vector<double> additive_decrease_slacks(const AdditiveProblem& p, const IterationTrace& trace,
                                             const ReferenceSolution& ref) {
  if (trace.iterates.size() != trace.rows.size()) {
    throw InvalidArgument("additive_decrease_slacks: trace lacks iterates");
  }
  std::vector<double> out;
  const double beta = p.beta();
  for (std::size_t k = 0; k + 1 < trace.rows.size(); ++k) {
    const auto& row = trace.rows[k];
    const double gap = row.phi - ref.phi_star;
    const double gap_next = trace.rows[k + 1].phi - ref.phi_star;
    if (row.gnorm <= 0.0) {
      out.push_back(-gap_next);
      continue;
    }
    const double t = row.t;
    const double c = 0.5 * t * (2.0 - beta * t);
    const double gamma = ref.distance(trace.iterates[k]) / row.gnorm;
    const double denom = c + gamma - 0.5 * t;
    const double rate = denom > 0.0 ? 1.0 - c / denom : 0.0;
    out.push_back(rate * gap - gap_next);
  }
  return out;
}

std::vector<double> composite_decrease_slacks(const CompositeProblem& p,
                                              const IterationTrace& trace,
                                              const ReferenceSolution& ref,
                                              const SigmaPolicy& sigma) {
  if (trace.iterates.size() != trace.rows.size()) {
    throw InvalidArgument("composite_decrease_slacks: trace lacks iterates");
  }
  std::vector<double> out;
  const double lb = p.L * p.beta;
  for (std::size_t k = 0; k + 1 < trace.rows.size(); ++k) {
    const auto& row = trace.rows[k];
    const double gap = row.phi - ref.phi_star;
    const double gap_next = trace.rows[k + 1].phi - ref.phi_star;
    if (row.gnorm <= 0.0) {
      out.push_back(-gap_next);
      continue;
    }
    const double t = row.t;
    const double s = sigma.value(t);
    const double gamma = std::max(1.0, ref.distance(trace.iterates[k]) / row.gnorm);
    const double K = (1.0 + 0.5 * lb) * gamma * gamma + 0.5 * t * (lb * t - 2.0);
    const double rate = s + 2.0 * K > 0.0 ? 1.0 - s / (s + 2.0 * K) : 0.0;
    out.push_back(rate * gap - gap_next);
  }
  return out;
}

}  // namespace proxbound
