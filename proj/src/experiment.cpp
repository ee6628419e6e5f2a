#include "proxbound/experiment.hpp"

#include "proxbound/instances.hpp"
#include "proxbound/spec_string.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

namespace proxbound {

namespace {

// Tolerances of the per-run checks.
constexpr double kDescentTol = 1e-10;
constexpr double kCertificateTol = 1e-8;
constexpr double kGeometricTol = 1e-8;
constexpr double kSandwichTol = 1e-8;
constexpr double kRelationTol = 1e-3;
constexpr double kTailMargin = 0.05;

using Section = std::map<std::string, std::string>;

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

bool parse_bool(const std::string& text, const std::string& what) {
  const std::string v = lower(trim(text));
  if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
  if (v == "false" || v == "no" || v == "off" || v == "0") return false;
  throw ConfigError(what + ": '" + text + "' is not a boolean");
}

std::uint64_t parse_seed(const std::string& text, const std::string& what) {
  const std::string s = trim(text);
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw ConfigError(what + ": '" + text + "' is not a 64-bit unsigned integer");
  }
  return v;
}

std::size_t parse_count(const std::string& text, const std::string& what) {
  const long long v = parse_integer(text, what);
  if (v <= 0) throw ConfigError(what + " must be a positive integer");
  return static_cast<std::size_t>(v);
}

double parse_positive(const std::string& text, const std::string& what) {
  const double v = parse_real(text, what);
  if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(what + " must be a positive real");
  return v;
}

/// Sections in file order; duplicate keys and keys outside a section are
/// reported into `errors`.
std::map<std::string, Section> read_ini(const std::string& text, std::vector<std::string>& errors) {
  std::map<std::string, Section> out;
  std::istringstream in(text);
  std::string line;
  std::string current;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find_first_of("#;");
    const std::string s = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (s.empty()) continue;
    const std::string where = "line " + std::to_string(lineno);
    if (s.front() == '[') {
      if (s.back() != ']') {
        errors.push_back(where + ": malformed section header '" + s + "'");
        continue;
      }
      current = lower(trim(s.substr(1, s.size() - 2)));
      if (out.count(current)) errors.push_back(where + ": section [" + current + "] repeated");
      out[current];
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      errors.push_back(where + ": expected key = value");
      continue;
    }
    if (current.empty()) {
      errors.push_back(where + ": key outside of any section");
      continue;
    }
    const std::string key = lower(trim(s.substr(0, eq)));
    auto& sec = out[current];
    if (sec.count(key)) {
      errors.push_back(where + ": duplicate key '" + key + "' in [" + current + "]");
      continue;
    }
    sec[key] = trim(s.substr(eq + 1));
  }
  return out;
}

/// Applies `fn` to the value of `key` if present, turning exceptions into
/// error lines.
template <class Fn>
void with_key(const Section& sec, const std::string& section, const std::string& key,
              std::vector<std::string>& errors, Fn fn) {
  auto it = sec.find(key);
  if (it == sec.end()) return;
  try {
    fn(it->second, "[" + section + "] " + key);
  } catch (const Error& e) {
    errors.push_back(e.what());
  }
}

void reject_unknown(const Section& sec, const std::string& section,
                    std::initializer_list<std::string_view> allowed,
                    std::vector<std::string>& errors) {
  for (const auto& [key, value] : sec) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      errors.push_back("[" + section + "] unknown key '" + key + "'");
    }
  }
}

// ---- problem construction ------------------------------------------------

struct DataSource {
  const std::filesystem::path& base;
  Rng& rng;

  Matrix matrix(const SpecCall& call, const std::string& key, Eigen::Index rows,
                Eigen::Index cols) const {
    if (auto file = call.find(key)) return load_matrix(base / *file);
    return rng.normal_matrix(rows, cols);
  }
  Vector vector(const SpecCall& call, const std::string& key, Eigen::Index n) const {
    if (auto file = call.find(key)) return load_vector(base / *file);
    return rng.normal_vector(n);
  }
};

/// A from the file under key `a`, or a rows x cols normal draw.
Matrix data_matrix(const SpecCall& call, const DataSource& data) {
  if (call.find("a")) return data.matrix(call, "a", 0, 0);
  const long long rows = call.integer("rows");
  const long long cols = call.integer("cols");
  if (rows <= 0 || cols <= 0) {
    throw ConfigError("spec '" + call.name + "': rows and cols must be positive");
  }
  return data.matrix(call, "a", rows, cols);
}

SmoothFunction build_smooth(const std::string& text, const std::filesystem::path& base,
                            std::uint64_t seed) {
  if (trim(text).empty()) throw ConfigError("[problem] smooth is required for additive problems");
  const SpecCall call = SpecCall::parse(text);
  Rng rng(seed);
  DataSource data{base, rng};
  const std::string& n = call.name;

  auto matrix_pair = [&](bool labels) -> std::pair<Matrix, Vector> {
    if (auto file = call.find("file")) {
      if (call.find("a") || call.find("b") || call.find("rows") || call.find("cols")) {
        throw ConfigError("spec '" + n + "': file= excludes a=, b=, rows= and cols=");
      }
      // One matrix [A | b]: the last column holds b.
      const Matrix M = load_matrix(base / *file);
      if (M.cols() < 2) throw ConfigError("matrix file '" + *file + "' needs at least 2 columns");
      return {M.leftCols(M.cols() - 1), M.col(M.cols() - 1)};
    }
    Matrix A = data_matrix(call, data);
    Vector b = data.vector(call, "b", A.rows());
    if (labels && !call.find("b")) b = b.unaryExpr([](double v) { return v >= 0.0 ? 1.0 : -1.0; });
    return {std::move(A), std::move(b)};
  };

  if (n == "corridor") {
    call.expect_only({"dim"});
    const long long dim = call.integer("dim");
    if (dim <= 0) throw ConfigError("corridor: dim must be positive");
    return SmoothFunction::corridor(dim);
  }
  if (n == "quadratic" || n == "leastsquares") {
    call.expect_only({"a", "b", "rows", "cols", "file"});
    auto [A, b] = matrix_pair(false);
    return SmoothFunction::quadratic(std::move(A), std::move(b));
  }
  if (n == "logistic") {
    call.expect_only({"a", "b", "rows", "cols", "file"});
    auto [A, b] = matrix_pair(true);
    return SmoothFunction::logistic(std::move(A), std::move(b));
  }
  if (n == "huberloss") {
    call.expect_only({"a", "b", "rows", "cols", "mu", "file"});
    const double mu = call.real("mu");
    auto [A, b] = matrix_pair(false);
    return SmoothFunction::huber_loss(std::move(A), std::move(b), mu);
  }
  if (n == "corridor_affine" || n == "corridoraffine") {
    call.expect_only({"a", "b", "rows", "cols", "file"});
    auto [A, b] = matrix_pair(false);
    return SmoothFunction::corridor_affine(std::move(A), std::move(b));
  }
  if (n == "cosine" || n == "cosinesum") {
    call.expect_only({"a", "b", "rows", "cols", "file"});
    auto [A, b] = matrix_pair(false);
    return SmoothFunction::cosine_sum(std::move(A), std::move(b));
  }
  if (n == "linear") {
    call.expect_only({"a", "dim", "c0"});
    Vector a;
    if (call.find("a")) {
      a = load_vector(base / *call.find("a"));
    } else {
      const long long dim = call.integer("dim");
      if (dim <= 0) throw ConfigError("linear: dim must be positive");
      a = rng.normal_vector(dim);
    }
    return SmoothFunction::linear(std::move(a), call.real_or("c0", 0.0));
  }
  throw ConfigError("unknown smooth kind '" + n + "'");
}

SmoothMap build_map(const std::string& text, const std::filesystem::path& base,
                    std::uint64_t seed) {
  if (trim(text).empty()) throw ConfigError("[problem] map is required for composite problems");
  const SpecCall call = SpecCall::parse(text);
  const std::string& n = call.name;
  if (n == "affine") {
    call.expect_only({"a", "b", "rows", "cols"});
    Rng rng(seed);
    DataSource data{base, rng};
    Matrix A = data_matrix(call, data);
    Vector b = data.vector(call, "b", A.rows());
    return SmoothMap::affine(std::move(A), std::move(b));
  }
  if (n == "quadratic_map" || n == "quadraticmap" || n == "robust_regression") {
    call.expect_only({"rows", "cols", "scale", "noise"});
    const long long rows = call.integer("rows");
    const long long cols = call.integer("cols");
    if (rows <= 0 || cols <= 0) throw ConfigError(n + ": rows and cols must be positive");
    return instances::robust_regression_map(rows, cols, call.real_or("scale", 0.1),
                                            call.real_or("noise", 0.1), seed);
  }
  throw ConfigError("unknown map kind '" + n + "'");
}

ReferenceSolution analytic_reference(const std::string& text, Eigen::Index dim) {
  const SpecCall call = SpecCall::parse(text);
  if (call.name != "analytic_box") throw ConfigError("unknown reference '" + text + "'");
  call.expect_only({"lo", "hi", "phi_star"});
  return ReferenceSolution::analytic_box(Vector::Constant(dim, call.real("lo")),
                                         Vector::Constant(dim, call.real("hi")),
                                         call.real_or("phi_star", 0.0));
}

// ---- helpers for checks --------------------------------------------------

double min_of(const std::vector<double>& v) {
  double m = kInf;
  for (double x : v) m = std::min(m, x);
  return m;
}

void add_min_check(RunReport& r, const std::string& name, const std::vector<double>& margins) {
  if (margins.empty()) {
    r.notes.push_back(name + ": no steps to check");
    return;
  }
  const double slack = min_of(margins);
  r.checks.push_back({name, slack >= 0.0, slack});
}

std::string method_name(SolverSection::Method m) {
  switch (m) {
    case SolverSection::Method::ProxGrad: return "proxgrad";
    case SolverSection::Method::ProxLinear: return "proxlinear";
    case SolverSection::Method::ProxPoint: return "proxpoint";
  }
  return "?";
}

SamplingOptions sampling(const DiagnosticsSection& d, std::size_t n) {
  SamplingOptions o;
  o.n_samples = n;
  o.seed = d.sample_seed;
  return o;
}

// ---- additive runs -------------------------------------------------------

void run_additive(const ExperimentConfig& cfg, const AdditiveProblem& p, const Vector& x0,
                  RunReport& r) {
  const auto& s = cfg.solver;
  const auto& d = cfg.diagnostics;
  ProxGradConfig pc;
  pc.t = s.t;
  pc.eps = s.eps;
  pc.max_iter = s.max_iter;
  pc.keep_iterates = true;
  pc.timing = s.timing;

  const bool proxpoint = s.method == SolverSection::Method::ProxPoint;
  double t = 0.0;
  if (proxpoint) {
    if (!p.f_convex) throw UnsupportedError("proxpoint requires convex f");
    t = s.t.value_or(p.beta() > 0.0 ? 1.0 / p.beta() : 1.0);
    r.trace = run_proximal_point(p, x0, t, pc, s.inner_tol);
  } else {
    r.trace = run_prox_gradient(p, x0, pc);
    t = r.trace.rows.front().t;
  }
  for (const auto& w : r.trace.warnings) r.notes.push_back("warning: " + w);

  std::vector<double> descent, cert, easy;
  for (std::size_t k = 0; k < r.trace.rows.size(); ++k) {
    const auto& row = r.trace.rows[k];
    if (!std::isnan(row.decrease_residual)) {
      descent.push_back(row.decrease_residual + kDescentTol * (1.0 + std::abs(row.phi)));
    }
    if (!std::isnan(row.stationarity_next)) {
      cert.push_back(row.certificate + kCertificateTol - row.stationarity_next);
    }
    if (!proxpoint) {
      easy.push_back(additive_stationarity(p, r.trace.iterates[k]) + kCertificateTol - row.gnorm);
    }
  }
  if (proxpoint) {
    add_min_check(r, "proximal_point_decrease", descent);
    add_min_check(r, "proximal_point_certificate", cert);
  } else {
    add_min_check(r, "descent", descent);
    add_min_check(r, "certificate", cert);
    add_min_check(r, "easy_bound", easy);
  }

  const bool wants_reference = d.constants || d.tail_rate || d.sandwich;
  if (!p.f_convex) {
    if (wants_reference) r.notes.push_back("convex-case diagnostics skipped: f is not convex");
    return;
  }
  if (proxpoint && !d.tail_rate) return;

  if (cfg.problem.reference == "computed") {
    try {
      r.reference = compute_reference(p, x0, d.reference_accuracy);
    } catch (const ConvergenceError& e) {
      r.notes.push_back(std::string("reference-based checks skipped: ") + e.what());
      return;
    }
  } else {
    r.reference = analytic_reference(cfg.problem.reference, p.dim());
  }
  const ReferenceSolution& ref = *r.reference;
  const double gap0 = r.trace.rows.front().phi - ref.phi_star;
  const double nu = d.nu.value_or(gap0 > 0.0 ? gap0 : 1.0);

  if (!proxpoint) {
    auto slacks = additive_decrease_slacks(p, r.trace, ref);
    for (auto& v : slacks) v += kGeometricTol;
    add_min_check(r, "geometric_decrease", slacks);
  }

  if (d.constants && !proxpoint) {
    try {
      r.constants = measure_constants(p, ref, nu, t, sampling(d, d.samples), s.inner_tol * 100);
      const auto& c = *r.constants;
      r.checks.push_back({"easy_bound_sampled", c.easy_bound_slack + kCertificateTol >= 0.0,
                          c.easy_bound_slack + kCertificateTol});
      if (c.alpha_hat > 0.0 && c.gamma_hat > 0.0) {
        const auto rel = verify_constant_relations(c.alpha_hat, c.gamma_hat, c.L_hat_sub,
                                                   c.L_hat_prox, t, p.beta(), kRelationTol);
        for (const auto& chk : rel.checks()) {
          r.checks.push_back({"relation_" + chk.name, chk.pass, chk.slack});
        }
      } else {
        r.notes.push_back("constant relations skipped: alpha_hat or gamma_hat is zero");
      }
      if (gap0 > s.eps && c.gamma_hat > 0.0) {
        const Vector x0_near = ref.nearest(x0);
        const double dist0_sq = (x0 - x0_near).squaredNorm();
        const double bound =
            std::ceil(iteration_bound(p.beta(), nu, c.gamma_hat, dist0_sq, gap0, s.eps));
        // The bound counts iterations until phi(x_k) - phi* <= eps.
        int hit = -1;
        for (const auto& row : r.trace.rows) {
          if (row.phi - ref.phi_star <= s.eps) {
            hit = row.k;
            break;
          }
        }
        if (hit < 0) {
          r.notes.push_back("iteration_bound: run stopped before the gap reached eps");
        } else {
          r.checks.push_back({"iteration_bound", hit <= bound, bound - hit});
        }
      }
    } catch (const InsufficientDataError& e) {
      r.notes.push_back(std::string("constants skipped: ") + e.what());
    }
  }

  if (d.sandwich && !proxpoint) {
    try {
      SamplingOptions o = sampling(d, d.sandwich_points);
      std::vector<Vector> pts;
      for (auto& smp : draw_sublevel_samples(p, ref, nu, o)) pts.push_back(std::move(smp.x));
      double lower = kInf, upper = kInf;
      for (const auto& sp : verify_sandwich(p, t, pts, s.inner_tol * 100)) {
        lower = std::min(lower, sp.lower_slack + kSandwichTol);
        upper = std::min(upper, sp.upper_slack + kSandwichTol);
      }
      if (pts.empty()) {
        r.notes.push_back("sandwich skipped: no sublevel samples");
      } else {
        r.checks.push_back({"sandwich_lower", lower >= 0.0, lower});
        r.checks.push_back({"sandwich_upper", upper >= 0.0, upper});
      }
    } catch (const InsufficientDataError& e) {
      r.notes.push_back(std::string("sandwich skipped: ") + e.what());
    }
  }

  if (d.tail_rate) {
    try {
      r.tail_rate = fit_tail_rate(r.trace, ref.phi_star, d.tail_fraction);
      if (r.constants && r.constants->gamma_hat > 0.0 && !proxpoint) {
        const double c = 0.5 * t * (2.0 - p.beta() * t);
        const double predicted = 1.0 - c / (c + r.constants->gamma_hat - 0.5 * t);
        const double limit = predicted + kTailMargin;
        r.checks.push_back({"tail_rate", *r.tail_rate <= limit, limit - *r.tail_rate});
      } else {
        r.checks.push_back({"tail_rate", *r.tail_rate < 1.0, 1.0 - *r.tail_rate});
      }
    } catch (const InsufficientDataError& e) {
      r.notes.push_back(std::string("tail rate skipped: ") + e.what());
    }
  }
}

// ---- composite runs ------------------------------------------------------

void run_composite(const ExperimentConfig& cfg, const CompositeProblem& p, const Vector& x0,
                   RunReport& r) {
  const auto& s = cfg.solver;
  const auto& d = cfg.diagnostics;
  ProxLinearConfig pc;
  pc.t0 = s.t;
  pc.q = s.q;
  pc.eps = s.eps;
  pc.max_iter = s.max_iter;
  pc.inner_tol = s.inner_tol;
  pc.sigma = s.sigma;
  pc.keep_iterates = true;
  pc.timing = s.timing;
  r.trace = run_prox_linear(p, x0, pc);

  const double lb = p.L * p.beta;
  const double t0 = s.t.value_or(lb > 0.0 ? 1.0 / lb : 1.0);
  const double floor_t = lb > 0.0 ? std::min(t0, s.q / lb) : t0;
  std::vector<double> decrease, formula, half, floor_margin;
  for (std::size_t k = 0; k < r.trace.rows.size(); ++k) {
    const auto& row = r.trace.rows[k];
    if (!std::isnan(row.decrease_residual)) {
      decrease.push_back(row.decrease_residual + kDescentTol * (1.0 + std::abs(row.phi)));
      floor_margin.push_back(row.t - floor_t);
    }
    const double expected = (3.0 * lb * row.t + 2.0) * row.gnorm;
    formula.push_back(-std::abs(row.certificate - expected));
    half.push_back(dist_to_stationarity(p, r.trace.iterates[k]) + kCertificateTol - 0.5 * row.gnorm);
  }
  add_min_check(r, "sufficient_decrease", decrease);
  add_min_check(r, "certificate_formula", formula);
  add_min_check(r, "half_bound", half);
  if (s.sigma.kind == SigmaPolicy::Kind::Adaptive) {
    add_min_check(r, "backtracking_floor", floor_margin);
  }

  if (!(d.tail_rate || d.constants)) return;
  if (d.constants) r.notes.push_back("constants are measured for additive problems only");
  try {
    r.reference = compute_reference(p, x0, pc, d.reference_accuracy);
  } catch (const ConvergenceError& e) {
    r.notes.push_back(std::string("reference-based checks skipped: ") + e.what());
    return;
  }
  const ReferenceSolution& ref = *r.reference;
  auto slacks = composite_decrease_slacks(p, r.trace, ref, s.sigma);
  for (auto& v : slacks) v += kGeometricTol;
  add_min_check(r, "geometric_decrease", slacks);
  if (d.tail_rate) {
    try {
      r.tail_rate = fit_tail_rate(r.trace, ref.phi_star, d.tail_fraction);
      r.checks.push_back({"tail_rate", *r.tail_rate < 1.0, 1.0 - *r.tail_rate});
    } catch (const InsufficientDataError& e) {
      r.notes.push_back(std::string("tail rate skipped: ") + e.what());
    }
  }
}

}  // namespace

// ---- config --------------------------------------------------------------

std::string ExperimentConfig::echo() const {
  std::ostringstream out;
  const auto& p = problem;
  out << "[problem]\n"
      << "kind = " << (p.kind == ProblemSection::Kind::Additive ? "additive" : "composite") << '\n';
  if (!p.smooth.empty()) out << "smooth = " << p.smooth << '\n';
  out << "penalty = " << p.penalty << '\n';
  if (!p.outer.empty()) out << "outer = " << p.outer << '\n';
  if (!p.map.empty()) out << "map = " << p.map << '\n';
  if (!p.x0.empty()) out << "x0 = " << p.x0 << '\n';
  out << "seed = " << p.seed << '\n';
  if (p.beta) out << "beta = " << format_real(*p.beta) << '\n';
  if (p.additive_form) out << "additive_form = true\n";
  out << "reference = " << p.reference << '\n';

  const auto& s = solver;
  out << "\n[solver]\n"
      << "method = " << method_name(s.method) << '\n';
  if (s.t) out << "t = " << format_real(*s.t) << '\n';
  out << "q = " << format_real(s.q) << '\n'
      << "eps = " << format_real(s.eps) << '\n'
      << "max_iter = " << s.max_iter << '\n'
      << "inner_tol = " << format_real(s.inner_tol) << '\n'
      << "sigma = "
      << (s.sigma.kind == SigmaPolicy::Kind::Adaptive ? std::string("adaptive")
                                                       : format_real(s.sigma.sigma))
      << '\n'
      << "timing = " << (s.timing ? "true" : "false") << '\n';

  const auto& d = diagnostics;
  out << "\n[diagnostics]\n"
      << "sandwich = " << (d.sandwich ? "true" : "false") << '\n'
      << "sandwich_points = " << d.sandwich_points << '\n'
      << "constants = " << (d.constants ? "true" : "false") << '\n'
      << "samples = " << d.samples << '\n'
      << "sample_seed = " << d.sample_seed << '\n';
  if (d.nu) out << "nu = " << format_real(*d.nu) << '\n';
  out << "tail_rate = " << (d.tail_rate ? "true" : "false") << '\n'
      << "tail_fraction = " << format_real(d.tail_fraction) << '\n'
      << "reference_accuracy = " << format_real(d.reference_accuracy) << '\n';
  return out.str();
}

ExperimentConfig parse_config_text(const std::string& text, const std::filesystem::path& base_dir,
                                   std::optional<std::uint64_t> seed_override) {
  std::vector<std::string> errors;
  const auto ini = read_ini(text, errors);
  ExperimentConfig cfg;
  cfg.base_dir = base_dir;

  for (const auto& [name, sec] : ini) {
    if (name != "problem" && name != "solver" && name != "diagnostics") {
      errors.push_back("unknown section [" + name + "]");
    }
  }
  static const Section kEmpty;
  auto section = [&](const std::string& name) -> const Section& {
    auto it = ini.find(name);
    return it == ini.end() ? kEmpty : it->second;
  };

  const Section& ps = section("problem");
  if (!ini.count("problem")) errors.push_back("missing section [problem]");
  reject_unknown(ps, "problem",
                 {"kind", "smooth", "penalty", "outer", "map", "x0", "seed", "beta",
                  "additive_form", "reference"},
                 errors);
  auto& p = cfg.problem;
  bool kind_given = false;
  with_key(ps, "problem", "kind", errors, [&](const std::string& v, const std::string& what) {
    const std::string k = lower(v);
    if (k == "additive") p.kind = ProblemSection::Kind::Additive;
    else if (k == "composite") p.kind = ProblemSection::Kind::Composite;
    else throw ConfigError(what + ": expected additive or composite, got '" + v + "'");
    kind_given = true;
  });
  if (!ps.count("kind") && ini.count("problem")) errors.push_back("[problem] kind is required");
  with_key(ps, "problem", "smooth", errors, [&](const std::string& v, const auto&) { p.smooth = v; });
  with_key(ps, "problem", "penalty", errors, [&](const std::string& v, const auto&) { p.penalty = v; });
  with_key(ps, "problem", "outer", errors, [&](const std::string& v, const auto&) { p.outer = v; });
  with_key(ps, "problem", "map", errors, [&](const std::string& v, const auto&) { p.map = v; });
  with_key(ps, "problem", "x0", errors, [&](const std::string& v, const auto&) { p.x0 = v; });
  with_key(ps, "problem", "seed", errors,
           [&](const std::string& v, const std::string& what) { p.seed = parse_seed(v, what); });
  with_key(ps, "problem", "beta", errors, [&](const std::string& v, const std::string& what) {
    p.beta = parse_positive(v, what);
  });
  with_key(ps, "problem", "additive_form", errors, [&](const std::string& v, const std::string& what) {
    p.additive_form = parse_bool(v, what);
  });
  with_key(ps, "problem", "reference", errors, [&](const std::string& v, const std::string& what) {
    if (lower(v) == "computed") {
      p.reference = "computed";
      return;
    }
    const SpecCall call = SpecCall::parse(v);
    if (call.name != "analytic_box") throw ConfigError(what + ": unknown reference '" + v + "'");
    call.expect_only({"lo", "hi", "phi_star"});
    if (!(call.real("lo") <= call.real("hi"))) throw ConfigError(what + ": requires lo <= hi");
    call.real_or("phi_star", 0.0);
    p.reference = v;
  });
  if (seed_override) p.seed = *seed_override;

  const Section& ss = section("solver");
  reject_unknown(ss, "solver",
                 {"method", "t", "t0", "q", "eps", "max_iter", "inner_tol", "sigma", "timing"},
                 errors);
  auto& s = cfg.solver;
  bool method_given = false;
  with_key(ss, "solver", "method", errors, [&](const std::string& v, const std::string& what) {
    const std::string m = lower(v);
    if (m == "proxgrad") s.method = SolverSection::Method::ProxGrad;
    else if (m == "proxlinear") s.method = SolverSection::Method::ProxLinear;
    else if (m == "proxpoint" || m == "proxpoint-oracle") s.method = SolverSection::Method::ProxPoint;
    else throw ConfigError(what + ": expected proxgrad, proxlinear or proxpoint, got '" + v + "'");
    method_given = true;
  });
  if (ss.count("t") && ss.count("t0")) errors.push_back("[solver] give either t or t0, not both");
  for (const char* key : {"t", "t0"}) {
    with_key(ss, "solver", key, errors, [&](const std::string& v, const std::string& what) {
      s.t = parse_positive(v, what);
    });
  }
  with_key(ss, "solver", "q", errors, [&](const std::string& v, const std::string& what) {
    s.q = parse_real(v, what);
    if (!(s.q > 0.0 && s.q < 1.0)) throw ConfigError("q must lie in (0,1)");
  });
  with_key(ss, "solver", "eps", errors,
           [&](const std::string& v, const std::string& what) { s.eps = parse_positive(v, what); });
  with_key(ss, "solver", "max_iter", errors, [&](const std::string& v, const std::string& what) {
    const long long n = parse_integer(v, what);
    if (n <= 0 || n > 100000000) throw ConfigError(what + " must lie in [1, 1e8]");
    s.max_iter = static_cast<int>(n);
  });
  with_key(ss, "solver", "inner_tol", errors, [&](const std::string& v, const std::string& what) {
    s.inner_tol = parse_positive(v, what);
  });
  with_key(ss, "solver", "sigma", errors, [&](const std::string& v, const std::string& what) {
    if (lower(v) == "adaptive") s.sigma = SigmaPolicy::adaptive();
    else s.sigma = SigmaPolicy::fixed(parse_positive(v, what));
  });
  with_key(ss, "solver", "timing", errors,
           [&](const std::string& v, const std::string& what) { s.timing = parse_bool(v, what); });

  const Section& ds = section("diagnostics");
  reject_unknown(ds, "diagnostics",
                 {"sandwich", "sandwich_points", "constants", "samples", "sample_seed", "nu",
                  "tail_rate", "tail_fraction", "reference_accuracy"},
                 errors);
  auto& d = cfg.diagnostics;
  with_key(ds, "diagnostics", "sandwich", errors,
           [&](const std::string& v, const std::string& what) { d.sandwich = parse_bool(v, what); });
  with_key(ds, "diagnostics", "sandwich_points", errors,
           [&](const std::string& v, const std::string& what) { d.sandwich_points = parse_count(v, what); });
  with_key(ds, "diagnostics", "constants", errors,
           [&](const std::string& v, const std::string& what) { d.constants = parse_bool(v, what); });
  with_key(ds, "diagnostics", "samples", errors,
           [&](const std::string& v, const std::string& what) { d.samples = parse_count(v, what); });
  with_key(ds, "diagnostics", "sample_seed", errors,
           [&](const std::string& v, const std::string& what) { d.sample_seed = parse_seed(v, what); });
  with_key(ds, "diagnostics", "nu", errors,
           [&](const std::string& v, const std::string& what) {
             const double nu = parse_real(v, what);
             if (!(nu > 0.0)) throw ConfigError(what + " must be positive");
             d.nu = nu;
           });
  with_key(ds, "diagnostics", "tail_rate", errors,
           [&](const std::string& v, const std::string& what) { d.tail_rate = parse_bool(v, what); });
  with_key(ds, "diagnostics", "tail_fraction", errors,
           [&](const std::string& v, const std::string& what) {
             d.tail_fraction = parse_real(v, what);
             if (!(d.tail_fraction > 0.0 && d.tail_fraction <= 1.0)) {
               throw ConfigError(what + " must lie in (0,1]");
             }
           });
  with_key(ds, "diagnostics", "reference_accuracy", errors,
           [&](const std::string& v, const std::string& what) {
             d.reference_accuracy = parse_positive(v, what);
           });

  // Cross-field consistency.
  if (kind_given) {
    const bool composite = p.kind == ProblemSection::Kind::Composite;
    if (composite && !p.smooth.empty()) errors.push_back("[problem] smooth is only for additive problems");
    if (!composite && (!p.outer.empty() || !p.map.empty())) {
      errors.push_back("[problem] outer and map are only for composite problems");
    }
    if (composite && p.outer.empty()) errors.push_back("[problem] outer is required for composite problems");
    if (composite && p.reference != "computed") {
      errors.push_back("[problem] composite problems support only reference = computed");
    }
    if (method_given) {
      const bool linear = s.method == SolverSection::Method::ProxLinear;
      if (composite != linear) {
        errors.push_back("[solver] method " + method_name(s.method) + " does not apply to a " +
                         (composite ? "composite" : "additive") + " problem");
      }
    }
  }
  if (!method_given && ini.count("solver") && !ss.count("method")) {
    errors.push_back("[solver] method is required");
  }
  if (!ini.count("solver")) errors.push_back("missing section [solver]");

  // Building the problem surfaces missing files, unknown kinds and dimension
  // mismatches.
  if (kind_given) {
    try {
      const BuiltProblem built = build_problem(cfg);
      const Eigen::Index dim = std::visit([](const auto& pr) { return pr.dim(); }, built);
      build_x0(cfg, dim);
    } catch (const Error& e) {
      errors.push_back(e.what());
    }
  }

  if (!errors.empty()) {
    std::string msg = "invalid config (" + std::to_string(errors.size()) + " problem" +
                      (errors.size() == 1 ? "" : "s") + "):";
    for (const auto& e : errors) msg += "\n  " + e;
    throw ConfigError(msg);
  }
  return cfg;
}

ExperimentConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  std::optional<std::uint64_t> seed;
  if (const char* env = std::getenv("PROXBOUND_SEED")) seed = parse_seed(env, "PROXBOUND_SEED");
  return parse_config_text(buf.str(), path.parent_path().empty() ? "." : path.parent_path(), seed);
}

BuiltProblem build_problem(const ExperimentConfig& cfg) {
  const auto& p = cfg.problem;
  const SeparablePenalty g = SeparablePenalty::parse(p.penalty);
  if (p.kind == ProblemSection::Kind::Additive) {
    SmoothFunction f = build_smooth(p.smooth, cfg.base_dir, p.seed);
    if (p.beta) f = f.with_beta(*p.beta);
    return AdditiveProblem(std::move(f), g);
  }
  const SeparablePenalty h = SeparablePenalty::parse(p.outer);
  CompositeProblem cp(g, h, build_map(p.map, cfg.base_dir, p.seed));
  if (p.beta) cp.beta = *p.beta;
  cp.additive_form = p.additive_form;
  return cp;
}

Vector build_x0(const ExperimentConfig& cfg, Eigen::Index dim) {
  const std::string text = trim(cfg.problem.x0);
  if (text.empty()) return Vector::Zero(dim);
  std::vector<double> values;
  std::string_view rest = text;
  while (true) {
    const auto comma = rest.find(',');
    values.push_back(parse_real(rest.substr(0, comma), "[problem] x0"));
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  if (values.size() == 1) return Vector::Constant(dim, values[0]);
  if (static_cast<Eigen::Index>(values.size()) != dim) {
    throw ConfigError("[problem] x0 has " + std::to_string(values.size()) +
                      " entries but the problem dimension is " + std::to_string(dim));
  }
  return Eigen::Map<const Vector>(values.data(), dim);
}

// ---- running and reporting ---------------------------------------------

bool RunReport::all_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckLine& c) { return c.pass; });
}

std::string RunReport::trace_csv() const {
  std::ostringstream out;
  if (composite) write_composite_csv(out, trace);
  else write_additive_csv(out, trace);
  return out.str();
}

std::string RunReport::summary() const {
  std::ostringstream out;
  out << "# config\n" << config_echo << '\n'
      << "# result\n"
      << "method = " << method << '\n'
      << "status = " << to_string(trace.status) << '\n'
      << "iterations = " << trace.steps() << '\n';
  if (!trace.rows.empty()) {
    const auto& last = trace.last();
    out << "final_phi = " << format_real(last.phi) << '\n'
        << "final_gnorm = " << format_real(last.gnorm) << '\n'
        << "final_certificate = " << format_real(last.certificate) << '\n';
    if (!std::isnan(last.certificate_sharp)) {
      out << "final_certificate_sharp = " << format_real(last.certificate_sharp) << '\n';
    }
  }
  if (reference) out << "phi_star = " << format_real(reference->phi_star) << '\n';
  if (tail_rate) out << "tail_rate = " << format_real(*tail_rate) << '\n';
  if (constants) out << "\n# constants\n" << constants->to_key_value();
  if (!notes.empty()) {
    out << "\n# notes\n";
    for (const auto& n : notes) out << "NOTE " << n << '\n';
  }
  out << "\n# checks\n";
  for (const auto& c : checks) {
    out << "CHECK " << c.name << ": " << (c.pass ? "PASS" : "FAIL")
        << " slack=" << format_real(c.slack) << '\n';
  }
  return out.str();
}

RunReport run_experiment(const ExperimentConfig& cfg) {
  RunReport r;
  r.config_echo = cfg.echo();
  r.method = method_name(cfg.solver.method);
  const BuiltProblem built = build_problem(cfg);
  if (const auto* ap = std::get_if<AdditiveProblem>(&built)) {
    run_additive(cfg, *ap, build_x0(cfg, ap->dim()), r);
  } else {
    const auto& cp = std::get<CompositeProblem>(built);
    r.composite = true;
    run_composite(cfg, cp, build_x0(cfg, cp.dim()), r);
  }
  return r;
}

void emit_report(const RunReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto write = [&](const char* name, const std::string& content) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw Error("cannot write '" + (dir / name).string() + "'");
    out << content;
    if (!out) throw Error("write failed for '" + (dir / name).string() + "'");
  };
  write("trace.csv", report.trace_csv());
  write("report.txt", report.summary());
  if (report.constants) {
    write("constants.txt", report.constants->to_key_value());
    write("constants.csv", ConstantsReport::csv_header() + '\n' + report.constants->csv_row() + '\n');
  } else {
    write("constants.txt", "measured=false\n");
    write("constants.csv", ConstantsReport::csv_header() + '\n');
  }
}

}  // namespace proxbound
