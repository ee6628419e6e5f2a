#include "proxbound/smooth.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace proxbound {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double gram_top_eigenvalue(const Matrix& A) {
  if (A.size() == 0) return 0.0;
  return A.rows() >= A.cols() ? power_iteration_psd(A.transpose() * A)
                              : power_iteration_psd(A * A.transpose());
}

void check_data(const Matrix& A, const Vector& b, const char* what) {
  require_dim(what, A.rows(), b.size());
  if (!A.allFinite() || !b.allFinite()) throw InvalidArgument(std::string(what) + ": non-finite data");
}

// log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }
double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

double power_iteration_psd(const Matrix& m, double rel_tol, int max_iter) {
  const Eigen::Index n = m.rows();
  if (n == 0) return 0.0;
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = 1.0 + static_cast<double>(i) / static_cast<double>(n);
  v.normalize();
  double lambda = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    Vector w = m * v;
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    const double next = v.dot(w);
    v = w / norm;
    if (it > 0 && std::abs(next - lambda) <= rel_tol * std::abs(next)) return std::max(next, norm);
    lambda = next;
  }
  return lambda;
}

double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  return std::sqrt(gram_top_eigenvalue(m));
}

SmoothFunction::SmoothFunction(smooth::FunctionKind kind) : kind_(std::move(kind)) {
  std::visit(overloaded{
                 [&](const smooth::Quadratic& q) {
                   check_data(q.A, q.b, "quadratic");
                   dim_ = q.A.cols();
                   beta_ = gram_top_eigenvalue(q.A);
                 },
                 [&](const smooth::Logistic& q) {
                   check_data(q.A, q.b, "logistic");
                   dim_ = q.A.cols();
                   const double bmax = q.b.size() ? q.b.cwiseAbs().maxCoeff() : 0.0;
                   beta_ = 0.25 * bmax * bmax * gram_top_eigenvalue(q.A);
                 },
                 [&](const smooth::Corridor& c) {
                   if (c.dim <= 0) throw InvalidArgument("corridor: dim must be positive");
                   dim_ = c.dim;
                   beta_ = 2.0;
                 },
                 [&](const smooth::HuberLoss& q) {
                   check_data(q.A, q.b, "huberloss");
                   if (!(q.mu > 0.0)) throw InvalidArgument("huberloss: mu must be positive");
                   dim_ = q.A.cols();
                   beta_ = gram_top_eigenvalue(q.A) / q.mu;
                 },
                 [&](const smooth::Linear& l) {
                   if (!l.a.allFinite() || !std::isfinite(l.c0)) {
                     throw InvalidArgument("linear: non-finite data");
                   }
                   dim_ = l.a.size();
                   beta_ = 0.0;
                 },
                 [&](const smooth::CorridorAffine& q) {
                   check_data(q.A, q.b, "corridor_affine");
                   dim_ = q.A.cols();
                   beta_ = 2.0 * gram_top_eigenvalue(q.A);
                 },
                 [&](const smooth::CosineSum& q) {
                   check_data(q.A, q.b, "cosine");
                   dim_ = q.A.cols();
                   beta_ = gram_top_eigenvalue(q.A);
                 },
             },
             kind_);
  if (dim_ <= 0) throw InvalidArgument("smooth function must have positive dimension");
}

SmoothFunction SmoothFunction::with_beta(double beta) const {
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw InvalidArgument("beta must be finite and >= 0");
  SmoothFunction copy = *this;
  copy.beta_ = beta;
  return copy;
}

std::string SmoothFunction::name() const {
  return std::visit(overloaded{
                        [](const smooth::Quadratic&) { return std::string("quadratic"); },
                        [](const smooth::Logistic&) { return std::string("logistic"); },
                        [](const smooth::Corridor&) { return std::string("corridor"); },
                        [](const smooth::HuberLoss&) { return std::string("huberloss"); },
                        [](const smooth::Linear&) { return std::string("linear"); },
                        [](const smooth::CorridorAffine&) { return std::string("corridor_affine"); },
                        [](const smooth::CosineSum&) { return std::string("cosine"); },
                    },
                    kind_);
}

bool SmoothFunction::convex() const { return !std::holds_alternative<smooth::CosineSum>(kind_); }

double SmoothFunction::eval(const Vector& x) const {
  require_dim("smooth function", dim_, x.size());
  return std::visit(
      overloaded{
          [&](const smooth::Quadratic& q) { return 0.5 * (q.A * x - q.b).squaredNorm(); },
          [&](const smooth::Logistic& q) {
            const Vector z = q.A * x;
            double s = 0.0;
            for (Eigen::Index i = 0; i < z.size(); ++i) s += softplus(-q.b[i] * z[i]);
            return s;
          },
          [&](const smooth::Corridor&) {
            return (x.array().abs() - 1.0).max(0.0).square().sum();
          },
          [&](const smooth::HuberLoss& q) {
            const Vector r = q.A * x - q.b;
            double s = 0.0;
            for (Eigen::Index i = 0; i < r.size(); ++i) {
              const double a = std::abs(r[i]);
              s += a <= q.mu ? r[i] * r[i] / (2.0 * q.mu) : a - 0.5 * q.mu;
            }
            return s;
          },
          [&](const smooth::Linear& l) { return l.a.dot(x) + l.c0; },
          [&](const smooth::CorridorAffine& q) {
            return ((q.A * x - q.b).array().abs() - 1.0).max(0.0).square().sum();
          },
          [&](const smooth::CosineSum& q) { return (q.A * x - q.b).array().cos().sum(); },
      },
      kind_);
}

Vector SmoothFunction::grad(const Vector& x) const {
  require_dim("smooth function", dim_, x.size());
  auto corridor_slope = [](const Vector& r) {
    Vector g(r.size());
    for (Eigen::Index i = 0; i < r.size(); ++i) {
      const double excess = std::abs(r[i]) - 1.0;
      g[i] = excess > 0.0 ? (r[i] > 0 ? 2.0 : -2.0) * excess : 0.0;
    }
    return g;
  };
  return std::visit(
      overloaded{
          [&](const smooth::Quadratic& q) -> Vector { return q.A.transpose() * (q.A * x - q.b); },
          [&](const smooth::Logistic& q) -> Vector {
            const Vector z = q.A * x;
            Vector s(z.size());
            for (Eigen::Index i = 0; i < z.size(); ++i) s[i] = -q.b[i] * sigmoid(-q.b[i] * z[i]);
            return q.A.transpose() * s;
          },
          [&](const smooth::Corridor&) -> Vector { return corridor_slope(x); },
          [&](const smooth::HuberLoss& q) -> Vector {
            const Vector r = q.A * x - q.b;
            return q.A.transpose() * (r / q.mu).cwiseMax(-1.0).cwiseMin(1.0);
          },
          [&](const smooth::Linear& l) -> Vector { return l.a; },
          [&](const smooth::CorridorAffine& q) -> Vector {
            return q.A.transpose() * corridor_slope(q.A * x - q.b);
          },
          [&](const smooth::CosineSum& q) -> Vector {
            return -(q.A.transpose() * (q.A * x - q.b).array().sin().matrix());
          },
      },
      kind_);
}

SmoothMap::SmoothMap(smooth::MapKind kind) : kind_(std::move(kind)) {
  std::visit(overloaded{
                 [&](const smooth::Affine& a) {
                   check_data(a.A, a.b, "affine map");
                   n_ = a.A.cols();
                   m_ = a.A.rows();
                   jac_beta_ = 0.0;
                 },
                 [&](smooth::QuadraticMap& q) {
                   check_data(q.a, q.b, "quadratic map");
                   n_ = q.a.cols();
                   m_ = q.a.rows();
                   if (static_cast<Eigen::Index>(q.Q.size()) != m_) {
                     throw DimensionError("quadratic map: number of Q_i", m_,
                                          static_cast<std::ptrdiff_t>(q.Q.size()));
                   }
                   double sum = 0.0;
                   for (Matrix& Qi : q.Q) {
                     if (Qi.rows() != n_ || Qi.cols() != n_) {
                       throw DimensionError("quadratic map: Q_i size", n_, Qi.rows());
                     }
                     Qi = 0.5 * (Qi + Qi.transpose()).eval();
                     const double s = spectral_norm(Qi);
                     sum += s * s;
                   }
                   jac_beta_ = std::sqrt(sum);
                 },
             },
             kind_);
  if (n_ <= 0 || m_ <= 0) throw InvalidArgument("smooth map must have positive dimensions");
}

std::string SmoothMap::name() const {
  return std::holds_alternative<smooth::Affine>(kind_) ? "affine" : "quadratic_map";
}

Vector SmoothMap::eval(const Vector& x) const {
  require_dim("smooth map", n_, x.size());
  return std::visit(overloaded{
                        [&](const smooth::Affine& a) -> Vector { return a.A * x + a.b; },
                        [&](const smooth::QuadraticMap& q) -> Vector {
                          Vector v = q.a * x + q.b;
                          for (Eigen::Index i = 0; i < m_; ++i) {
                            v[i] += 0.5 * x.dot(q.Q[static_cast<std::size_t>(i)] * x);
                          }
                          return v;
                        },
                    },
                    kind_);
}

Matrix SmoothMap::jacobian(const Vector& x) const {
  require_dim("smooth map", n_, x.size());
  return std::visit(overloaded{
                        [&](const smooth::Affine& a) -> Matrix { return a.A; },
                        [&](const smooth::QuadraticMap& q) -> Matrix {
                          Matrix J = q.a;
                          for (Eigen::Index i = 0; i < m_; ++i) {
                            J.row(i) += (q.Q[static_cast<std::size_t>(i)] * x).transpose();
                          }
                          return J;
                        },
                    },
                    kind_);
}

double fd_check(const SmoothFunction& f, const Vector& x, double h) {
  if (!(h > 0.0)) throw InvalidArgument("fd_check: h must be positive");
  const Vector g = f.grad(x);
  double worst = 0.0;
  Vector xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    xp[i] = x[i] + h;
    const double up = f.eval(xp);
    xp[i] = x[i] - h;
    const double down = f.eval(xp);
    xp[i] = x[i];
    const double fd = (up - down) / (2.0 * h);
    worst = std::max(worst, std::abs(g[i] - fd) / (1.0 + std::abs(g[i])));
  }
  return worst;
}

double fd_check(const SmoothMap& c, const Vector& x, double h) {
  if (!(h > 0.0)) throw InvalidArgument("fd_check: h must be positive");
  const Matrix J = c.jacobian(x);
  double worst = 0.0;
  Vector xp = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    xp[j] = x[j] + h;
    const Vector up = c.eval(xp);
    xp[j] = x[j] - h;
    const Vector down = c.eval(xp);
    xp[j] = x[j];
    const Vector fd = (up - down) / (2.0 * h);
    for (Eigen::Index i = 0; i < J.rows(); ++i) {
      worst = std::max(worst, std::abs(J(i, j) - fd[i]) / (1.0 + std::abs(J(i, j))));
    }
  }
  return worst;
}

Matrix load_matrix(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open matrix file '" + path.string() + "'");
  long long rows = 0, cols = 0;
  if (!(in >> rows >> cols) || rows <= 0 || cols <= 0) {
    throw ConfigError("matrix file '" + path.string() + "': bad 'rows cols' header");
  }
  Matrix m(rows, cols);
  for (long long i = 0; i < rows; ++i) {
    for (long long j = 0; j < cols; ++j) {
      std::string token;
      if (!(in >> token)) {
        throw ConfigError("matrix file '" + path.string() + "': expected " +
                          std::to_string(rows * cols) + " entries");
      }
      std::istringstream ts(token);
      double v = 0.0;
      if (!(ts >> v) || !std::isfinite(v)) {
        throw ConfigError("matrix file '" + path.string() + "': bad entry '" + token + "'");
      }
      m(i, j) = v;
    }
  }
  std::string extra;
  if (in >> extra) throw ConfigError("matrix file '" + path.string() + "': trailing data");
  return m;
}

Vector load_vector(const std::filesystem::path& path) {
  Matrix m = load_matrix(path);
  if (m.cols() != 1 && m.rows() != 1) {
    throw ConfigError("vector file '" + path.string() + "' must have one row or one column");
  }
  return Eigen::Map<const Vector>(m.data(), m.size());
}

void save_matrix(const std::filesystem::path& path, const Matrix& m) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write matrix file '" + path.string() + "'");
  out << m.rows() << ' ' << m.cols() << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      out << (j ? " " : "") << format_real(m(i, j));
    }
    out << '\n';
  }
}

}  // namespace proxbound
