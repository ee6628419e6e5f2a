#pragma once

// Reference computations used by the tests. They deliberately avoid the
// library's own routines: brute-force grids, finite differences and a small
// generator of random test data.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <algorithm>
#include <functional>
#include <limits>
#include <vector>

namespace oracle {

/// argmin of fn over the grid lo, lo + step, ..., hi.
inline double grid_argmin(const std::function<double(double)>& fn, double lo, double hi,
                          double step) {
  double best_x = lo;
  double best = std::numeric_limits<double>::infinity();
  const auto n = static_cast<long long>(std::floor((hi - lo) / step));
  for (long long i = 0; i <= n; ++i) {
    const double x = lo + static_cast<double>(i) * step;
    const double v = fn(x);
    if (v < best) {
      best = v;
      best_x = x;
    }
  }
  return best_x;
}

/// Exact argmin on [lo, hi] of a function that is quadratic between
/// consecutive breakpoints. Each piece is recovered from three evaluations;
/// candidates are the breakpoints, the ends and the interior piece vertices.
inline double piecewise_quadratic_argmin(const std::function<double(double)>& fn,
                                         std::vector<double> breaks, double lo, double hi) {
  breaks.push_back(lo);
  breaks.push_back(hi);
  std::sort(breaks.begin(), breaks.end());
  std::vector<double> cand;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    const double a = std::max(breaks[i], lo), b = std::min(breaks[i + 1], hi);
    if (!(b > a)) continue;
    cand.push_back(a);
    cand.push_back(b);
    const double m = 0.5 * (a + b), h = 0.25 * (b - a);
    const double fm = fn(m), fl = fn(m - h), fr = fn(m + h);
    const double curv = (fr - 2.0 * fm + fl) / (h * h);
    if (curv > 0.0) {
      const double v = m - 0.5 * (fr - fl) / h / curv;
      if (v > a && v < b) cand.push_back(v);
    }
  }
  double best_x = lo;
  double best = std::numeric_limits<double>::infinity();
  for (double x : cand) {
    const double v = fn(x);
    if (v < best) {
      best = v;
      best_x = x;
    }
  }
  return best_x;
}

inline double grid_min(const std::function<double(double)>& fn, double lo, double hi, double step) {
  return fn(grid_argmin(fn, lo, hi, step));
}

/// Central-difference gradient.
inline Eigen::VectorXd central_gradient(const std::function<double(const Eigen::VectorXd&)>& fn,
                                        const Eigen::VectorXd& x, double h) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Eigen::VectorXd xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    g[i] = (fn(xp) - fn(xm)) / (2.0 * h);
  }
  return g;
}

/// Central-difference Jacobian of a vector map.
inline Eigen::MatrixXd central_jacobian(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& fn, const Eigen::VectorXd& x,
    double h) {
  const Eigen::VectorXd f0 = fn(x);
  Eigen::MatrixXd J(f0.size(), x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    Eigen::VectorXd xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    J.col(j) = (fn(xp) - fn(xm)) / (2.0 * h);
  }
  return J;
}

/// splitmix64: a tiny, well-mixed generator for test data.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal() {
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }
  Eigen::VectorXd vector(Eigen::Index n, double lo, double hi) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = uniform(lo, hi);
    return v;
  }
  Eigen::VectorXd normal_vector(Eigen::Index n) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = normal();
    return v;
  }
  Eigen::MatrixXd normal_matrix(Eigen::Index r, Eigen::Index c) {
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
      for (Eigen::Index j = 0; j < c; ++j) m(i, j) = normal();
    return m;
  }

 private:
  std::uint64_t state_;
};

}  // namespace oracle
