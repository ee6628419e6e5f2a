#include "oracles.hpp"

#include "proxbound/smooth.hpp"

#include <catch_amalgamated.hpp>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace proxbound;
using Catch::Approx;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

double lambda_max(const Matrix& A) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(A.transpose() * A);
  return es.eigenvalues().maxCoeff();
}

std::vector<SmoothFunction> function_catalog(oracle::Gen& gen) {
  const Matrix A = gen.normal_matrix(6, 4);
  const Vector b = gen.normal_vector(6);
  Vector labels = gen.normal_vector(6);
  for (Eigen::Index i = 0; i < labels.size(); ++i) labels[i] = labels[i] >= 0 ? 1.0 : -1.0;
  return {SmoothFunction::quadratic(A, b),
          SmoothFunction::logistic(A, labels),
          SmoothFunction::corridor(4),
          SmoothFunction::huber_loss(A, b, 0.3),
          SmoothFunction::linear(gen.normal_vector(4), 1.5),
          SmoothFunction::corridor_affine(A, b),
          SmoothFunction::cosine_sum(A, b)};
}

// Distance of every coordinate of A x - b (or x) from the corridor kinks.
bool near_kink(const SmoothFunction& f, const Vector& x, double margin) {
  auto check = [&](const Vector& r) { return ((r.cwiseAbs().array() - 1.0).abs() < margin).any(); };
  if (std::holds_alternative<smooth::Corridor>(f.kind())) return check(x);
  if (const auto* c = std::get_if<smooth::CorridorAffine>(&f.kind())) return check(c->A * x - c->b);
  if (const auto* h = std::get_if<smooth::HuberLoss>(&f.kind())) {
    const Vector r = h->A * x - h->b;
    return ((r.cwiseAbs().array() - h->mu).abs() < margin).any();
  }
  return false;
}

}  // namespace

TEST_CASE("smooth function values and gradients", "[smooth]") {
  const auto cor = SmoothFunction::corridor(1);
  CHECK(cor.eval(vec({3.0})) == 4.0);
  CHECK(cor.eval(vec({0.5})) == 0.0);
  CHECK(cor.grad(vec({3.0}))[0] == 4.0);
  CHECK(cor.grad(vec({0.5}))[0] == 0.0);
  CHECK(cor.beta() == 2.0);

  const auto q = SmoothFunction::quadratic(Matrix::Identity(2, 2), Vector::Zero(2));
  CHECK(q.eval(vec({1.0, 2.0})) == 2.5);
  CHECK(q.grad(vec({1.0, 2.0})) == vec({1.0, 2.0}));
  CHECK_THROWS_AS(q.eval(vec({1.0})), DimensionError);

  const double fd = oracle::central_gradient([&](const Vector& x) { return cor.eval(x); },
                                             vec({3.0}), 1e-6)[0];
  CHECK(fd == Approx(4.0).epsilon(1e-8));

  const auto lin = SmoothFunction::linear(vec({1.0, -2.0}), 3.0);
  CHECK(lin.eval(vec({1.0, 1.0})) == 2.0);
  CHECK(lin.beta() == 0.0);
}

TEST_CASE("declared beta values", "[smooth]") {
  oracle::Gen gen(3);
  const Matrix A = gen.normal_matrix(15, 7);
  const Vector b = gen.normal_vector(15);
  const double lmax = lambda_max(A);
  CHECK(SmoothFunction::quadratic(A, b).beta() == Approx(lmax).epsilon(1e-8));
  Vector labels = Vector::Ones(15);
  CHECK(SmoothFunction::logistic(A, labels).beta() == Approx(0.25 * lmax).epsilon(1e-8));
  CHECK(SmoothFunction::huber_loss(A, b, 0.5).beta() == Approx(lmax / 0.5).epsilon(1e-8));
  CHECK(SmoothFunction::corridor_affine(A, b).beta() == Approx(2.0 * lmax).epsilon(1e-8));
  CHECK(SmoothFunction::quadratic(A, b).with_beta(3.0).beta() == 3.0);
  CHECK_THROWS_AS(SmoothFunction::quadratic(A, b).with_beta(-1.0), InvalidArgument);
  CHECK(power_iteration_psd(A.transpose() * A) == Approx(lmax).epsilon(1e-8));
  CHECK(spectral_norm(A) == Approx(std::sqrt(lmax)).epsilon(1e-8));
}

TEST_CASE("smooth function properties", "[smooth][property]") {
  oracle::Gen gen(77);
  for (const auto& f : function_catalog(gen)) {
    INFO(f.name());

    // Gradient against central differences away from kinks.
    int checked = 0;
    for (int i = 0; checked < 100 && i < 1000; ++i) {
      const Vector x = gen.vector(4, -3.0, 3.0);
      if (near_kink(f, x, 1e-4)) continue;
      ++checked;
      CHECK(fd_check(f, x, 1e-6) <= 1e-5);
      const Vector fd = oracle::central_gradient([&](const Vector& z) { return f.eval(z); }, x, 1e-6);
      const Vector an = f.grad(x);
      for (Eigen::Index j = 0; j < x.size(); ++j) {
        CHECK(std::abs(an[j] - fd[j]) <= 1e-5 * (1.0 + std::abs(an[j])));
      }
    }
    CHECK(checked == 100);

    for (int i = 0; i < 1000; ++i) {
      const Vector x = gen.vector(4, -10.0, 10.0);
      const Vector y = gen.vector(4, -10.0, 10.0);
      const Vector gx = f.grad(x);
      const Vector gy = f.grad(y);
      CHECK((gx - gy).norm() <= f.beta() * (1.0 + 1e-9) * (x - y).norm() + 1e-12);
      if (f.convex()) CHECK((gx - gy).dot(x - y) >= -1e-12 * (1.0 + gx.norm() + gy.norm()));
    }
  }
}

TEST_CASE("the cosine sum is not convex", "[smooth]") {
  const auto f = SmoothFunction::cosine_sum(Matrix::Identity(1, 1), Vector::Zero(1));
  CHECK_FALSE(f.convex());
  // cos is concave near 0: the midpoint lies above the chord.
  CHECK(f.eval(vec({0.0})) > 0.5 * (f.eval(vec({-1.0})) + f.eval(vec({1.0}))));
}

TEST_CASE("smooth maps", "[smooth]") {
  const Matrix A = (Matrix(2, 2) << 1, 2, 3, 4).finished();
  const auto aff = SmoothMap::affine(A, vec({1.0, -1.0}));
  const auto [v, J] = aff.eval_jac(vec({1.0, 1.0}));
  CHECK(v == vec({4.0, 6.0}));
  CHECK(J == A);
  CHECK(aff.jac_beta() == 0.0);

  // c(x) = x^2 - 1 written as 1/2 x^T (2) x + 0 x - 1
  const auto sq = SmoothMap::quadratic_map({2.0 * Matrix::Identity(1, 1)}, Matrix::Zero(1, 1),
                                           vec({-1.0}));
  const auto [v1, J1] = sq.eval_jac(vec({1.0}));
  CHECK(v1[0] == 0.0);
  CHECK(J1(0, 0) == 2.0);
  CHECK(sq.jac_beta() == Approx(2.0));
  const Matrix fdJ = oracle::central_jacobian([&](const Vector& x) { return sq.eval(x); },
                                              vec({1.0}), 1e-6);
  CHECK(fdJ(0, 0) == Approx(2.0).epsilon(1e-8));

  const auto zero = SmoothMap::quadratic_map({Matrix::Zero(3, 3), Matrix::Zero(3, 3)},
                                             Matrix::Zero(2, 3), Vector::Zero(2));
  const auto [v0, J0] = zero.eval_jac(vec({4.0, -1.0, 2.0}));
  CHECK(v0.isZero(0.0));
  CHECK(J0.isZero(0.0));
  CHECK_THROWS_AS(aff.eval(vec({1.0})), DimensionError);
}

TEST_CASE("smooth map properties", "[smooth][property]") {
  oracle::Gen gen(91);
  std::vector<Matrix> Q;
  for (int i = 0; i < 5; ++i) Q.push_back(gen.normal_matrix(4, 4));
  const auto c = SmoothMap::quadratic_map(Q, gen.normal_matrix(5, 4), gen.normal_vector(5));
  const auto aff = SmoothMap::affine(gen.normal_matrix(5, 4), gen.normal_vector(5));
  for (int i = 0; i < 100; ++i) {
    const Vector x = gen.vector(4, -3.0, 3.0);
    CHECK(fd_check(c, x, 1e-6) <= 1e-5);
    const Matrix fd = oracle::central_jacobian([&](const Vector& z) { return c.eval(z); }, x, 1e-6);
    CHECK((fd - c.jacobian(x)).cwiseAbs().maxCoeff() <= 1e-5 * (1.0 + c.jacobian(x).cwiseAbs().maxCoeff()));
  }
  for (int i = 0; i < 1000; ++i) {
    const Vector x = gen.vector(4, -10.0, 10.0);
    const Vector y = gen.vector(4, -10.0, 10.0);
    const double jdiff = spectral_norm(c.jacobian(x) - c.jacobian(y));
    CHECK(jdiff <= c.jac_beta() * (1.0 + 1e-9) * (x - y).norm() + 1e-12);
    CHECK((aff.jacobian(x) - aff.jacobian(y)).isZero(0.0));
  }
}

TEST_CASE("finite-difference check at a corridor kink", "[smooth]") {
  const auto cor = SmoothFunction::corridor(1);
  CHECK(fd_check(cor, vec({3.0}), 1e-6) <= 1e-5);
  // At |x| = 1 the gradient is still defined (0) but the second derivative
  // jumps; the measure is reported, not asserted against a tolerance.
  const double at_kink = fd_check(cor, vec({1.0}), 1e-6);
  CHECK(std::isfinite(at_kink));
  const auto q = SmoothFunction::quadratic(Matrix::Identity(3, 3), vec({1.0, 2.0, 3.0}));
  CHECK(fd_check(q, vec({0.5, -0.5, 2.0}), 1e-6) <= 1e-8);
}

TEST_CASE("matrix files", "[smooth]") {
  const auto dir = std::filesystem::temp_directory_path() / "proxbound_test_smooth";
  std::filesystem::create_directories(dir);
  const Matrix M = (Matrix(2, 3) << 1.5, -2, 3e-7, 4, 5, 6.25).finished();
  save_matrix(dir / "m.txt", M);
  CHECK(load_matrix(dir / "m.txt") == M);
  save_matrix(dir / "v.txt", vec({1.0, 2.0, 3.0}));
  CHECK(load_vector(dir / "v.txt") == vec({1.0, 2.0, 3.0}));
  CHECK_THROWS_AS(load_vector(dir / "m.txt"), ConfigError);
  CHECK_THROWS_AS(load_matrix(dir / "absent.txt"), ConfigError);
  {
    std::ofstream bad(dir / "bad.txt");
    bad << "2 2\n1 2 3\n";
  }
  CHECK_THROWS_AS(load_matrix(dir / "bad.txt"), ConfigError);
  std::filesystem::remove_all(dir);
}
