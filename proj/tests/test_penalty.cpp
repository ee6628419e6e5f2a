#include "oracles.hpp"

#include "proxbound/penalty.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>

using namespace proxbound;
using Catch::Approx;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

std::vector<SeparablePenalty> catalog() {
  return {SeparablePenalty::zero(),
          SeparablePenalty::abs_value(0.7),
          SeparablePenalty::elastic_net(0.5, 1.5),
          SeparablePenalty::box(-1.0, 2.0),
          SeparablePenalty::epsilon_insensitive(1.2, 0.5),
          SeparablePenalty::check(1.0, 0.3),
          SeparablePenalty::huber_envelope(0.8, 0.6)};
}

// Scalar value of a one-coordinate penalty, for the grid oracle.
double scalar(const SeparablePenalty& g, double y) { return g.eval(vec({y})); }

}  // namespace

TEST_CASE("penalty values", "[penalty]") {
  CHECK(SeparablePenalty::abs_value(1.0).eval(vec({2.0, -3.0})) == 5.0);
  CHECK(SeparablePenalty::box(0.0, 1.0).eval(vec({0.5, 2.0})) == kInf);
  CHECK(SeparablePenalty::box(0.0, 1.0).eval(vec({0.5, 1.0})) == 0.0);
  CHECK(SeparablePenalty::elastic_net(1.0, 2.0).eval(vec({-2.0})) == Approx(2.0 + 4.0));
  CHECK(SeparablePenalty::epsilon_insensitive(2.0, 0.5).eval(vec({1.5, 0.2})) == Approx(2.0));
  CHECK(SeparablePenalty::check(1.0, 0.25).eval(vec({2.0, -2.0})) == Approx(0.5 + 1.5));

  SECTION("huber envelope of |.| matches the infimal convolution on a grid") {
    const double v = SeparablePenalty::huber_envelope(1.0, 1.0).eval(vec({2.0}));
    CHECK(v == Approx(1.5).margin(1e-12));
    const double grid = oracle::grid_min(
        [](double y) { return std::abs(y) + 0.5 * (y - 2.0) * (y - 2.0); }, -4.0, 4.0, 1e-4);
    CHECK(v == Approx(grid).margin(1e-7));
  }

  SECTION("weights scale the multiplier per coordinate") {
    SeparablePenalty g(penalty::AbsValue{1.0}, vec({1.0, 3.0}));
    CHECK(g.eval(vec({2.0, -1.0})) == Approx(5.0));
    CHECK_THROWS_AS(g.eval(vec({1.0})), DimensionError);
    CHECK_THROWS_AS(SeparablePenalty(penalty::AbsValue{1.0}, vec({1.0, -1.0})), InvalidArgument);
  }

  SECTION("parameter validation") {
    CHECK_THROWS_AS(SeparablePenalty::abs_value(0.0), InvalidArgument);
    CHECK_THROWS_AS(SeparablePenalty::check(1.0, 1.0), InvalidArgument);
    CHECK_THROWS_AS(SeparablePenalty::box(1.0, -1.0), InvalidArgument);
    CHECK_THROWS_AS(SeparablePenalty::huber_envelope(1.0, -2.0), InvalidArgument);
  }
}

TEST_CASE("penalty prox examples", "[penalty]") {
  const auto abs1 = SeparablePenalty::abs_value(1.0);
  const double grid = oracle::grid_argmin(
      [](double y) { return std::abs(y) + (y - 2.0) * (y - 2.0) / (2 * 0.5); }, -4.0, 4.0, 1e-4);
  CHECK(abs1.prox(vec({2.0}), 0.5)[0] == Approx(1.5).margin(1e-12));
  CHECK(abs1.prox(vec({2.0}), 0.5)[0] == Approx(grid).margin(1e-3));
  CHECK(abs1.prox(vec({0.0}), 3.0)[0] == 0.0);
  const Vector p = SeparablePenalty::box(-1.0, 1.0).prox(vec({3.0, -0.2}), 7.0);
  CHECK(p[0] == 1.0);
  CHECK(p[1] == -0.2);
  CHECK(soft_threshold(0.5, 0.5) == 0.0);
  CHECK(soft_threshold(-0.5, 0.5) == 0.0);
  CHECK_THROWS_AS(abs1.prox(vec({1.0}), 0.0), InvalidArgument);
}

TEST_CASE("subgradient intervals", "[penalty]") {
  const auto abs1 = SeparablePenalty::abs_value(1.0);
  auto at0 = abs1.subgradient_intervals(vec({0.0}))[0];
  CHECK(at0.lo == -1.0);
  CHECK(at0.hi == 1.0);
  auto at2 = abs1.subgradient_intervals(vec({2.0}))[0];
  CHECK(at2.lo == 1.0);
  CHECK(at2.hi == 1.0);

  SECTION("vapnik loss at the edge of its flat zone, against one-sided slopes") {
    const auto g = SeparablePenalty::epsilon_insensitive(1.0, 0.5);
    const auto iv = g.subgradient_intervals(vec({0.5}))[0];
    const double h = 1e-7;
    const double left = (scalar(g, 0.5) - scalar(g, 0.5 - h)) / h;
    const double right = (scalar(g, 0.5 + h) - scalar(g, 0.5)) / h;
    CHECK(iv.lo == Approx(left).margin(1e-6));
    CHECK(iv.hi == Approx(right).margin(1e-6));
    CHECK(iv.lo == 0.0);
    CHECK(iv.hi == 1.0);
  }

  SECTION("box boundary gives a half-line, outside is an error") {
    const auto box = SeparablePenalty::box(-1.0, 1.0);
    const auto iv = box.subgradient_intervals(vec({1.0, -1.0, 0.0}));
    CHECK(iv[0].lo == 0.0);
    CHECK(iv[0].hi == kInf);
    CHECK(iv[1].lo == -kInf);
    CHECK(iv[1].hi == 0.0);
    CHECK(iv[2].lo == 0.0);
    CHECK(iv[2].hi == 0.0);
    CHECK_THROWS_AS(box.subgradient_intervals(vec({1.5})), DomainError);
  }
}

TEST_CASE("moreau envelope and its gradient", "[penalty]") {
  const auto abs1 = SeparablePenalty::abs_value(1.0);
  const double grid = oracle::grid_min(
      [](double y) { return std::abs(y) + 0.5 * (y - 2.0) * (y - 2.0); }, -4.0, 4.0, 1e-4);
  CHECK(abs1.moreau_envelope(vec({2.0}), 1.0) == Approx(1.5));
  CHECK(abs1.moreau_envelope(vec({2.0}), 1.0) == Approx(grid).margin(1e-7));
  CHECK(SeparablePenalty::zero().moreau_envelope(vec({5.0}), 2.5) == 0.0);
  CHECK(abs1.moreau_envelope(vec({0.3}), 1.0) == Approx(0.045));
  CHECK(abs1.moreau_grad(vec({2.0}), 1.0)[0] == Approx(1.0));
  CHECK(abs1.moreau_grad(vec({0.3}), 1.0)[0] == Approx(0.3));
  CHECK(abs1.moreau_grad(vec({0.0}), 1.0)[0] == 0.0);
  CHECK(SeparablePenalty::box(-1, 1).moreau_grad(vec({0.4}), 3.0)[0] == 0.0);
}

TEST_CASE("moreau decomposition", "[penalty]") {
  CHECK(SeparablePenalty::abs_value(1.0).moreau_decomposition_residual(vec({2.0}), 1.0) == 0.0);
  CHECK(SeparablePenalty::abs_value(1.0).moreau_decomposition_residual(vec({0.0}), 0.5) == 0.0);
  CHECK(SeparablePenalty::abs_value(3.0).moreau_decomposition_residual(vec({-7.0}), 2.0) <= 1e-12);

  // The conjugate of lambda |.| is the indicator of [-lambda, lambda].
  const Vector z = vec({-3.0, 0.2, 5.0});
  const Vector proj = SeparablePenalty::abs_value(2.0).conjugate_prox(z, 0.7);
  CHECK(proj[0] == -2.0);
  CHECK(proj[1] == 0.2);
  CHECK(proj[2] == 2.0);

  oracle::Gen gen(11);
  for (const auto& g : catalog()) {
    if (!g.has_conjugate_prox()) {
      CHECK_THROWS_AS(g.moreau_decomposition_residual(vec({1.0}), 1.0), UnsupportedError);
      continue;
    }
    for (int i = 0; i < 200; ++i) {
      const Vector x = gen.vector(4, -10.0, 10.0);
      const double t = gen.uniform(0.05, 5.0);
      INFO(g.describe() << " t=" << t);
      CHECK(g.moreau_decomposition_residual(x, t) <= 1e-12 * (1.0 + x.norm()));
    }
  }
}

TEST_CASE("spec strings", "[penalty]") {
  for (const auto& g : catalog()) {
    const auto back = SeparablePenalty::parse(g.describe());
    CHECK(back.describe() == g.describe());
  }
  CHECK(SeparablePenalty::parse("absvalue(lambda=0.1)").eval(vec({-2.0})) == Approx(0.2));
  CHECK(SeparablePenalty::parse("Box(lo=-1, hi=1)").is_indicator());
  CHECK(SeparablePenalty::parse("quantile(lambda=1,tau=0.5)").name() ==
        SeparablePenalty::check(1.0, 0.5).name());
  CHECK_THROWS_AS(SeparablePenalty::parse("nuclear(lambda=1)"), ConfigError);
  CHECK_THROWS_AS(SeparablePenalty::parse("absvalue(lambda=1,tau=2)"), ConfigError);
  CHECK_THROWS_AS(SeparablePenalty::parse("absvalue(lambda=abc)"), ConfigError);
  CHECK_THROWS(SeparablePenalty::parse("check(lambda=1,tau=1.5)"));
}

TEST_CASE("prox properties over the catalog", "[penalty][property]") {
  oracle::Gen gen(2024);
  for (const auto& g : catalog()) {
    INFO(g.describe());

    SECTION("nonexpansive: " + g.describe()) {
      for (int i = 0; i < 1000; ++i) {
        const Vector x = gen.vector(3, -6.0, 6.0);
        const Vector y = gen.vector(3, -6.0, 6.0);
        const double t = gen.uniform(0.01, 4.0);
        CHECK((g.prox(x, t) - g.prox(y, t)).norm() <= (x - y).norm() + 1e-12);
      }
    }

    SECTION("matches the grid argmin: " + g.describe()) {
      for (int i = 0; i < 20; ++i) {
        const double x = gen.uniform(-5.0, 5.0);
        const double t = gen.uniform(0.1, 2.0);
        const double grid = oracle::grid_argmin(
            [&](double y) { return scalar(g, y) + (y - x) * (y - x) / (2.0 * t); }, x - 10.0 * t,
            x + 10.0 * t, 1e-4);
        CHECK(g.prox(vec({x}), t)[0] == Approx(grid).margin(1e-3));
      }
    }

    SECTION("residual lies in the subdifferential at the prox point: " + g.describe()) {
      for (int i = 0; i < 500; ++i) {
        const Vector x = gen.vector(3, -6.0, 6.0);
        const double t = gen.uniform(0.01, 4.0);
        const Vector p = g.prox(x, t);
        const Vector v = (x - p) / t;
        const auto iv = g.subgradient_intervals(p);
        for (Eigen::Index j = 0; j < 3; ++j) {
          CHECK(iv[static_cast<std::size_t>(j)].contains(v[j], 1e-10));
        }
      }
    }

    SECTION("envelope gradient against central differences: " + g.describe()) {
      for (int i = 0; i < 100; ++i) {
        const Vector x = gen.vector(3, -6.0, 6.0);
        const double t = gen.uniform(0.1, 3.0);
        const Vector fd = oracle::central_gradient(
            [&](const Vector& z) { return g.moreau_envelope(z, t); }, x, 1e-6);
        const Vector an = g.moreau_grad(x, t);
        for (Eigen::Index j = 0; j < 3; ++j) {
          CHECK(std::abs(an[j] - fd[j]) <= 1e-5 * (1.0 + std::abs(an[j])));
        }
      }
    }

    SECTION("midpoint convexity: " + g.describe()) {
      for (int i = 0; i < 1000; ++i) {
        Vector a = gen.vector(3, -6.0, 6.0);
        Vector b = gen.vector(3, -6.0, 6.0);
        if (g.is_indicator()) {
          a = g.prox(a, 1.0);
          b = g.prox(b, 1.0);
        }
        CHECK(g.eval(0.5 * (a + b)) <= 0.5 * (g.eval(a) + g.eval(b)) + 1e-12);
      }
    }

    SECTION("prox output stays in the domain: " + g.describe()) {
      for (int i = 0; i < 200; ++i) {
        CHECK(g.in_domain(g.prox(gen.vector(3, -50.0, 50.0), gen.uniform(0.01, 10.0))));
      }
    }
  }
}

TEST_CASE("huber envelope prox over a wide range of steps", "[penalty]") {
  const auto g = SeparablePenalty::huber_envelope(1.3, 0.4);
  oracle::Gen gen(5);
  for (int i = 0; i < 200; ++i) {
    const double x = gen.uniform(-20.0, 20.0);
    const double t = std::pow(10.0, gen.uniform(-3.0, 3.0));
    const double y = g.prox(vec({x}), t)[0];
    // Stationarity of the scalar subproblem: derivative(y) + (y - x)/t = 0.
    const double deriv = std::clamp(y / 0.4, -1.3, 1.3);
    CHECK(std::abs(deriv + (y - x) / t) <= 1e-9 * (1.0 + std::abs(x) / t));
  }
}

TEST_CASE("conjugate model of outer penalties", "[penalty]") {
  const auto abs = SeparablePenalty::abs_value(2.0).conjugate_model(2);
  CHECK(abs.lo[0] == -2.0);
  CHECK(abs.hi[1] == 2.0);
  CHECK(abs.abs_coef[0] == 0.0);
  const auto eps = SeparablePenalty::epsilon_insensitive(1.0, 0.5).conjugate_model(1);
  CHECK(eps.abs_coef[0] == 0.5);
  const auto chk = SeparablePenalty::check(2.0, 0.25).conjugate_model(1);
  CHECK(chk.lo[0] == Approx(-1.5));
  CHECK(chk.hi[0] == Approx(0.5));
  const auto hub = SeparablePenalty::huber_envelope(1.0, 0.5).conjugate_model(1);
  CHECK(hub.quad_coef[0] == 0.5);
  CHECK_THROWS_AS(SeparablePenalty::box(-1, 1).conjugate_model(1), UnsupportedError);
  CHECK(SeparablePenalty::abs_value(1.0).lipschitz_constant(4) == Approx(2.0));
  CHECK(SeparablePenalty::check(1.0, 0.3).lipschitz_constant(1) == Approx(0.7));
}
