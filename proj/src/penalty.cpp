#include "proxbound/penalty.hpp"

#include "proxbound/spec_string.hpp"

#include <cmath>

namespace proxbound {
namespace penalty {
namespace {

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

}  // namespace

double AbsValue::value(double x, double w) const { return w * lambda * std::abs(x); }

double AbsValue::prox(double x, double t, double w) const {
  return soft_threshold(x, t * w * lambda);
}

Interval AbsValue::subgradient(double x, double w) const {
  const double l = w * lambda;
  if (x > 0.0) return {l, l};
  if (x < 0.0) return {-l, -l};
  return {-l, l};
}

double ElasticNet::value(double x, double w) const {
  return w * (lambda1 * std::abs(x) + 0.5 * lambda2 * x * x);
}

double ElasticNet::prox(double x, double t, double w) const {
  return soft_threshold(x, t * w * lambda1) / (1.0 + t * w * lambda2);
}

Interval ElasticNet::subgradient(double x, double w) const {
  const double smooth = w * lambda2 * x;
  const double l = w * lambda1;
  if (x > 0.0) return {smooth + l, smooth + l};
  if (x < 0.0) return {smooth - l, smooth - l};
  return {-l, l};
}

double BoxIndicator::value(double x, double) const {
  return (x >= lo && x <= hi) ? 0.0 : kInf;
}

double BoxIndicator::prox(double x, double, double) const {
  return x < lo ? lo : (x > hi ? hi : x);
}

Interval BoxIndicator::subgradient(double x, double) const {
  if (!(x >= lo && x <= hi)) throw DomainError("box indicator: point outside [lo, hi]");
  const double below = x == lo ? -kInf : 0.0;
  const double above = x == hi ? kInf : 0.0;
  return {below, above};
}

double EpsilonInsensitive::value(double x, double w) const {
  return w * lambda * std::max(std::abs(x) - epsilon, 0.0);
}

double EpsilonInsensitive::prox(double x, double t, double w) const {
  const double ax = std::abs(x);
  if (ax <= epsilon) return x;
  const double step = t * w * lambda;
  if (ax <= epsilon + step) return sign(x) * epsilon;
  return x - sign(x) * step;
}

Interval EpsilonInsensitive::subgradient(double x, double w) const {
  const double l = w * lambda;
  if (x > epsilon) return {l, l};
  if (x < -epsilon) return {-l, -l};
  if (x == epsilon) return {0.0, l};
  if (x == -epsilon) return {-l, 0.0};
  return {0.0, 0.0};
}

double CheckFunction::value(double x, double w) const {
  return w * lambda * (x >= 0.0 ? tau * x : (tau - 1.0) * x);
}

double CheckFunction::prox(double x, double t, double w) const {
  const double step = t * w * lambda;
  if (x > step * tau) return x - step * tau;
  if (x < -step * (1.0 - tau)) return x + step * (1.0 - tau);
  return 0.0;
}

Interval CheckFunction::subgradient(double x, double w) const {
  const double l = w * lambda;
  if (x > 0.0) return {l * tau, l * tau};
  if (x < 0.0) return {-l * (1.0 - tau), -l * (1.0 - tau)};
  return {-l * (1.0 - tau), l * tau};
}

double HuberEnvelope::value(double x, double w) const {
  const double l = w * lambda;
  const double ax = std::abs(x);
  if (ax <= l * mu) return x * x / (2.0 * mu);
  return l * ax - 0.5 * l * l * mu;
}

double HuberEnvelope::derivative(double x, double w) const {
  const double l = w * lambda;
  return std::clamp(x / mu, -l, l);
}

double HuberEnvelope::prox(double x, double t, double w) const {
  const double l = w * lambda;
  const double tol = 1e-12 * (1.0 + std::abs(x));
  // Root of the quadratic piece; if it falls outside that piece it sits on
  // the linear piece containing the true root, so one Newton step is exact.
  double y = x * mu / (mu + t);
  for (int it = 0; it < 50; ++it) {
    const double residual = derivative(y, w) + (y - x) / t;
    if (std::abs(residual) <= tol) break;
    const double slope = (std::abs(y) < l * mu ? 1.0 / mu : 0.0) + 1.0 / t;
    y -= residual / slope;
  }
  return y;
}

Interval HuberEnvelope::subgradient(double x, double w) const {
  const double d = derivative(x, w);
  return {d, d};
}

}  // namespace penalty

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void validate(const penalty::Kind& kind) {
  auto positive = [](double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw InvalidArgument(std::string(what) + " must be a positive finite real");
    }
  };
  std::visit(overloaded{
                 [](const penalty::Zero&) {},
                 [&](const penalty::AbsValue& p) { positive(p.lambda, "lambda"); },
                 [&](const penalty::ElasticNet& p) {
                   positive(p.lambda1, "lambda1");
                   positive(p.lambda2, "lambda2");
                 },
                 [](const penalty::BoxIndicator& p) {
                   if (std::isnan(p.lo) || std::isnan(p.hi) || p.lo > p.hi) {
                     throw InvalidArgument("box requires lo <= hi");
                   }
                 },
                 [&](const penalty::EpsilonInsensitive& p) {
                   positive(p.lambda, "lambda");
                   positive(p.epsilon, "epsilon");
                 },
                 [&](const penalty::CheckFunction& p) {
                   positive(p.lambda, "lambda");
                   if (!(p.tau > 0.0 && p.tau < 1.0)) {
                     throw InvalidArgument("tau must lie in (0,1)");
                   }
                 },
                 [&](const penalty::HuberEnvelope& p) {
                   positive(p.lambda, "lambda");
                   positive(p.mu, "mu");
                 },
             },
             kind);
}

}  // namespace

SeparablePenalty::SeparablePenalty(penalty::Kind kind, Vector weights)
    : kind_(std::move(kind)), weights_(std::move(weights)) {
  validate(kind_);
  for (Eigen::Index i = 0; i < weights_.size(); ++i) {
    if (!(weights_[i] > 0.0) || !std::isfinite(weights_[i])) {
      throw InvalidArgument("penalty weights must be positive and finite");
    }
  }
}

SeparablePenalty SeparablePenalty::parse(std::string_view spec) {
  const SpecCall call = SpecCall::parse(spec);
  const std::string& n = call.name;
  if (n == "zero") {
    call.expect_only({});
    return zero();
  }
  if (n == "absvalue" || n == "abs" || n == "l1") {
    call.expect_only({"lambda"});
    return abs_value(call.real("lambda"));
  }
  if (n == "elasticnet") {
    call.expect_only({"lambda1", "lambda2"});
    return elastic_net(call.real("lambda1"), call.real("lambda2"));
  }
  if (n == "box" || n == "boxindicator") {
    call.expect_only({"lo", "hi"});
    return box(call.real("lo"), call.real("hi"));
  }
  if (n == "epsiloninsensitive" || n == "vapnik") {
    call.expect_only({"lambda", "epsilon"});
    return epsilon_insensitive(call.real("lambda"), call.real("epsilon"));
  }
  if (n == "checkfunction" || n == "check" || n == "quantile") {
    call.expect_only({"lambda", "tau"});
    return check(call.real("lambda"), call.real("tau"));
  }
  if (n == "huberenvelope" || n == "huber") {
    call.expect_only({"lambda", "mu"});
    return huber_envelope(call.real("lambda"), call.real("mu"));
  }
  throw ConfigError("unknown penalty kind '" + n + "'");
}

std::string SeparablePenalty::name() const {
  return std::visit(overloaded{
                        [](const penalty::Zero&) { return std::string("zero"); },
                        [](const penalty::AbsValue&) { return std::string("absvalue"); },
                        [](const penalty::ElasticNet&) { return std::string("elasticnet"); },
                        [](const penalty::BoxIndicator&) { return std::string("box"); },
                        [](const penalty::EpsilonInsensitive&) {
                          return std::string("epsiloninsensitive");
                        },
                        [](const penalty::CheckFunction&) { return std::string("checkfunction"); },
                        [](const penalty::HuberEnvelope&) { return std::string("huberenvelope"); },
                    },
                    kind_);
}

std::string SeparablePenalty::describe() const {
  auto r = [](double v) { return format_real(v); };
  return std::visit(
      overloaded{
          [](const penalty::Zero&) { return std::string("zero()"); },
          [&](const penalty::AbsValue& p) { return "absvalue(lambda=" + r(p.lambda) + ")"; },
          [&](const penalty::ElasticNet& p) {
            return "elasticnet(lambda1=" + r(p.lambda1) + ",lambda2=" + r(p.lambda2) + ")";
          },
          [&](const penalty::BoxIndicator& p) {
            return "box(lo=" + r(p.lo) + ",hi=" + r(p.hi) + ")";
          },
          [&](const penalty::EpsilonInsensitive& p) {
            return "epsiloninsensitive(lambda=" + r(p.lambda) + ",epsilon=" + r(p.epsilon) + ")";
          },
          [&](const penalty::CheckFunction& p) {
            return "checkfunction(lambda=" + r(p.lambda) + ",tau=" + r(p.tau) + ")";
          },
          [&](const penalty::HuberEnvelope& p) {
            return "huberenvelope(lambda=" + r(p.lambda) + ",mu=" + r(p.mu) + ")";
          },
      },
      kind_);
}

void SeparablePenalty::check_dim(const Vector& x) const {
  if (weights_.size() != 0) require_dim("penalty", weights_.size(), x.size());
}

double SeparablePenalty::eval(const Vector& x) const {
  check_dim(x);
  return std::visit(
      [&](const auto& k) {
        double sum = 0.0;
        for (Eigen::Index i = 0; i < x.size(); ++i) {
          const double v = k.value(x[i], weight(i));
          if (v == kInf) return kInf;
          sum += v;
        }
        return sum;
      },
      kind_);
}

bool SeparablePenalty::in_domain(const Vector& x) const { return eval(x) < kInf; }

Vector SeparablePenalty::prox(const Vector& x, double t) const {
  check_dim(x);
  if (!(t > 0.0)) throw InvalidArgument("prox step t must be positive");
  Vector out(x.size());
  std::visit(
      [&](const auto& k) {
        for (Eigen::Index i = 0; i < x.size(); ++i) out[i] = k.prox(x[i], t, weight(i));
      },
      kind_);
  return out;
}

std::vector<Interval> SeparablePenalty::subgradient_intervals(const Vector& x) const {
  check_dim(x);
  std::vector<Interval> out(static_cast<std::size_t>(x.size()));
  std::visit(
      [&](const auto& k) {
        for (Eigen::Index i = 0; i < x.size(); ++i) {
          out[static_cast<std::size_t>(i)] = k.subgradient(x[i], weight(i));
        }
      },
      kind_);
  return out;
}

double SeparablePenalty::moreau_envelope(const Vector& x, double t) const {
  const Vector p = prox(x, t);
  return eval(p) + (p - x).squaredNorm() / (2.0 * t);
}

Vector SeparablePenalty::moreau_grad(const Vector& x, double t) const {
  return (x - prox(x, t)) / t;
}

bool SeparablePenalty::has_conjugate_prox() const {
  return std::holds_alternative<penalty::Zero>(kind_) ||
         std::holds_alternative<penalty::AbsValue>(kind_) ||
         std::holds_alternative<penalty::BoxIndicator>(kind_) ||
         std::holds_alternative<penalty::CheckFunction>(kind_) ||
         std::holds_alternative<penalty::ElasticNet>(kind_);
}

Vector SeparablePenalty::conjugate_prox(const Vector& z, double s) const {
  check_dim(z);
  if (!(s > 0.0)) throw InvalidArgument("prox step must be positive");
  Vector out(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double w = weight(i);
    const double zi = z[i];
    out[i] = std::visit(
        overloaded{
            // g* = indicator of {0}
            [](const penalty::Zero&) { return 0.0; },
            // g* = indicator of [-lambda, lambda]
            [&](const penalty::AbsValue& p) { return std::clamp(zi, -w * p.lambda, w * p.lambda); },
            // g* = support function of [lo, hi]: max(lo y, hi y)
            [&](const penalty::BoxIndicator& p) {
              if (zi > s * p.hi) return zi - s * p.hi;
              if (zi < s * p.lo) return zi - s * p.lo;
              return 0.0;
            },
            // g* = indicator of [-lambda (1 - tau), lambda tau]
            [&](const penalty::CheckFunction& p) {
              return std::clamp(zi, -w * p.lambda * (1.0 - p.tau), w * p.lambda * p.tau);
            },
            // g*(y) = max(|y| - l1, 0)^2 / (2 l2)
            [&](const penalty::ElasticNet& p) {
              const double l1 = w * p.lambda1;
              const double l2 = w * p.lambda2;
              if (std::abs(zi) <= l1) return zi;
              return (zi > 0 ? 1.0 : -1.0) * (s * l1 + l2 * std::abs(zi)) / (s + l2);
            },
            [&](const auto&) -> double {
              throw UnsupportedError("conjugate prox not implemented for " + name());
            },
        },
        kind_);
  }
  return out;
}

double SeparablePenalty::moreau_decomposition_residual(const Vector& x, double t) const {
  if (!has_conjugate_prox()) {
    throw UnsupportedError("conjugate prox not implemented for " + name());
  }
  return (prox(x, t) + t * conjugate_prox(x / t, 1.0 / t) - x).norm();
}

SeparablePenalty::ConjugateModel SeparablePenalty::conjugate_model(Eigen::Index dim) const {
  if (weights_.size() != 0) require_dim("penalty", weights_.size(), dim);
  ConjugateModel m{Vector::Zero(dim), Vector::Zero(dim), Vector::Zero(dim), Vector::Zero(dim)};
  for (Eigen::Index i = 0; i < dim; ++i) {
    const double w = weight(i);
    std::visit(overloaded{
                   [](const penalty::Zero&) {},
                   [&](const penalty::AbsValue& p) {
                     m.lo[i] = -w * p.lambda;
                     m.hi[i] = w * p.lambda;
                   },
                   [&](const penalty::EpsilonInsensitive& p) {
                     m.lo[i] = -w * p.lambda;
                     m.hi[i] = w * p.lambda;
                     m.abs_coef[i] = p.epsilon;
                   },
                   [&](const penalty::CheckFunction& p) {
                     m.lo[i] = -w * p.lambda * (1.0 - p.tau);
                     m.hi[i] = w * p.lambda * p.tau;
                   },
                   [&](const penalty::HuberEnvelope& p) {
                     m.lo[i] = -w * p.lambda;
                     m.hi[i] = w * p.lambda;
                     m.quad_coef[i] = p.mu;
                   },
                   [&](const auto&) {
                     throw UnsupportedError(name() + " is not a finite Lipschitz outer penalty");
                   },
               },
               kind_);
  }
  return m;
}

double SeparablePenalty::lipschitz_constant(Eigen::Index dim) const {
  const ConjugateModel m = conjugate_model(dim);
  return m.lo.cwiseAbs().cwiseMax(m.hi.cwiseAbs()).norm();
}

}  // namespace proxbound
