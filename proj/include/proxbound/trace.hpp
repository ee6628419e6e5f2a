#pragma once

#include "proxbound/core.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace proxbound {

enum class Status { Converged, MaxIter };

std::string to_string(Status s);

/// One row per visited iterate x_k. Fields a solver does not produce stay NaN.
struct IterationRecord {
  static constexpr double kUnset = std::numeric_limits<double>::quiet_NaN();

  int k = 0;
  double phi = kUnset;
  double gnorm = kUnset;
  /// Step length used from x_k (accepted value for prox-linear).
  double t = kUnset;
  int backtracks = 0;
  /// Slack of the per-step decrease inequality; >= 0 when it holds.
  double decrease_residual = kUnset;
  double certificate = kUnset;
  double certificate_sharp = kUnset;
  /// Measured dist(0, subdifferential) at the next iterate, when recorded.
  double stationarity_next = kUnset;
  double elapsed_s = 0.0;
};

struct IterationTrace {
  std::vector<IterationRecord> rows;
  Status status = Status::MaxIter;
  Vector x_final;
  /// x_0, x_1, ... when the solver was asked to keep them.
  std::vector<Vector> iterates;
  std::vector<std::string> warnings;

  /// Number of steps taken (rows minus the terminal row).
  int steps() const { return rows.empty() ? 0 : static_cast<int>(rows.size()) - 1; }
  const IterationRecord& last() const { return rows.back(); }
};

/// `k,phi,gnorm,descent_residual,certificate,elapsed_s`
void write_additive_csv(std::ostream& out, const IterationTrace& trace);
/// `k,phi,gnorm,t_accepted,backtracks,decrease_residual,certificate,certificate_sharp,elapsed_s`
void write_composite_csv(std::ostream& out, const IterationTrace& trace);

}  // namespace proxbound
