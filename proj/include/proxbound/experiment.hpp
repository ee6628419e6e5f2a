#pragma once

#include "proxbound/diagnostics.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace proxbound {

struct ProblemSection {
  enum class Kind { Additive, Composite };
  Kind kind = Kind::Additive;
  /// Spec strings, e.g. `corridor(dim=10)`, `absvalue(lambda=0.1)`,
  /// `quadratic_map(rows=20,cols=10,scale=0.1,noise=0.1)`.
  std::string smooth;
  std::string penalty = "zero";
  std::string outer;
  std::string map;
  /// Empty (zeros), a scalar broadcast to every coordinate, or a comma list.
  std::string x0;
  std::uint64_t seed = 0;
  /// Declared gradient Lipschitz constant in place of the derived one.
  std::optional<double> beta;
  /// Treat the composite problem as an additive one written as g + h o c.
  bool additive_form = false;
  /// `computed` or `analytic_box(lo=..,hi=..,phi_star=..)`.
  std::string reference = "computed";
};

struct SolverSection {
  enum class Method { ProxGrad, ProxLinear, ProxPoint };
  Method method = Method::ProxGrad;
  /// t for proxgrad and proxpoint, t0 for proxlinear.
  std::optional<double> t;
  double q = 0.5;
  double eps = 1e-8;
  int max_iter = 10000;
  double inner_tol = 1e-12;
  SigmaPolicy sigma = SigmaPolicy::adaptive();
  bool timing = false;
};

struct DiagnosticsSection {
  bool sandwich = false;
  std::size_t sandwich_points = 100;
  bool constants = false;
  std::size_t samples = 10000;
  std::uint64_t sample_seed = 0;
  /// Sublevel offset; defaults to the initial gap phi(x0) - phi*.
  std::optional<double> nu;
  bool tail_rate = false;
  double tail_fraction = 0.5;
  double reference_accuracy = 1e-12;
};

struct ExperimentConfig {
  ProblemSection problem;
  SolverSection solver;
  DiagnosticsSection diagnostics;
  /// Matrix file paths in spec strings resolve against this directory.
  std::filesystem::path base_dir = ".";

  /// Canonical `[section]` / `key = value` form; parsing it gives back an
  /// equivalent config.
  std::string echo() const;
};

/// Reads an INI-style config. Every violation found (unknown sections or
/// keys, malformed values, out-of-range parameters, missing files,
/// inconsistent dimensions) is collected into one ConfigError. The
/// PROXBOUND_SEED environment variable, when set, replaces problem.seed.
ExperimentConfig parse_config(const std::filesystem::path& path);
ExperimentConfig parse_config_text(const std::string& text,
                                   const std::filesystem::path& base_dir = ".",
                                   std::optional<std::uint64_t> seed_override = std::nullopt);

using BuiltProblem = std::variant<AdditiveProblem, CompositeProblem>;
BuiltProblem build_problem(const ExperimentConfig& cfg);
Vector build_x0(const ExperimentConfig& cfg, Eigen::Index dim);

struct CheckLine {
  std::string name;
  bool pass = false;
  double slack = 0.0;
};

struct RunReport {
  std::string config_echo;
  std::string method;
  bool composite = false;
  IterationTrace trace;
  std::optional<ReferenceSolution> reference;
  std::optional<ConstantsReport> constants;
  std::optional<double> tail_rate;
  std::vector<CheckLine> checks;
  /// Informational lines (skipped diagnostics, solver warnings).
  std::vector<std::string> notes;

  bool all_pass() const;
  std::string summary() const;
  std::string trace_csv() const;
};

/// Runs the configured solver and every enabled diagnostic. Deterministic
/// given the config unless solver.timing is set.
RunReport run_experiment(const ExperimentConfig& cfg);

/// Writes trace.csv, report.txt, constants.txt and constants.csv into dir,
/// creating it if needed.
void emit_report(const RunReport& report, const std::filesystem::path& dir);

}  // namespace proxbound
