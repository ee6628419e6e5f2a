#include "proxbound/experiment.hpp"
#include "proxbound/instances.hpp"

#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace proxbound;
using Catch::Matchers::ContainsSubstring;

namespace {

namespace fs = std::filesystem;

const char* kCorridor = R"(# corridor
[problem]
kind = additive
smooth = corridor(dim=4)
x0 = 3
reference = analytic_box(lo=-1, hi=1, phi_star=0)

[solver]
method = proxgrad
t = 0.5
)";

const char* kLasso = R"([problem]
kind = additive
smooth = quadratic(rows=20, cols=10)
penalty = absvalue(lambda=0.1)
seed = 42

[solver]
method = proxgrad
)";

const char* kRobust = R"([problem]
kind = composite
penalty = elasticnet(lambda1=0.1, lambda2=1)
outer = absvalue(lambda=1)
map = quadratic_map(rows=20, cols=10, scale=0.1, noise=0.1)
seed = 7

[solver]
method = proxlinear
t0 = 2
q = 0.5
)";

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("proxbound_test_experiment_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string config_error(const std::string& text, const fs::path& base = ".") {
  try {
    parse_config_text(text, base);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

const CheckLine* find_check(const RunReport& r, const std::string& name) {
  for (const auto& c : r.checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

}  // namespace

TEST_CASE("parsing a minimal config", "[experiment]") {
  const auto cfg = parse_config_text(kCorridor);
  CHECK(cfg.problem.kind == ProblemSection::Kind::Additive);
  CHECK(cfg.problem.smooth == "corridor(dim=4)");
  CHECK(cfg.problem.penalty == "zero");
  CHECK(cfg.solver.method == SolverSection::Method::ProxGrad);
  CHECK(*cfg.solver.t == 0.5);
  CHECK(cfg.solver.eps == 1e-8);
  CHECK_FALSE(cfg.diagnostics.constants);
  CHECK(build_x0(cfg, 4) == Vector::Constant(4, 3.0));

  const auto echoed = parse_config_text(cfg.echo());
  CHECK(echoed.echo() == cfg.echo());
}

TEST_CASE("config errors name the offending entry", "[experiment]") {
  std::string text = kRobust;
  text.replace(text.find("q = 0.5"), 7, "q = 1.5");
  CHECK_THAT(config_error(text), ContainsSubstring("q must lie in (0,1)"));

  const std::string missing = std::string(kCorridor).replace(
      std::string(kCorridor).find("corridor(dim=4)"), 15, "quadratic(a=nothere.txt, b=b.txt)");
  CHECK_THAT(config_error(missing), ContainsSubstring("nothere.txt"));

  CHECK_THAT(config_error(std::string(kCorridor) + "colour = red\n"),
             ContainsSubstring("colour"));
  CHECK_THAT(config_error(std::string(kCorridor) + "[extras]\nx = 1\n"),
             ContainsSubstring("unknown section [extras]"));
  CHECK_THAT(config_error("[problem]\nkind = additive\nsmooth = corridor(dim=2)\n"),
             ContainsSubstring("missing section [solver]"));
  CHECK_THAT(config_error(std::string(kLasso) + "max_iter = 1\nmax_iter = 2\n"),
             ContainsSubstring("max_iter"));

  SECTION("all problems are reported together") {
    const std::string many = R"([problem]
kind = additive
smooth = quadratic(a=absent.txt, b=absent_b.txt)
bogus = 1

[solver]
method = proxgrad
q = 7
)";
    const std::string msg = config_error(many);
    CHECK_THAT(msg, ContainsSubstring("invalid config (3 problems)"));
    CHECK_THAT(msg, ContainsSubstring("bogus"));
    CHECK_THAT(msg, ContainsSubstring("q must lie in (0,1)"));
    CHECK_THAT(msg, ContainsSubstring("absent"));
  }

  SECTION("method and problem kind must agree") {
    std::string wrong = kLasso;
    wrong.replace(wrong.find("proxgrad"), 8, "proxlinear");
    CHECK_THAT(config_error(wrong), ContainsSubstring("does not apply"));
  }

  CHECK_THROWS_AS(parse_config("/nonexistent/dir/config.ini"), ConfigError);
}

TEST_CASE("seed override", "[experiment]") {
  const auto a = parse_config_text(kLasso, ".", 43);
  CHECK(a.problem.seed == 43);
  const auto p = std::get<AdditiveProblem>(build_problem(a));
  const Vector x = Vector::LinSpaced(10, -1.0, 1.0);
  CHECK(p.phi(x) == instances::lasso(20, 10, 0.1, 43).phi(x));
}

TEST_CASE("generated LASSO matches the instance generator", "[experiment]") {
  const auto p = std::get<AdditiveProblem>(build_problem(parse_config_text(kLasso)));
  const auto ref = instances::lasso_seed42();
  for (int i = 0; i < 5; ++i) {
    const Vector x = Vector::LinSpaced(10, -1.0 - i, 1.0 + i);
    CHECK(p.phi(x) == ref.phi(x));
  }
  CHECK(p.beta() == ref.beta());
}

TEST_CASE("matrix data from files", "[experiment]") {
  const auto dir = scratch_dir("files");
  Rng rng(42);
  const Matrix A = rng.normal_matrix(20, 10);
  const Vector b = rng.normal_vector(20);
  save_matrix(dir / "A.txt", A);
  save_matrix(dir / "b.txt", b);
  Matrix Ab(20, 11);
  Ab << A, b;
  save_matrix(dir / "Ab.txt", Ab);

  const Vector x = Vector::LinSpaced(10, -1.0, 1.0);
  const double expected = instances::lasso_seed42().phi(x);
  for (const char* smooth : {"quadratic(a=A.txt, b=b.txt)", "quadratic(file=Ab.txt)"}) {
    std::string text = kLasso;
    text.replace(text.find("quadratic(rows=20, cols=10)"), 27, smooth);
    const auto cfg = parse_config_text(text, dir);
    CHECK(std::get<AdditiveProblem>(build_problem(cfg)).phi(x) == expected);
  }
  fs::remove_all(dir);
}

TEST_CASE("corridor experiment", "[experiment]") {
  const auto report = run_experiment(parse_config_text(kCorridor));
  CHECK(report.trace.steps() == 1);
  CHECK(report.trace.status == Status::Converged);
  CHECK(report.all_pass());
  CHECK_FALSE(report.composite);
  CHECK(report.summary().find("CHECK descent: PASS") != std::string::npos);
  CHECK(report.trace_csv().rfind("k,phi,gnorm,descent_residual,certificate,elapsed_s\n", 0) == 0);
}

TEST_CASE("reruns emit identical files", "[experiment]") {
  std::string text = kLasso;
  text += "\n[diagnostics]\nconstants = true\nsamples = 500\ntail_rate = true\n";
  const auto cfg = parse_config_text(text);
  const auto a = scratch_dir("rerun_a");
  const auto b = scratch_dir("rerun_b");
  emit_report(run_experiment(cfg), a);
  emit_report(run_experiment(cfg), b);
  for (const char* name : {"trace.csv", "report.txt", "constants.txt", "constants.csv"}) {
    INFO(name);
    REQUIRE(fs::exists(a / name));
    CHECK(slurp(a / name) == slurp(b / name));
  }
  CHECK_THAT(slurp(a / "report.txt"), ContainsSubstring("# checks"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("prox-linear experiment", "[experiment]") {
  // A stronger quadratic part makes the first trial steps too long.
  std::string text = kRobust;
  text.replace(text.find("elasticnet(lambda1=0.1, lambda2=1)"), 34, "absvalue(lambda=0.1)");
  text.replace(text.find("scale=0.1"), 9, "scale=1");
  text.replace(text.find("seed = 7"), 8, "seed = 3");
  const auto report = run_experiment(parse_config_text(text));
  CHECK(report.composite);
  CHECK(report.trace.status == Status::Converged);
  const std::string csv = report.trace_csv();
  CHECK(csv.rfind("k,phi,gnorm,t_accepted,backtracks,decrease_residual,certificate,"
                  "certificate_sharp,elapsed_s\n",
                  0) == 0);
  int backtracks = 0;
  for (const auto& r : report.trace.rows) backtracks += r.backtracks;
  CHECK(backtracks > 0);
  for (const char* name : {"sufficient_decrease", "certificate_formula", "half_bound",
                           "backtracking_floor"}) {
    INFO(name);
    const auto* c = find_check(report, name);
    REQUIRE(c != nullptr);
    CHECK(c->pass);
  }
}

TEST_CASE("a wrong beta fails the descent check", "[experiment]") {
  const std::string text = std::string(kLasso).replace(std::string(kLasso).find("seed = 42"), 9,
                                                       "seed = 42\nbeta = 5") +
                           "max_iter = 50\n";
  const auto report = run_experiment(parse_config_text(text));
  const auto* descent = find_check(report, "descent");
  REQUIRE(descent != nullptr);
  CHECK_FALSE(descent->pass);
  CHECK(descent->slack < 0.0);
  CHECK_FALSE(report.all_pass());
  CHECK_THAT(report.summary(), ContainsSubstring("CHECK descent: FAIL"));
}

TEST_CASE("empty diagnostics still produce a summary", "[experiment]") {
  const auto report = run_experiment(parse_config_text(kLasso));
  CHECK_FALSE(report.constants.has_value());
  CHECK_FALSE(report.tail_rate.has_value());
  const std::string s = report.summary();
  CHECK_THAT(s, ContainsSubstring("# config"));
  CHECK_THAT(s, ContainsSubstring("# result"));
  CHECK_THAT(s, ContainsSubstring("# checks"));
  const auto dir = scratch_dir("empty");
  emit_report(report, dir);
  CHECK_THAT(slurp(dir / "constants.txt"), ContainsSubstring("measured=false"));
  fs::remove_all(dir);
}
