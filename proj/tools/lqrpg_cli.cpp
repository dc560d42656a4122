#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "lqrpg/derivatives.hpp"
#include "lqrpg/errors.hpp"
#include "lqrpg/experiment.hpp"
#include "lqrpg/validation.hpp"

using namespace lqrpg;

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "experiment config (JSON); defaults to the pendulum");
  cmd->add_option("--seed", f.seed, "seed for randomized problem generators");
  cmd->add_option("--out", f.out, "output directory");
}

ExperimentConfig resolve(const CommonFlags& f) {
  ExperimentConfig cfg = f.config.empty() ? default_pendulum_config() : load_config(f.config);
  if (f.seed) {
    cfg.seed = *f.seed;
    cfg.problem.building.seed = *f.seed;
  }
  if (!f.out.empty()) cfg.output_dir = f.out;
  cfg.validate();
  return cfg;
}

void print_matrix(const char* name, const Mat& x) {
  std::cout << name << " (" << x.rows() << "x" << x.cols() << ")\n";
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    std::cout << ' ';
    for (Eigen::Index j = 0; j < x.cols(); ++j) std::cout << ' ' << format_real(x(i, j));
    std::cout << '\n';
  }
}

int cmd_solve(const CommonFlags& f, const std::string& at) {
  const ExperimentConfig cfg = resolve(f);
  const LqrProblem prob = build_problem(cfg);
  const Gain gain = at == "optimal" ? optimal_gain(prob).gain : build_seed_gain(cfg, prob);
  const StabilityCheck st = is_gamma_stabilizing(prob, gain);
  print_matrix("K", gain.K());
  std::cout << "rho(sqrt(gamma) A_cl) = " << format_real(st.rho) << '\n';
  if (!st.stabilizing) {
    std::cerr << "gain is not gamma-stabilizing\n";
    return 1;
  }
  print_matrix("P", solve_value(prob, gain).P);
  print_matrix("Sigma", solve_sigma(prob, gain).Sigma);
  std::cout << "J = " << format_real(performance(prob, gain)) << '\n';
  print_matrix("grad (vec)", policy_gradient(prob, gain));
  return 0;
}

int cmd_optimize(const CommonFlags& f, const std::string& method, std::optional<double> tol,
                 std::optional<int> max_iter) {
  const ExperimentConfig cfg = resolve(f);
  const LqrProblem prob = build_problem(cfg);
  MethodSpec spec = default_method(parse_method(method));
  for (const auto& m : cfg.methods) {
    if (m.cfg.method == spec.cfg.method) {
      spec = m;
      break;
    }
  }
  if (tol) spec.cfg.grad_tol = *tol;
  if (max_iter) spec.cfg.max_iter = *max_iter;
  spec.cfg.seed_gain = build_seed_gain(cfg, prob);
  spec.cfg.validate();
  const RunRecord rec = run(prob, spec.cfg);
  std::cout << trace_csv(rec);
  std::cerr << to_string(rec.method) << ": " << to_string(rec.status) << " after "
            << rec.iterations.back().k << " iterations";
  if (!rec.message.empty()) std::cerr << " (" << rec.message << ")";
  std::cerr << '\n';
  if (!f.out.empty()) {
    std::filesystem::create_directories(cfg.output_dir);
    write_file_atomic(cfg.output_dir / (spec.name + "_trace.csv"), trace_csv(rec));
  }
  return rec.status == RunStatus::converged || rec.status == RunStatus::max_iter ? 0 : 1;
}

int cmd_experiment(const CommonFlags& f) {
  const ExperimentResult res = run_experiment(resolve(f));
  for (const auto& path : res.files) std::cout << path.string() << '\n';
  for (const auto& e : res.errors) std::cerr << "error: " << e << '\n';
  return res.ok() ? 0 : 1;
}

int cmd_validate(long samples, std::uint64_t seed) {
  bool ok = true;
  for (const CheckResult& r : validation_suite(samples, seed)) {
    std::cout << format_check(r) << '\n';
    ok = ok && r.passed;
  }
  return ok ? 0 : 1;
}

int cmd_landscape(const CommonFlags& f, std::optional<int> steps) {
  ExperimentConfig cfg = resolve(f);
  if (steps) cfg.landscape.steps = *steps;
  const LqrProblem prob = build_problem(cfg);
  GridAxis t1;
  GridAxis t2;
  if (cfg.landscape.theta1) {
    t1 = *cfg.landscape.theta1;
    t2 = *cfg.landscape.theta2;
  } else {
    std::tie(t1, t2) =
        default_window(optimal_gain(prob).gain, build_seed_gain(cfg, prob), cfg.landscape.steps);
  }
  const std::string csv = landscape_csv(landscape(prob, t1, t2));
  if (f.out.empty()) {
    std::cout << csv;
  } else {
    std::filesystem::create_directories(cfg.output_dir);
    const auto path = cfg.output_dir / "landscape.csv";
    write_file_atomic(path, csv);
    std::cout << path.string() << '\n';
  }
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Policy optimization for discounted stochastic LQR"};
  app.require_subcommand(1);

  CommonFlags solve_f, opt_f, exp_f, land_f;
  std::string at = "seed";
  auto* solve = app.add_subcommand("solve", "print P, Sigma, J and the gradient at a gain");
  add_common(solve, solve_f);
  solve->add_option("--at", at, "which gain: seed or optimal")
      ->check(CLI::IsMember({"seed", "optimal"}));

  std::string method = "newton";
  std::optional<double> tol;
  std::optional<int> max_iter;
  auto* optimize = app.add_subcommand("optimize", "run one method and print its trace");
  add_common(optimize, opt_f);
  optimize->add_option("--method", method, "first_order, gauss_newton or newton");
  optimize->add_option("--tol", tol, "gradient-norm stopping tolerance");
  optimize->add_option("--max-iter", max_iter, "iteration cap");

  auto* experiment = app.add_subcommand("experiment", "run every method in a config");
  add_common(experiment, exp_f);

  long samples = 10000;
  std::uint64_t vseed = 7;
  auto* validate = app.add_subcommand("validate", "run the oracle suites");
  validate->add_option("--seed", vseed, "Monte Carlo seed");
  validate->add_option("--samples", samples, "Monte Carlo rollouts per noise model");

  std::optional<int> steps;
  auto* land = app.add_subcommand("landscape", "evaluate J on a two-parameter grid");
  add_common(land, land_f);
  land->add_option("--steps", steps, "grid points per axis for the default window");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*solve) return cmd_solve(solve_f, at);
    if (*optimize) return cmd_optimize(opt_f, method, tol, max_iter);
    if (*experiment) return cmd_experiment(exp_f);
    if (*validate) return cmd_validate(samples, vseed);
    if (*land) return cmd_landscape(land_f, steps);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
