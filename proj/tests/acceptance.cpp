// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "lqrpg/bench.hpp"
#include "lqrpg/experiment.hpp"
#include "lqrpg/optimizers.hpp"
#include "lqrpg/validation.hpp"

using namespace lqrpg;
namespace fs = std::filesystem;

namespace {

// Pinned limits.
constexpr double kRuntime1 = 1.0;
constexpr double kRuntime2 = 10.0;
constexpr double kRuntime3 = 30.0;
constexpr double kRuntime7 = 120.0;
constexpr double kRuntime9 = 30.0;

constexpr double kGainTol = 1e-8;            // ||K - K*||_F target for ordering
constexpr double kQuadC = 100.0;             // e_{k+1} <= C e_k^2 on relative errors
constexpr double kQuadRegion = 1e-2;         // pairs start once e_k / ||K*|| <= this
constexpr double kRelFloor = 1e-14;          // relative error treated as resolved
constexpr int kQuadPairs = 3;
constexpr double kGnRatio = 0.6;
constexpr double kGnFloor = 1e-12;           // relative error where the ratio check stops
constexpr int kBasinIters = 10;
constexpr double kSlowdown = 5.0;
constexpr long kMcSamples = 10000;
constexpr std::uint64_t kMcSeed = 7;

struct Line {
  int id;
  std::string name;
  bool passed;
  std::string detail;
  double seconds;
};

std::vector<Line> g_lines;

void report(int id, const std::string& name, bool passed, const std::string& detail,
            double seconds) {
  std::printf("%s  criterion %2d  %-34s %s (%.2fs)\n", passed ? "PASS" : "FAIL", id, name.c_str(),
              detail.c_str(), seconds);
  std::fflush(stdout);
  g_lines.push_back({id, name, passed, detail, seconds});
}

template <typename F>
void criterion(int id, const std::string& name, F&& body) {
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = false;
  std::string detail;
  try {
    ok = body(detail);
  } catch (const std::exception& e) {
    ok = false;
    detail = std::string("exception: ") + e.what();
  }
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  report(id, name, ok, detail, s);
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

bool from_check(const CheckResult& r, double limit, std::string& detail) {
  detail = "measured " + fmt("%.3g", r.measured) + " tol " + fmt("%.0e", r.tolerance) + "; " +
           r.detail;
  if (r.seconds > limit) detail += "; runtime over " + fmt("%.0f", limit) + "s";
  return r.passed && r.seconds <= limit;
}

// ---- criterion 7 -----------------------------------------------------------

struct Bench {
  std::string name;
  LqrProblem prob;
  Gain seed;
  int first_order_cap;
};

RunRecord run_method(const Bench& b, const Gain& k_star, Method m, StepMode step, int max_iter) {
  OptimizerConfig cfg;
  cfg.method = m;
  cfg.step = step;
  cfg.grad_tol = 1e-14;
  cfg.max_iter = max_iter;
  cfg.seed_gain = b.seed;
  return run(b.prob, cfg, k_star);
}

/// Consecutive pairs with relative error in (floor, region] must satisfy
/// e_{k+1} <= max(C e_k^2, floor).
bool quadratic_tail(const RunRecord& r, double k_norm, int& pairs, std::string& why) {
  pairs = 0;
  const auto& it = r.iterations;
  for (std::size_t k = 0; k + 1 < it.size(); ++k) {
    const double e0 = it[k].gain_error / k_norm, e1 = it[k + 1].gain_error / k_norm;
    if (e0 > kQuadRegion) {
      if (pairs > 0) {
        why = "error left the quadratic region at k=" + std::to_string(k);
        return false;
      }
      continue;
    }
    if (e0 <= kRelFloor) break;
    if (e1 > std::max(kQuadC * e0 * e0, kRelFloor)) {
      why = "k=" + std::to_string(k) + " e_k=" + fmt("%.3g", e0) + " e_k+1=" + fmt("%.3g", e1);
      return false;
    }
    ++pairs;
  }
  return pairs >= kQuadPairs;
}

bool linear_ratio(const RunRecord& r, double k_norm, double& worst) {
  worst = 0.0;
  const auto& it = r.iterations;
  for (std::size_t k = 0; k + 1 < it.size(); ++k) {
    if (it[k + 1].gain_error / k_norm <= kGnFloor) return true;
    worst = std::max(worst, it[k + 1].gain_error / it[k].gain_error);
  }
  return false;  // never reached the floor
}

bool convergence_rates(std::string& detail) {
  std::vector<Bench> benches;
  {
    LqrProblem p = make_pendulum();
    benches.push_back({"pendulum", p, inflated_r_seed(p, 100.0), 2000});
  }
  {
    LqrProblem p = make_shear_building();
    benches.push_back({"building", p, inflated_r_seed(p, 3.0), 1000});
  }
  bool ok = true;
  for (const Bench& b : benches) {
    const Gain k_star = optimal_gain(b.prob).gain;
    const double kn = k_star.K().norm();
    const RunRecord rn = run_method(b, k_star, Method::newton, StepMode::fixed(1.0), 15);
    const RunRecord rg = run_method(b, k_star, Method::gauss_newton, StepMode::fixed(0.5), 120);
    const RunRecord rf =
        run_method(b, k_star, Method::first_order, StepMode::backtracking(), b.first_order_cap);
    const int never = 1 << 30;
    const int in = rn.iterations_to(kGainTol).value_or(never);
    const int ig = rg.iterations_to(kGainTol).value_or(never);
    const int if_ = rf.iterations_to(kGainTol).value_or(never);
    const bool a = in <= ig && ig < if_ && in < never && ig < never;

    int pairs = 0;
    std::string why;
    const bool quad = quadratic_tail(rn, kn, pairs, why);
    double worst = 0.0;
    const bool lin = linear_ratio(rg, kn, worst) && worst <= kGnRatio;

    auto count = [&](int v, int cap) {
      return v == never ? ">" + std::to_string(cap) : std::to_string(v);
    };
    if (!detail.empty()) detail += "; ";
    detail += b.name + ": iters N=" + count(in, 15) + " GN=" + count(ig, 120) +
              " FO=" + count(if_, b.first_order_cap) + (a ? "" : " [ordering fails]") +
              ", quadratic pairs " + std::to_string(pairs) + (quad ? "" : " [" + why + "]") +
              ", GN worst ratio " + fmt("%.3f", worst) + (lin ? "" : " [fails]");
    ok = ok && a && quad && lin;
  }
  return ok;
}

// ---- criterion 8 -----------------------------------------------------------

bool landscape_shape(std::string& detail) {
  const LqrProblem p = make_pendulum();
  const Gain k_star = optimal_gain(p).gain;
  const Gain seed = inflated_r_seed(p, 100.0);
  const auto [t1, t2] = default_window(k_star, seed, 41);
  const double basin = landscape(p, t1, t2).min_value();

  OptimizerConfig nc;
  nc.method = Method::newton;
  nc.step = StepMode::backtracking();
  nc.seed_gain = seed;
  nc.max_iter = 50;
  const RunRecord rn = run(p, nc, k_star);
  bool monotone = true;
  int newton_basin = -1;
  for (std::size_t k = 0; k < rn.iterations.size(); ++k) {
    if (k > 0 && rn.iterations[k].J > rn.iterations[k - 1].J) monotone = false;
    if (newton_basin < 0 && rn.iterations[k].J <= basin) newton_basin = rn.iterations[k].k;
  }
  const bool newton_ok = monotone && newton_basin >= 0 && newton_basin <= kBasinIters;

  // Largest alpha = 2^-j whose fixed-step run never triggers the stabilization guard.
  const int cap = 5000;
  RunRecord rf;
  double alpha = 0.0;
  for (int j = 0; j < 60; ++j) {
    OptimizerConfig fc;
    fc.method = Method::first_order;
    fc.step = StepMode::fixed(std::ldexp(1.0, -j));
    fc.seed_gain = seed;
    fc.max_iter = cap;
    RunRecord r = run(p, fc, k_star);
    bool guarded = false;
    for (std::size_t k = 1; k < r.iterations.size(); ++k) {
      if (r.iterations[k].alpha_used != fc.step.alpha) guarded = true;
    }
    if (!guarded && r.status != RunStatus::direction_error) {
      rf = std::move(r);
      alpha = fc.step.alpha;
      break;
    }
  }
  int ups = 0;
  int fo_basin = -1;
  for (std::size_t k = 0; k < rf.iterations.size(); ++k) {
    if (k > 0 && rf.iterations[k].J > rf.iterations[k - 1].J) ++ups;
    if (fo_basin < 0 && rf.iterations[k].J <= basin) fo_basin = rf.iterations[k].k;
  }
  const bool slow = fo_basin < 0 || fo_basin >= kSlowdown * std::max(newton_basin, 1);
  const bool fo_ok = alpha > 0.0 && (ups > 0 || slow);

  detail = "Newton " + std::string(monotone ? "monotone" : "NOT monotone") + ", basin at k=" +
           std::to_string(newton_basin) + "; first-order alpha=" + fmt("%.3g", alpha) + " with " +
           std::to_string(ups) + " J increases, basin at k=" +
           (fo_basin < 0 ? ">" + std::to_string(cap) : std::to_string(fo_basin));
  return newton_ok && fo_ok;
}

// ---- criterion 10 ----------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

bool determinism(std::string& detail) {
  const fs::path root = fs::temp_directory_path() / "lqrpg_acceptance_det";
  fs::remove_all(root);
  fs::create_directories(root);
  const fs::path cfg = root / "building.json";
  std::ofstream(cfg) << R"({
  "problem": {"type": "shear_building", "floors": 4},
  "seed": 11,
  "methods": [{"method": "first_order", "max_iter": 300},
              {"method": "gauss_newton"}, {"method": "newton"}]
})";
  const std::string cli = LQRPG_CLI;
  int compared = 0;
  for (const auto& [label, flags] :
       std::vector<std::pair<std::string, std::string>>{{"pendulum", ""},
                                                        {"building", "--config " + cfg.string()}}) {
    for (const char* run_id : {"a", "b"}) {
      const fs::path out = root / (label + "_" + run_id);
      const std::string cmd = cli + " experiment " + flags + " --out " + out.string() + " > /dev/null";
      if (std::system(cmd.c_str()) != 0) {
        detail = "command failed: " + cmd;
        return false;
      }
    }
    for (const auto& e : fs::directory_iterator(root / (label + "_a"))) {
      if (e.path().extension() != ".csv") continue;
      const fs::path twin = root / (label + "_b") / e.path().filename();
      if (!fs::exists(twin) || slurp(e.path()) != slurp(twin)) {
        detail = "differs: " + e.path().filename().string();
        return false;
      }
      ++compared;
    }
  }
  detail = std::to_string(compared) + " CSV files byte-identical across repeated runs";
  return compared >= 6;
}

} // namespace

int main() {
  const auto instances = standard_instances();

  criterion(1, "scalar oracle equivalence", [](std::string& d) {
    return from_check(check_scalar(50), kRuntime1, d);
  });
  criterion(2, "gradient vs finite differences", [&](std::string& d) {
    return from_check(check_gradient_fd(instances), kRuntime2, d);
  });
  criterion(3, "exact Hessian vs finite differences", [&](std::string& d) {
    return from_check(check_hessian_fd(instances), kRuntime3, d);
  });
  criterion(4, "Lambda: direct vs M_i assembly", [&](std::string& d) {
    return from_check(check_lambda_paths(instances), INFINITY, d);
  });
  criterion(5, "Sigma vs moment series", [&](std::string& d) {
    return from_check(check_moment_series(instances), INFINITY, d);
  });
  criterion(6, "optimum identities", [&](std::string& d) {
    std::vector<RandomInstance> with_pendulum = instances;
    const LqrProblem p = make_pendulum();
    with_pendulum.push_back({p, inflated_r_seed(p)});
    return from_check(check_optimum(with_pendulum), INFINITY, d);
  });
  criterion(7, "convergence-rate reproduction", [](std::string& d) {
    const auto t0 = std::chrono::steady_clock::now();
    const bool ok = convergence_rates(d);
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return ok && s <= kRuntime7;
  });
  criterion(8, "landscape qualitative shape", landscape_shape);
  criterion(9, "Monte Carlo consistency", [](std::string& d) {
    NoiseModel gaussian;
    return from_check(check_monte_carlo(gaussian, kMcSamples, kMcSeed), kRuntime9, d);
  });
  criterion(10, "determinism", determinism);

  int failed = 0;
  for (const auto& l : g_lines) failed += l.passed ? 0 : 1;
  std::printf("%d/%zu criteria passed\n", int(g_lines.size()) - failed, g_lines.size());
  return failed == 0 ? 0 : 1;
}
