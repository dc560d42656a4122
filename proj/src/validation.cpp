#include "lqrpg/validation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>

#include "lqrpg/derivatives.hpp"
#include "lqrpg/errors.hpp"

namespace lqrpg {

namespace {

double rel(const Mat& got, const Mat& want) {
  const double scale = want.norm();
  return (got - want).norm() / (scale > 0.0 ? scale : 1.0);
}

double rel(double got, double want) { return std::abs(got - want) / std::max(1.0, std::abs(want)); }

CheckResult timed(std::string name, double tolerance, const std::function<void(CheckResult&)>& body) {
  CheckResult r;
  r.name = std::move(name);
  r.tolerance = tolerance;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(r);
  } catch (const std::exception& e) {
    r.passed = false;
    r.detail = std::string("exception: ") + e.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

void note_worst(CheckResult& r, double value, const std::string& where) {
  if (!(value <= r.measured)) {
    r.measured = value;
    r.detail = "worst at " + where;
  }
}

std::string instance_label(std::size_t i, const RandomInstance& inst) {
  return "instance " + std::to_string(i) + " (n=" + std::to_string(inst.prob.n()) +
         ", m=" + std::to_string(inst.prob.m()) + ")";
}

} // namespace

CheckResult check_scalar(int points) {
  return timed("scalar oracle", tol::scalar_match, [&](CheckResult& r) {
    const ScalarLqr sys;
    const LqrProblem prob = to_problem(sys);
    // |a - b theta| < 1/sqrt(gamma); stay 5% inside each edge.
    const double edge = 1.0 / std::sqrt(sys.gamma);
    const double lo = (sys.a - 0.95 * edge) / sys.b;
    const double hi = (sys.a + 0.95 * edge) / sys.b;
    for (int i = 0; i < points; ++i) {
      const double theta = lo + (hi - lo) * i / (points - 1);
      const Gain gain = Gain::from_theta(Vec::Constant(1, theta), 1, 1);
      const ScalarReport ref = scalar_reference(sys, theta);
      const CurvatureReport c = exact_hessian(prob, gain);
      const double errs[] = {
          rel(c.sigma.Sigma(0, 0), ref.sigma), rel(c.value.P(0, 0), ref.p),
          rel(c.jac_vecP(0, 0), ref.dp_dtheta), rel(c.grad(0), ref.grad),
          rel(c.H_gn(0, 0), ref.h_gn),       rel(c.Lambda(0, 0), ref.lambda),
          rel(c.H_exact(0, 0), ref.hess_exact)};
      for (double e : errs) note_worst(r, e, "theta=" + std::to_string(theta));
    }
    r.passed = r.measured <= r.tolerance;
  });
}

CheckResult check_gradient_fd(const std::vector<RandomInstance>& instances) {
  return timed("gradient vs finite differences", tol::gradient_fd, [&](CheckResult& r) {
    for (std::size_t i = 0; i < instances.size(); ++i) {
      const auto& inst = instances[i];
      note_worst(r, rel(policy_gradient(inst.prob, inst.gain), fd_gradient(inst.prob, inst.gain)),
                 instance_label(i, inst));
    }
    r.passed = r.measured <= r.tolerance;
  });
}

CheckResult check_hessian_fd(const std::vector<RandomInstance>& instances) {
  return timed("exact Hessian vs finite differences", tol::hessian_fd, [&](CheckResult& r) {
    double worst_asym = 0.0;
    for (std::size_t i = 0; i < instances.size(); ++i) {
      const auto& inst = instances[i];
      const CurvatureReport c = exact_hessian(inst.prob, inst.gain);
      note_worst(r, rel(c.H_exact, fd_hessian(inst.prob, inst.gain)), instance_label(i, inst));
      worst_asym = std::max(worst_asym, c.asymmetry);
    }
    char buf[96];
    std::snprintf(buf, sizeof buf, "; asymmetry %.3g (tol %.0e)", worst_asym,
                  tol::hessian_asymmetry);
    r.detail += buf;
    r.passed = r.measured <= r.tolerance && worst_asym <= tol::hessian_asymmetry;
  });
}

CheckResult check_lambda_paths(const std::vector<RandomInstance>& instances) {
  return timed("Lambda via M_i", tol::lambda_paths, [&](CheckResult& r) {
    for (std::size_t i = 0; i < instances.size(); ++i) {
      const auto& inst = instances[i];
      const Mat direct = lambda_term(inst.prob, inst.gain, jacobian_vecP(inst.prob, inst.gain));
      note_worst(r, rel(lambda_via_Mi(inst.prob, inst.gain), direct), instance_label(i, inst));
    }
    r.passed = r.measured <= r.tolerance;
  });
}

CheckResult check_moment_series(const std::vector<RandomInstance>& instances) {
  return timed("Sigma vs discounted moment series", tol::moment_series, [&](CheckResult& r) {
    for (std::size_t i = 0; i < instances.size(); ++i) {
      const auto& inst = instances[i];
      const Mat series = discounted_moment_series(inst.prob, inst.gain, tol::moment_tail);
      note_worst(r, rel(series, solve_sigma(inst.prob, inst.gain).Sigma), instance_label(i, inst));
    }
    r.passed = r.measured <= r.tolerance;
  });
}

CheckResult check_optimum(const std::vector<RandomInstance>& instances) {
  return timed("optimum identities", tol::optimum_gn_fd, [&](CheckResult& r) {
    double worst_grad = 0.0;
    double worst_lambda = 0.0;
    for (std::size_t i = 0; i < instances.size(); ++i) {
      const auto& inst = instances[i];
      const Gain k_star = optimal_gain(inst.prob).gain;
      const CurvatureReport c = exact_hessian(inst.prob, k_star);
      worst_grad = std::max(worst_grad, c.grad.norm());
      worst_lambda = std::max(worst_lambda, c.Lambda.norm() / c.H_gn.norm());
      note_worst(r, rel(c.H_gn, fd_hessian(inst.prob, k_star)), instance_label(i, inst));
    }
    char buf[160];
    std::snprintf(buf, sizeof buf, "; |grad| %.3g (tol %.0e); |Lambda|/|H_gn| %.3g (tol %.0e)",
                  worst_grad, tol::optimum_grad, worst_lambda, tol::optimum_lambda);
    r.detail += buf;
    r.passed = r.measured <= r.tolerance && worst_grad <= tol::optimum_grad &&
               worst_lambda <= tol::optimum_lambda;
  });
}

CheckResult check_monte_carlo(const NoiseModel& noise, long samples, std::uint64_t seed) {
  static const char* names[] = {"gaussian", "truncated_gaussian", "uniform_box"};
  const std::string name =
      std::string("Monte Carlo J (") + names[static_cast<int>(noise.kind)] + ")";
  return timed(name, tol::mc_sigmas, [&](CheckResult& r) {
    const LqrProblem prob = make_pendulum();
    const Gain k_star = optimal_gain(prob).gain;
    const double J = performance(prob, k_star);
    const McEstimate est = monte_carlo_J(prob, k_star, noise, samples, 0, seed);
    r.measured = std::abs(est.mean - J) / est.std_error;
    char buf[200];
    std::snprintf(buf, sizeof buf, "J=%.10g mc=%.10g se=%.3g samples=%ld horizon=%ld", J,
                  est.mean, est.std_error, est.samples, est.horizon);
    r.detail = buf;
    r.passed = r.measured <= r.tolerance;
  });
}

std::vector<CheckResult> validation_suite(long mc_samples, std::uint64_t seed) {
  const auto instances = standard_instances();
  std::vector<CheckResult> out;
  out.push_back(check_scalar());
  out.push_back(check_gradient_fd(instances));
  out.push_back(check_hessian_fd(instances));
  out.push_back(check_lambda_paths(instances));
  out.push_back(check_moment_series(instances));
  out.push_back(check_optimum(instances));
  for (NoiseKind k : {NoiseKind::gaussian, NoiseKind::truncated_gaussian, NoiseKind::uniform_box}) {
    NoiseModel noise;
    noise.kind = k;
    out.push_back(check_monte_carlo(noise, mc_samples, seed));
  }
  return out;
}

std::string format_check(const CheckResult& r) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%s  %-40s measured %.3g tol %.0e  (%.2fs)  ",
                r.passed ? "PASS" : "FAIL", r.name.c_str(), r.measured, r.tolerance, r.seconds);
  return buf + r.detail;
}

} // namespace lqrpg
