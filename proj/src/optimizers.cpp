#include "lqrpg/optimizers.hpp"

#include <cmath>
#include <string>

#include <Eigen/Cholesky>

#include "lqrpg/errors.hpp"

namespace lqrpg {

std::string_view to_string(Method m) {
  switch (m) {
  case Method::first_order:
    return "first_order";
  case Method::gauss_newton:
    return "gauss_newton";
  case Method::newton:
    return "newton";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  if (name == "first_order") return Method::first_order;
  if (name == "gauss_newton") return Method::gauss_newton;
  if (name == "newton") return Method::newton;
  throw InvalidParameter("unknown method '" + std::string(name) +
                         "' (expected first_order, gauss_newton or newton)");
}

std::string_view to_string(RunStatus s) {
  switch (s) {
  case RunStatus::converged:
    return "converged";
  case RunStatus::max_iter:
    return "max_iter";
  case RunStatus::line_search_failure:
    return "line_search_failure";
  case RunStatus::direction_error:
    return "direction_error";
  }
  return "unknown";
}

void OptimizerConfig::validate() const {
  if (!(step.alpha > 0.0)) throw InvalidParameter("step size alpha must be positive");
  if (!(step.shrink > 0.0 && step.shrink < 1.0)) {
    throw InvalidParameter("shrink must lie in (0, 1)");
  }
  if (!(step.c_armijo > 0.0 && step.c_armijo < 1.0)) {
    throw InvalidParameter("c_armijo must lie in (0, 1)");
  }
  if (step.max_backtracks < 0) throw InvalidParameter("max_backtracks must be non-negative");
  if (!(grad_tol > 0.0)) throw InvalidParameter("grad_tol must be positive");
  if (max_iter < 0) throw InvalidParameter("max_iter must be non-negative");
  if (!(newton_damping >= 0.0)) throw InvalidParameter("newton_damping must be non-negative");
}

std::optional<int> RunRecord::iterations_to(double gain_error_tol) const {
  for (const auto& it : iterations) {
    if (it.gain_error <= gain_error_tol) return it.k;
  }
  return std::nullopt;
}

namespace {

Vec solve_spd(const Mat& h, const Vec& g, bool* ok) {
  Eigen::LLT<Mat> llt(h);
  *ok = llt.info() == Eigen::Success;
  if (!*ok) return {};
  Vec x = llt.solve(g);
  *ok = x.allFinite();
  return x;
}

} // namespace

Vec search_direction(Method method, const CurvatureReport& report, double damping) {
  const Vec& g = report.grad;
  if (g.size() == 0 || g.isZero(0.0)) return Vec::Zero(g.size());

  Vec d;
  switch (method) {
  case Method::first_order:
    d = -g;
    break;
  case Method::gauss_newton: {
    bool ok = false;
    d = -solve_spd(report.H_gn, g, &ok);
    if (!ok) throw DirectionError("Gauss-Newton matrix is not positive definite");
    break;
  }
  case Method::newton: {
    const Eigen::Index dim = g.size();
    const double base = damping > 0.0 ? damping : 1e-8;
    bool ok = false;
    Vec x = solve_spd(report.H_exact, g, &ok);
    for (int j = 0; !ok && j <= 60; ++j) {
      const double shift = base * std::ldexp(1.0, j);
      x = solve_spd(report.H_exact + shift * Mat::Identity(dim, dim), g, &ok);
    }
    if (!ok) throw DirectionError("no positive-definite shift of the Hessian found");
    d = -x;
    break;
  }
  }
  if (!(d.dot(g) < 0.0)) throw DirectionError("search direction is not a descent direction");
  return d;
}

CurvatureReport curvature_for(Method method, const LqrProblem& prob, const Gain& gain) {
  if (method == Method::newton) return exact_hessian(prob, gain);
  CurvatureReport r;
  r.value = solve_value(prob, gain);
  r.sigma = solve_sigma(prob, gain);
  r.S = s_matrix(prob, gain, r.value);
  r.grad = 2.0 * vec(r.S * r.sigma.Sigma);
  if (method == Method::gauss_newton) {
    const Mat curvature =
        symmetrized(prob.R + prob.gamma * prob.B.transpose() * r.value.P * prob.B);
    r.H_gn = 2.0 * kron(r.sigma.Sigma, curvature);
  }
  return r;
}

namespace {

Gain step_to(const LqrProblem& prob, const Gain& gain, const Vec& direction, double alpha) {
  return Gain::from_theta(gain.theta() + alpha * direction, prob.m(), prob.n());
}

} // namespace

StepResult backtracking_search(const LqrProblem& prob, const Gain& gain, const Vec& direction,
                               double J0, const Vec& grad, const StepMode& mode) {
  const double slope = grad.dot(direction);
  if (direction.isZero(0.0)) return StepResult{mode.alpha, gain, J0, 0};
  double alpha = mode.alpha;
  for (int j = 0; j <= mode.max_backtracks; ++j) {
    Gain trial = step_to(prob, gain, direction, alpha);
    if (is_gamma_stabilizing(prob, trial).stabilizing) {
      const double J = performance(prob, trial);
      if (std::isfinite(J) &&
          J <= J0 + mode.c_armijo * alpha * slope + kArmijoRoundoff * std::abs(J0)) {
        return StepResult{alpha, std::move(trial), J, j};
      }
    }
    alpha *= mode.shrink;
  }
  throw LineSearchFailure("no acceptable step after " + std::to_string(mode.max_backtracks) +
                          " backtracks");
}

StepResult guarded_fixed_step(const LqrProblem& prob, const Gain& gain, const Vec& direction,
                              const StepMode& mode) {
  double alpha = mode.alpha;
  for (int j = 0; j <= mode.max_backtracks; ++j) {
    Gain trial = step_to(prob, gain, direction, alpha);
    if (is_gamma_stabilizing(prob, trial).stabilizing) {
      const double J = performance(prob, trial);
      return StepResult{alpha, std::move(trial), J, j};
    }
    alpha *= mode.shrink;
  }
  throw LineSearchFailure("fixed step leaves the stabilizing set even after " +
                          std::to_string(mode.max_backtracks) + " reductions");
}

RunRecord run(const LqrProblem& prob, const OptimizerConfig& cfg,
              const std::optional<Gain>& k_star) {
  prob.validate();
  cfg.validate();
  if (cfg.seed_gain.rows() != prob.m() || cfg.seed_gain.cols() != prob.n()) {
    throw DimensionError("seed gain has the wrong shape");
  }
  const auto seed_check = is_gamma_stabilizing(prob, cfg.seed_gain);
  if (!seed_check.stabilizing) {
    throw SeedNotStabilizing("seed gain is not gamma-stabilizing (rho = " +
                             std::to_string(seed_check.rho) + ")");
  }

  RunRecord rec;
  rec.method = cfg.method;
  rec.k_star = k_star ? *k_star : optimal_gain(prob).gain;

  Gain gain = cfg.seed_gain;
  double alpha_used = 0.0;
  int backtracks = 0;
  for (int k = 0;; ++k) {
    const CurvatureReport report = curvature_for(cfg.method, prob, gain);
    IterationRecord it;
    it.k = k;
    it.J = (report.value.P * prob.Sigma_0).trace() + report.value.q;
    it.grad_norm = report.grad.norm();
    it.gain_error = (gain.K() - rec.k_star.K()).norm();
    it.alpha_used = alpha_used;
    it.backtracks = backtracks;
    it.stabilizing_margin = is_gamma_stabilizing(prob, gain).margin;
    it.theta = gain.theta();
    rec.iterations.push_back(it);
    rec.final_gain = gain;

    if (it.grad_norm <= cfg.grad_tol) {
      rec.status = RunStatus::converged;
      break;
    }
    if (k >= cfg.max_iter) {
      rec.status = RunStatus::max_iter;
      break;
    }

    Vec direction;
    try {
      direction = search_direction(cfg.method, report, cfg.newton_damping);
    } catch (const DirectionError& e) {
      rec.status = RunStatus::direction_error;
      rec.message = e.what();
      break;
    }
    try {
      StepResult step = cfg.step.kind == StepMode::Kind::backtracking
                            ? backtracking_search(prob, gain, direction, it.J, report.grad,
                                                  cfg.step)
                            : guarded_fixed_step(prob, gain, direction, cfg.step);
      gain = std::move(step.gain);
      alpha_used = step.alpha;
      backtracks = step.backtracks;
    } catch (const LineSearchFailure& e) {
      rec.status = RunStatus::line_search_failure;
      rec.message = e.what();
      break;
    }
  }
  return rec;
}

} // namespace lqrpg
