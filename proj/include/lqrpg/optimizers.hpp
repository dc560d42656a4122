#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lqrpg/derivatives.hpp"

namespace lqrpg {

enum class Method { first_order, gauss_newton, newton };

std::string_view to_string(Method m);
/// Accepts "first_order", "gauss_newton", "newton". Throws InvalidParameter.
Method parse_method(std::string_view name);

struct StepMode {
  enum class Kind { fixed, backtracking };
  Kind kind = Kind::backtracking;
  double alpha = 1.0;  ///< fixed step, or the initial trial step when backtracking
  double c_armijo = 1e-4;
  double shrink = 0.5;
  int max_backtracks = 60;

  static StepMode fixed(double alpha) { return {Kind::fixed, alpha}; }
  static StepMode backtracking(double alpha0 = 1.0) { return {Kind::backtracking, alpha0}; }
};

struct OptimizerConfig {
  Method method = Method::newton;
  StepMode step;
  double grad_tol = 1e-8;
  int max_iter = 100;
  double newton_damping = 1e-8;
  Gain seed_gain;

  void validate() const;
};

struct IterationRecord {
  int k = 0;
  double J = 0.0;
  double grad_norm = 0.0;
  double gain_error = 0.0;  ///< ||K_k - K*||_F
  double alpha_used = 0.0;  ///< step that produced this iterate; 0 for the seed
  int backtracks = 0;
  double stabilizing_margin = 0.0;
  Vec theta;
};

enum class RunStatus { converged, max_iter, line_search_failure, direction_error };
std::string_view to_string(RunStatus s);

/// Per-iteration trace of one optimizer run. A run that stops on a direction
/// or line-search error keeps every iterate recorded so far and reports the
/// failure through `status` and `message`.
struct RunRecord {
  Method method = Method::newton;
  std::vector<IterationRecord> iterations;
  RunStatus status = RunStatus::max_iter;
  std::string message;
  Gain final_gain;
  Gain k_star;

  /// First k with gain_error <= tol, or nullopt if never reached.
  std::optional<int> iterations_to(double gain_error_tol) const;
};

/// Descent direction for the preconditioned update theta <- theta + alpha d.
///
/// first_order uses -grad, gauss_newton -H_gn^{-1} grad, newton
/// -(H_exact + lambda I)^{-1} grad where lambda is the first of
/// {0, damping, 2 damping, 4 damping, ...} (60 doublings at most) for which a
/// Cholesky factorization succeeds. Throws DirectionError when no such shift
/// exists or the result is not a descent direction.
Vec search_direction(Method method, const CurvatureReport& report, double damping);

/// Curvature needed by `method` at `gain`. first_order fills grad (plus value
/// and sigma), gauss_newton adds H_gn, newton fills the full report.
CurvatureReport curvature_for(Method method, const LqrProblem& prob, const Gain& gain);

struct StepResult {
  double alpha = 0.0;
  Gain gain;
  double J = 0.0;
  int backtracks = 0;
};

/// Armijo backtracking: alpha = alpha0 * shrink^j for the smallest j such that
/// the trial gain is gamma-stabilizing and
/// J(trial) <= J0 + c_armijo * alpha * grad^T direction + slack, where
/// slack = kArmijoRoundoff * |J0| absorbs rounding in J. Throws
/// LineSearchFailure after max_backtracks shrinks.
StepResult backtracking_search(const LqrProblem& prob, const Gain& gain, const Vec& direction,
                               double J0, const Vec& grad, const StepMode& mode);

/// Fixed step with the stabilization guard only: alpha shrinks while the
/// trial gain is not gamma-stabilizing.
StepResult guarded_fixed_step(const LqrProblem& prob, const Gain& gain, const Vec& direction,
                              const StepMode& mode);

inline constexpr double kArmijoRoundoff = 1e-13;

/// Runs the preconditioned policy update until grad_norm <= grad_tol or
/// max_iter steps. K* is computed with optimal_gain() when not supplied.
/// Throws SeedNotStabilizing when the seed gain is not gamma-stabilizing.
RunRecord run(const LqrProblem& prob, const OptimizerConfig& cfg,
              const std::optional<Gain>& k_star = std::nullopt);

} // namespace lqrpg
