#include "lqrpg/derivatives.hpp"

#include <string>

#include "lqrpg/errors.hpp"

namespace lqrpg {

namespace {

void require_stabilizing(const LqrProblem& prob, const Gain& gain, const char* where) {
  if (!is_gamma_stabilizing(prob, gain).stabilizing) {
    throw NotStabilizing(std::string(where) + ": gain is not gamma-stabilizing");
  }
}

Vec gradient_from(const Mat& s, const MomentMatrix& sigma) {
  return 2.0 * vec(s * sigma.Sigma);
}

Mat gn_from(const LqrProblem& prob, const ValueSolution& value, const MomentMatrix& sigma) {
  const Mat curvature =
      symmetrized(prob.R + prob.gamma * prob.B.transpose() * value.P * prob.B);
  return 2.0 * kron(sigma.Sigma, curvature);
}

// Right-hand block of the differential Lyapunov equation, n^2 x mn.
Mat jacobian_rhs(const Mat& s, Eigen::Index m, Eigen::Index n) {
  const Mat st = s.transpose();
  const Mat eye_n = Mat::Identity(n, n);
  return kron(st, eye_n) * commutation_matrix(m, n) + kron(eye_n, st);
}

Mat jacobian_from(const LqrProblem& prob, const Mat& acl, const Mat& s, Mat* t_out) {
  const Eigen::Index n = prob.n();
  const Eigen::Index m = prob.m();
  const DiscountedLyapunov lyap(acl.transpose(), prob.gamma);
  if (lyap.condition_estimate() > kMaxTCondition) {
    throw SingularT("jacobian_vecP: condition of T estimated at " +
                    std::to_string(lyap.condition_estimate()));
  }
  if (t_out != nullptr && lyap.direct()) {
    const Mat at = acl.transpose();
    *t_out = Mat::Identity(n * n, n * n) - prob.gamma * kron(at, at);
  }
  const Mat rhs = jacobian_rhs(s, m, n);
  Mat jac(n * n, m * n);
  // Columns are independent solves of T x = rhs_i.
  for (Eigen::Index i = 0; i < m * n; ++i) {
    jac.col(i) = vec(lyap.solve(unvec(rhs.col(i), n, n)));
  }
  return jac;
}

Mat lambda_from(const LqrProblem& prob, const Mat& acl, const MomentMatrix& sigma,
                const Mat& jac) {
  const Mat& sig = sigma.Sigma;
  const Mat left = kron(sig * acl.transpose(), prob.B.transpose());
  const Mat right = kron(acl * sig, prob.B);
  return -2.0 * (left * jac + jac.transpose() * right);
}

} // namespace

Mat s_matrix(const LqrProblem& prob, const Gain& gain, const ValueSolution& value) {
  const Mat acl = closed_loop(prob, gain);
  return prob.R * gain.K() - prob.gamma * prob.B.transpose() * value.P * acl;
}

Vec policy_gradient(const LqrProblem& prob, const Gain& gain) {
  require_stabilizing(prob, gain, "policy_gradient");
  const ValueSolution value = solve_value(prob, gain);
  const MomentMatrix sigma = solve_sigma(prob, gain);
  return gradient_from(s_matrix(prob, gain, value), sigma);
}

Mat gn_hessian(const LqrProblem& prob, const Gain& gain) {
  require_stabilizing(prob, gain, "gn_hessian");
  return gn_from(prob, solve_value(prob, gain), solve_sigma(prob, gain));
}

Mat jacobian_vecP(const LqrProblem& prob, const Gain& gain) {
  require_stabilizing(prob, gain, "jacobian_vecP");
  const ValueSolution value = solve_value(prob, gain);
  return jacobian_from(prob, closed_loop(prob, gain), s_matrix(prob, gain, value), nullptr);
}

Mat lambda_term(const LqrProblem& prob, const Gain& gain, const Mat& jac) {
  const Eigen::Index n = prob.n();
  const Eigen::Index m = prob.m();
  if (jac.rows() != n * n || jac.cols() != m * n) {
    throw DimensionError("lambda_term: Jacobian must be n^2 x mn");
  }
  return lambda_from(prob, closed_loop(prob, gain), solve_sigma(prob, gain), jac);
}

CurvatureReport exact_hessian(const LqrProblem& prob, const Gain& gain) {
  require_stabilizing(prob, gain, "exact_hessian");
  CurvatureReport r;
  const Mat acl = closed_loop(prob, gain);
  r.value = solve_value(prob, gain);
  r.sigma = solve_sigma(prob, gain);
  r.S = s_matrix(prob, gain, r.value);
  r.grad = gradient_from(r.S, r.sigma);
  r.H_gn = gn_from(prob, r.value, r.sigma);
  r.jac_vecP = jacobian_from(prob, acl, r.S, &r.T);
  r.Lambda = lambda_from(prob, acl, r.sigma, r.jac_vecP);
  const Mat raw = r.H_gn + prob.gamma * r.Lambda;
  const double norm = raw.norm();
  r.asymmetry = norm > 0.0 ? (raw - raw.transpose()).norm() / norm : 0.0;
  r.H_exact = symmetrized(raw);
  return r;
}

} // namespace lqrpg
