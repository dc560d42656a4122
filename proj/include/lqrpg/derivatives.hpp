#pragma once

#include "lqrpg/lqr_core.hpp"

namespace lqrpg {

/// Everything the second-order methods need at one gain.
struct CurvatureReport {
  Vec grad;      ///< gradient of J with respect to theta = vec(K), length mn
  Mat H_gn;      ///< Gauss-Newton term 2 Sigma kron (R + gamma B^T P B)
  Mat Lambda;    ///< distributional term, vanishes at the optimum
  Mat H_exact;   ///< H_gn + gamma * Lambda, symmetrized
  Mat jac_vecP;  ///< d vec(P) / d theta, n^2 x mn
  Mat S;         ///< R K - gamma B^T P A_cl, m x n
  /// I - gamma (A_cl^T kron A_cl^T). Only materialized when n is at most
  /// DiscountedLyapunov::kDirectLimit; empty otherwise.
  Mat T;
  ValueSolution value;
  MomentMatrix sigma;
  /// ||H_exact - H_exact^T||_F / ||H_exact||_F measured before symmetrization.
  double asymmetry = 0.0;
};

/// Conditioning threshold on T above which jacobian_vecP raises SingularT.
inline constexpr double kMaxTCondition = 1e14;

/// S = R K - gamma B^T P A_cl.
Mat s_matrix(const LqrProblem& prob, const Gain& gain, const ValueSolution& value);

/// 2 vec(S Sigma).
Vec policy_gradient(const LqrProblem& prob, const Gain& gain);

Mat gn_hessian(const LqrProblem& prob, const Gain& gain);

/// d vec(P)/d theta = T^{-1} [ (S^T kron I_n) K_{mn} + (I_n kron S^T) ].
Mat jacobian_vecP(const LqrProblem& prob, const Gain& gain);

/// -2 [ (Sigma A_cl^T kron B^T) jac + jac^T (A_cl Sigma kron B) ].
Mat lambda_term(const LqrProblem& prob, const Gain& gain, const Mat& jac);

/// Assembles every field of CurvatureReport from one value and moment solve.
CurvatureReport exact_hessian(const LqrProblem& prob, const Gain& gain);

} // namespace lqrpg
