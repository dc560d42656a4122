#include "lqrpg/lqr_core.hpp"

#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "lqrpg/errors.hpp"

namespace lqrpg {

namespace {

std::string shape(const Mat& x) {
  return std::to_string(x.rows()) + "x" + std::to_string(x.cols());
}

void require_shape(const Mat& x, Eigen::Index rows, Eigen::Index cols, const char* name) {
  if (x.rows() != rows || x.cols() != cols) {
    throw DimensionError(std::string(name) + " is " + shape(x) + ", expected " +
                         std::to_string(rows) + "x" + std::to_string(cols));
  }
}

void require_symmetric(const Mat& x, const char* name) {
  const double scale = 1.0 + x.norm();
  if ((x - x.transpose()).norm() > 1e-12 * scale) {
    throw InvalidParameter(std::string(name) + " is not symmetric");
  }
}

double min_eigenvalue(const Mat& x) {
  if (x.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrized(x), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

void require_psd(const Mat& x, const char* name) {
  require_symmetric(x, name);
  if (min_eigenvalue(x) < -1e-10 * (1.0 + x.norm())) {
    throw InvalidParameter(std::string(name) + " is not positive semidefinite");
  }
}

void require_stabilizing(const LqrProblem& prob, const Gain& gain, const char* where) {
  const auto check = is_gamma_stabilizing(prob, gain);
  if (!check.stabilizing) {
    throw NotStabilizing(std::string(where) + ": gain is not gamma-stabilizing (rho = " +
                         std::to_string(check.rho) + ")");
  }
}

void require_gain_shape(const LqrProblem& prob, const Gain& gain) {
  require_shape(gain.K(), prob.m(), prob.n(), "K");
}

} // namespace

void LqrProblem::validate() const {
  const Eigen::Index nn = n();
  const Eigen::Index mm = m();
  require_shape(A, nn, nn, "A");
  require_shape(B, nn, mm, "B");
  require_shape(Q, nn, nn, "Q");
  require_shape(R, mm, mm, "R");
  require_shape(Sigma_w, nn, nn, "Sigma_w");
  require_shape(Sigma_0, nn, nn, "Sigma_0");
  for (const Mat* x : {&A, &B, &Q, &R, &Sigma_w, &Sigma_0}) {
    if (!x->allFinite()) throw InvalidParameter("problem matrices must be finite");
  }
  if (!(gamma > 0.0 && gamma < 1.0)) {
    throw InvalidParameter("gamma must lie in (0, 1), got " + std::to_string(gamma));
  }
  require_psd(Q, "Q");
  require_psd(Sigma_w, "Sigma_w");
  require_psd(Sigma_0, "Sigma_0");
  require_symmetric(R, "R");
  if (mm > 0 && min_eigenvalue(R) <= 0.0) {
    throw InvalidParameter("R is not positive definite");
  }
}

Gain::Gain(Mat k) : k_(std::move(k)) {
  if (!k_.allFinite()) throw InvalidParameter("gain entries must be finite");
}

Gain Gain::from_theta(const Vec& theta, Eigen::Index m, Eigen::Index n) {
  return Gain(unvec(theta, m, n));
}

DiscountedLyapunov::DiscountedLyapunov(const Mat& f, double gamma)
    : n_(f.rows()), direct_(f.rows() <= kDirectLimit) {
  if (f.rows() != f.cols()) throw DimensionError("DiscountedLyapunov: F is not square");
  if (direct_) {
    const Eigen::Index nn = n_ * n_;
    Mat t = Mat::Identity(nn, nn) - gamma * kron(f, f);
    lu_.compute(t);
    const double rc = lu_.rcond();
    condition_ = rc > 0.0 ? 1.0 / rc : std::numeric_limits<double>::infinity();
    return;
  }
  const double contraction = gamma * std::pow(spectral_radius(f), 2);
  condition_ = contraction < 1.0 ? (1.0 + contraction) / (1.0 - contraction)
                                 : std::numeric_limits<double>::infinity();
  Mat g = std::sqrt(gamma) * f;
  for (int j = 0; j < 64; ++j) {
    const double norm = g.norm();
    if (!std::isfinite(norm)) break;
    powers_.push_back(g);
    if (norm < 1e-9) return;
    g = (g * g).eval();
  }
  condition_ = std::numeric_limits<double>::infinity();
  powers_.clear();
}

Mat DiscountedLyapunov::solve(const Mat& c) const {
  require_shape(c, n_, n_, "Lyapunov right-hand side");
  if (direct_) {
    return unvec(lu_.solve(vec(c)), n_, n_);
  }
  if (powers_.empty()) {
    throw NoConvergence("discounted Lyapunov doubling iteration does not converge");
  }
  Mat x = c;
  for (const Mat& g : powers_) {
    x += g * x * g.transpose();
  }
  return x;
}

Mat closed_loop(const LqrProblem& prob, const Gain& gain) {
  require_gain_shape(prob, gain);
  return prob.A - prob.B * gain.K();
}

StabilityCheck is_gamma_stabilizing(const LqrProblem& prob, const Gain& gain,
                                    double margin_tol) {
  const Mat acl = closed_loop(prob, gain);
  StabilityCheck out;
  out.rho = std::sqrt(prob.gamma) * spectral_radius(acl);
  out.margin = 1.0 - out.rho;
  out.stabilizing = std::isfinite(out.rho) && out.rho < 1.0 - margin_tol;
  return out;
}

ValueSolution solve_value(const LqrProblem& prob, const Gain& gain) {
  require_stabilizing(prob, gain, "solve_value");
  const Mat acl = closed_loop(prob, gain);
  const Mat& k = gain.K();
  const Mat stage = prob.Q + k.transpose() * prob.R * k;
  DiscountedLyapunov lyap(acl.transpose(), prob.gamma);
  ValueSolution sol;
  sol.P = symmetrized(lyap.solve(stage));
  sol.q = prob.gamma / (1.0 - prob.gamma) * (sol.P * prob.Sigma_w).trace();
  return sol;
}

MomentMatrix solve_sigma(const LqrProblem& prob, const Gain& gain) {
  require_stabilizing(prob, gain, "solve_sigma");
  const Mat acl = closed_loop(prob, gain);
  const Mat rhs = prob.Sigma_0 + prob.gamma / (1.0 - prob.gamma) * prob.Sigma_w;
  DiscountedLyapunov lyap(acl, prob.gamma);
  return MomentMatrix{symmetrized(lyap.solve(rhs))};
}

double performance(const LqrProblem& prob, const Gain& gain) {
  const ValueSolution sol = solve_value(prob, gain);
  return (sol.P * prob.Sigma_0).trace() + sol.q;
}

double value_at(const ValueSolution& sol, const Vec& s) {
  if (s.size() != sol.P.rows()) throw DimensionError("value_at: state has wrong length");
  return s.dot(sol.P * s) + sol.q;
}

double action_value_at(const LqrProblem& prob, const ValueSolution& sol, const Vec& s,
                       const Vec& a) {
  if (s.size() != prob.n() || a.size() != prob.m() || sol.P.rows() != prob.n()) {
    throw DimensionError("action_value_at: dimension mismatch");
  }
  const Mat& P = sol.P;
  const double g = prob.gamma;
  const Mat ss = prob.Q + g * prob.A.transpose() * P * prob.A;
  const Mat aa = prob.R + g * prob.B.transpose() * P * prob.B;
  return s.dot(ss * s) + 2.0 * g * s.dot(prob.A.transpose() * P * prob.B * a) + a.dot(aa * a) +
         sol.q;
}

Mat improved_gain(const LqrProblem& prob, const Mat& P) {
  const double g = prob.gamma;
  const Mat lhs = prob.R + g * prob.B.transpose() * P * prob.B;
  const Mat rhs = g * prob.B.transpose() * P * prob.A;
  return symmetrized(lhs).ldlt().solve(rhs);
}

namespace {

// Plain policy iteration at the problem's own discount from a stabilizing seed.
OptimalGain policy_iteration(const LqrProblem& prob, Gain gain, double tol, int max_iter) {
  for (int it = 1; it <= max_iter; ++it) {
    const ValueSolution sol = solve_value(prob, gain);
    Gain next(improved_gain(prob, sol.P));
    const double change = (next.K() - gain.K()).norm();
    const double scale = 1.0 + gain.K().norm();
    gain = std::move(next);
    if (change <= tol * scale) {
      return OptimalGain{gain, solve_value(prob, gain), it};
    }
  }
  throw NoConvergence("optimal_gain: policy iteration did not converge in " +
                      std::to_string(max_iter) + " iterations");
}

} // namespace

OptimalGain optimal_gain(const LqrProblem& prob, double tol, int max_iter,
                         const std::optional<Gain>& seed) {
  prob.validate();
  Gain start = seed.value_or(Gain::zero(prob.m(), prob.n()));
  require_gain_shape(prob, start);
  if (is_gamma_stabilizing(prob, start).stabilizing) {
    return policy_iteration(prob, start, tol, max_iter);
  }

  // Discount homotopy: find a discount at which the seed is stabilizing, then
  // walk back up to the target, inserting midpoints when the carried gain does
  // not stabilize the next rung.
  LqrProblem relaxed = prob;
  double gamma = prob.gamma;
  int halvings = 0;
  while (!is_gamma_stabilizing(relaxed, start).stabilizing) {
    if (++halvings > 60) {
      throw NoConvergence("optimal_gain: no discount makes the seed stabilizing");
    }
    gamma *= 0.5;
    relaxed.gamma = gamma;
  }
  int total = 0;
  OptimalGain current = policy_iteration(relaxed, start, tol, max_iter);
  total += current.iterations;
  int rungs = 0;
  while (gamma < prob.gamma) {
    double next = std::min(prob.gamma, 2.0 * gamma);
    LqrProblem trial = prob;
    trial.gamma = next;
    while (!is_gamma_stabilizing(trial, current.gain).stabilizing) {
      next = 0.5 * (gamma + next);
      trial.gamma = next;
      if (++rungs > 200 || next - gamma < 1e-12) {
        throw NoConvergence("optimal_gain: (A, B) does not appear gamma-stabilizable");
      }
    }
    current = policy_iteration(trial, current.gain, tol, max_iter);
    total += current.iterations;
    gamma = next;
    if (++rungs > 200) {
      throw NoConvergence("optimal_gain: discount homotopy did not reach the target");
    }
  }
  current.iterations = total;
  return current;
}

} // namespace lqrpg
