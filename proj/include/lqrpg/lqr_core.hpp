#pragma once

#include <optional>
#include <vector>

#include <Eigen/LU>

#include "lqrpg/tensorops.hpp"

namespace lqrpg {

/// Discounted stochastic LQR: s' = A s + B a + w, cost s^T Q s + a^T R a.
struct LqrProblem {
  Mat A;        ///< n x n
  Mat B;        ///< n x m
  Mat Q;        ///< n x n, symmetric PSD
  Mat R;        ///< m x m, symmetric PD
  double gamma = 0.9;
  Mat Sigma_w;  ///< process-noise covariance
  Mat Sigma_0;  ///< E[s_0 s_0^T]

  Eigen::Index n() const { return A.rows(); }
  Eigen::Index m() const { return B.cols(); }

  /// Throws DimensionError / InvalidParameter if shapes or definiteness are off.
  void validate() const;
};

/// State-feedback gain, policy a = -K s. theta() is always vec(K).
class Gain {
public:
  Gain() = default;
  explicit Gain(Mat k);
  static Gain from_theta(const Vec& theta, Eigen::Index m, Eigen::Index n);
  static Gain zero(Eigen::Index m, Eigen::Index n) { return Gain(Mat::Zero(m, n)); }

  const Mat& K() const { return k_; }
  Vec theta() const { return vec(k_); }
  Eigen::Index rows() const { return k_.rows(); }
  Eigen::Index cols() const { return k_.cols(); }

private:
  Mat k_;
};

/// V(s) = s^T P s + q.
struct ValueSolution {
  Mat P;
  double q = 0.0;
};

/// Discounted state correlation sum_k gamma^k E[s_k s_k^T].
struct MomentMatrix {
  Mat Sigma;
};

struct StabilityCheck {
  bool stabilizing = false;
  double rho = 0.0;     ///< spectral radius of sqrt(gamma) * A_cl
  double margin = 0.0;  ///< 1 - rho
};

/// Solver for the discounted Lyapunov equation X = C + gamma F X F^T.
///
/// For n <= kDirectLimit it factors I - gamma (F kron F) once with partial-pivot
/// LU. Larger systems use the doubling form of the fixed-point iteration,
/// X <- X + G X G^T, G <- G^2 starting from G = sqrt(gamma) F, whose powers
/// are precomputed once and shared by every right-hand side.
class DiscountedLyapunov {
public:
  static constexpr Eigen::Index kDirectLimit = 20;

  DiscountedLyapunov(const Mat& f, double gamma);

  Mat solve(const Mat& c) const;

  /// Estimated condition number of I - gamma (F kron F).
  double condition_estimate() const { return condition_; }
  bool direct() const { return direct_; }

private:
  Eigen::Index n_;
  bool direct_;
  double condition_ = 1.0;
  Eigen::PartialPivLU<Mat> lu_;
  std::vector<Mat> powers_;
};

Mat closed_loop(const LqrProblem& prob, const Gain& gain);

/// Definition of gamma-stabilizing: rho(sqrt(gamma) A_cl) < 1 - margin_tol.
StabilityCheck is_gamma_stabilizing(const LqrProblem& prob, const Gain& gain,
                                    double margin_tol = 0.0);

/// P = Q + K^T R K + gamma A_cl^T P A_cl and q = gamma/(1-gamma) tr(P Sigma_w).
ValueSolution solve_value(const LqrProblem& prob, const Gain& gain);

/// Sigma - gamma A_cl Sigma A_cl^T = Sigma_0 + gamma/(1-gamma) Sigma_w.
MomentMatrix solve_sigma(const LqrProblem& prob, const Gain& gain);

/// J = tr(P Sigma_0) + q.
double performance(const LqrProblem& prob, const Gain& gain);

double value_at(const ValueSolution& sol, const Vec& s);
double action_value_at(const LqrProblem& prob, const ValueSolution& sol, const Vec& s,
                       const Vec& a);

struct OptimalGain {
  Gain gain;
  ValueSolution value;
  int iterations = 0;
};

/// Policy iteration on K <- (R + gamma B^T P B)^{-1} gamma B^T P A.
///
/// Stops when ||K_new - K||_F <= tol * (1 + ||K||_F). If the seed (zero by
/// default) is not gamma-stabilizing, the discount is halved until it is, and
/// the solution is carried back up to the target discount.
OptimalGain optimal_gain(const LqrProblem& prob, double tol = 1e-12, int max_iter = 200,
                         const std::optional<Gain>& seed = std::nullopt);

/// The Riccati policy-improvement map evaluated at P.
Mat improved_gain(const LqrProblem& prob, const Mat& P);

} // namespace lqrpg
