#pragma once

#include <cstdint>
#include <random>

#include "lqrpg/lqr_core.hpp"

// Independent ground truth for the closed-form derivatives. Nothing here calls
// into derivatives.hpp except lambda_via_Mi, which reuses jacobian_vecP and
// checks only the assembly of the distributional term.

namespace lqrpg {

/// Closed forms for the scalar system s' = a s + b u + w with u = -theta s.
struct ScalarReport {
  double sigma = 0.0;
  double p = 0.0;
  double dp_dtheta = 0.0;
  double grad = 0.0;
  double h_gn = 0.0;
  double lambda = 0.0;
  /// Second derivative from differentiating the scalar gradient directly,
  /// 2 (S' Sigma + S Sigma'); independent of h_gn and lambda.
  double hess_exact = 0.0;
};

struct ScalarLqr {
  double a = 1.0;
  double b = 1.0;
  double Q = 0.5;
  double R = 0.5;
  double gamma = 0.9;
  double sigma0_sq = 1.0;
  double sigma_sq = 0.0;
};

ScalarReport scalar_reference(const ScalarLqr& sys, double theta);

/// Lifts the scalar system into an LqrProblem with 1x1 matrices.
LqrProblem to_problem(const ScalarLqr& sys);

/// Central differences of performance(). A step h <= 0 selects the default
/// per-coordinate step max(1e-6, 1e-6 |theta_i|).
Vec fd_gradient(const LqrProblem& prob, const Gain& gain, double h = 0.0);

/// Four-point central second differences of performance(), symmetrized. A
/// step h <= 0 selects the default 1e-4 * max(1, |theta_i|).
Mat fd_hessian(const LqrProblem& prob, const Gain& gain, double h = 0.0);

/// sum_{k=0}^{N} gamma^k M_k with M_{k+1} = A_cl M_k A_cl^T + Sigma_w and
/// M_0 = Sigma_0, truncated once gamma^N is at most trunc_tol.
Mat discounted_moment_series(const LqrProblem& prob, const Gain& gain,
                             double trunc_tol = 1e-14);

/// Distributional Hessian term assembled through M_i = B^T (D_i + D_i^T) A_cl,
/// with D_i = dP/dtheta_i: E[f] = -(Sigma kron I_m) [vec(M_1) ... vec(M_mn)],
/// returned as E[f] + E[f]^T.
Mat lambda_via_Mi(const LqrProblem& prob, const Gain& gain);

enum class NoiseKind { gaussian, truncated_gaussian, uniform_box };

/// Zero-mean i.i.d. disturbance families. Every kind is normalized so that the
/// sample covariance matches the matrix it is paired with.
///
/// truncated_gaussian draws coordinates from N(0,1) restricted to |z| < cutoff
/// with a C-infinity taper of width `taper` so the density vanishes on the
/// boundary, then rescales to unit variance.
struct NoiseModel {
  NoiseKind kind = NoiseKind::gaussian;
  double cutoff = 3.0;
  double taper = 0.5;
};

/// Variance of one coordinate of the truncated_gaussian family before rescaling.
double truncated_gaussian_variance(const NoiseModel& model);

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  long samples = 0;
  long horizon = 0;
};

/// Smallest horizon whose discounted tail is at most rel_tol * |J|, computed
/// from the exact second-moment recursion.
long mc_horizon(const LqrProblem& prob, const Gain& gain, double rel_tol = 1e-6);

/// Monte Carlo estimate of J from `samples` independent rollouts. A horizon of
/// zero selects mc_horizon(). Rollout i draws from std::mt19937_64 seeded with
/// splitmix64(seed + i * 0x9e3779b97f4a7c15); uniforms use the top 53 bits and
/// normals use Box-Muller, so traces are reproducible across platforms.
McEstimate monte_carlo_J(const LqrProblem& prob, const Gain& gain, const NoiseModel& noise,
                         long samples, long horizon, std::uint64_t seed);

std::uint64_t splitmix64(std::uint64_t x);

/// Portable sampler shared by the Monte Carlo oracle and the generators.
class Sampler {
public:
  explicit Sampler(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1).
  double uniform();
  /// Uniform on (0, 1].
  double uniform_open();
  double normal();

private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Symmetric PSD square root; negative eigenvalues from round-off are clamped.
Mat psd_sqrt(const Mat& x);

} // namespace lqrpg
