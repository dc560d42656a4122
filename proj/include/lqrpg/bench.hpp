#pragma once

#include <cstdint>
#include <vector>

#include "lqrpg/lqr_core.hpp"

namespace lqrpg {

/// Zero-order-hold discretization of x' = A x + B u at sample time ts.
struct Discretized {
  Mat A;
  Mat B;
};
Discretized zoh_discretize(const Mat& a_c, const Mat& b_c, double ts);

/// C diag(lambda1, lambda2) C^T with C the rotation by psi_degrees.
Mat rotated_Q(double lambda1, double lambda2, double psi_degrees);

struct PendulumParams {
  double g = 9.81;
  double length = 1.0;
  double mass = 1.0;
  double ts = 0.01;
  double gamma = 0.9;
};

/// Continuous-time upright linearization A = [[0,1],[g/l,0]], B = [0, 1/(m l^2)]^T.
Discretized pendulum_continuous(const PendulumParams& p = {});

/// Inverted pendulum, ZOH-discretized, with Sigma_w = I, Sigma_0 = 0.1 I,
/// Q = rotated_Q(1e5, 1e-4, 40) and R = 0.1.
LqrProblem make_pendulum(const PendulumParams& p = {});

/// Synthetic mass-spring-damper chain standing in for the seismic shear
/// building. Floor i is tied to floor i-1 (floor 0 to the ground) by a spring
/// of the given stiffness and a damper of damping * stiffness; the control
/// force acts on the first floor. The state is [q; q_dot] with q the floor
/// displacements relative to the base.
struct ShearBuildingParams {
  int floors = 24;
  double mass = 1.0;
  double stiffness = 1000.0;
  double damping = 0.01;  ///< stiffness-proportional damping coefficient
  double ts = 0.01;
  double gamma = 0.9;
  double lambda_hi = 1e3;
  double lambda_lo = 1e-3;
  int k_hi = -1;  ///< number of stiff directions; -1 means n / 2
  double epsilon = 1e-6;
  double noise_var = 1e-4;
  double init_var = 1e-2;
  double R = 0.01;
  std::uint64_t seed = 1;
};

/// Continuous-time chain matrices before discretization.
Discretized shear_building_continuous(const ShearBuildingParams& p);

/// Throws InvalidParameter for non-positive floors, mass, stiffness or ts.
LqrProblem make_shear_building(const ShearBuildingParams& p = {});

/// Stabilizing, suboptimal starting gain: the optimal gain of the same
/// problem with R multiplied by r_factor.
Gain inflated_r_seed(const LqrProblem& prob, double r_factor = 100.0);

struct GridAxis {
  double lo = 0.0;
  double hi = 0.0;
  int steps = 1;

  double at(int i) const { return steps <= 1 ? lo : lo + (hi - lo) * i / (steps - 1); }
};

/// J over a rectangle of the two-parameter gain space. Cells whose gain is not
/// gamma-stabilizing are flagged and carry no value (NaN in J).
struct LandscapeGrid {
  GridAxis theta1;
  GridAxis theta2;
  Mat J;  ///< theta1.steps x theta2.steps
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> stabilizing;

  /// Smallest J over stabilizing cells; NaN if none.
  double min_value() const;
};

/// Throws DimensionUnsupported unless m * n == 2.
LandscapeGrid landscape(const LqrProblem& prob, const GridAxis& theta1, const GridAxis& theta2);

/// Random problem of the given size together with a gain that is
/// gamma-stabilizing with margin. A is built as A_cl + B K with
/// rho(sqrt(gamma) A_cl) = 0.7, so the returned gain is never near the
/// stabilizing boundary.
struct RandomInstance {
  LqrProblem prob;
  Gain gain;
};
RandomInstance random_instance(std::uint64_t seed, Eigen::Index n, Eigen::Index m);

/// The 20 seeded instances (n in 1..4, m in 1..2) used by the oracle checks.
std::vector<RandomInstance> standard_instances(std::uint64_t base_seed = 2024);

} // namespace lqrpg
