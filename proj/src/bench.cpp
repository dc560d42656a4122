#include "lqrpg/bench.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <Eigen/QR>

#include "lqrpg/errors.hpp"
#include "lqrpg/oracles.hpp"

namespace lqrpg {

Discretized zoh_discretize(const Mat& a_c, const Mat& b_c, double ts) {
  const Eigen::Index n = a_c.rows();
  const Eigen::Index m = b_c.cols();
  if (a_c.cols() != n || b_c.rows() != n) throw DimensionError("zoh_discretize: shapes");
  if (!(ts > 0.0)) throw InvalidParameter("zoh_discretize: ts must be positive");
  Mat aug = Mat::Zero(n + m, n + m);
  aug.topLeftCorner(n, n) = a_c;
  aug.topRightCorner(n, m) = b_c;
  const Mat e = expm(aug * ts);
  return {e.topLeftCorner(n, n), e.topRightCorner(n, m)};
}

Mat rotated_Q(double lambda1, double lambda2, double psi_degrees) {
  if (lambda1 < 0.0 || lambda2 < 0.0) {
    throw InvalidParameter("rotated_Q: eigenvalues must be non-negative");
  }
  const double psi = psi_degrees * std::numbers::pi / 180.0;
  Mat c(2, 2);
  c << std::cos(psi), -std::sin(psi), std::sin(psi), std::cos(psi);
  const Vec diag = (Vec(2) << lambda1, lambda2).finished();
  return symmetrized(c * diag.asDiagonal() * c.transpose());
}

Discretized pendulum_continuous(const PendulumParams& p) {
  Mat a(2, 2);
  a << 0.0, 1.0, p.g / p.length, 0.0;
  Mat b(2, 1);
  b << 0.0, 1.0 / (p.mass * p.length * p.length);
  return {a, b};
}

LqrProblem make_pendulum(const PendulumParams& p) {
  const Discretized c = pendulum_continuous(p);
  const Discretized d = zoh_discretize(c.A, c.B, p.ts);
  LqrProblem prob;
  prob.A = d.A;
  prob.B = d.B;
  prob.Q = rotated_Q(1e5, 1e-4, 40.0);
  prob.R = Mat::Constant(1, 1, 0.1);
  prob.gamma = p.gamma;
  prob.Sigma_w = Mat::Identity(2, 2);
  prob.Sigma_0 = 0.1 * Mat::Identity(2, 2);
  prob.validate();
  return prob;
}

Discretized shear_building_continuous(const ShearBuildingParams& p) {
  if (p.floors < 1) throw InvalidParameter("shear building: floors must be at least 1");
  if (!(p.mass > 0.0)) throw InvalidParameter("shear building: mass must be positive");
  if (!(p.stiffness > 0.0)) throw InvalidParameter("shear building: stiffness must be positive");
  if (!(p.damping >= 0.0)) throw InvalidParameter("shear building: damping must be non-negative");
  const Eigen::Index f = p.floors;
  Mat stiff = Mat::Zero(f, f);
  for (Eigen::Index i = 0; i < f; ++i) {
    // spring below floor i, plus the spring above it unless i is the roof
    stiff(i, i) = (i + 1 < f) ? 2.0 * p.stiffness : p.stiffness;
    if (i + 1 < f) {
      stiff(i, i + 1) = -p.stiffness;
      stiff(i + 1, i) = -p.stiffness;
    }
  }
  const Mat damp = p.damping * stiff;
  const double inv_m = 1.0 / p.mass;

  Mat a = Mat::Zero(2 * f, 2 * f);
  a.topRightCorner(f, f) = Mat::Identity(f, f);
  a.bottomLeftCorner(f, f) = -inv_m * stiff;
  a.bottomRightCorner(f, f) = -inv_m * damp;
  Mat b = Mat::Zero(2 * f, 1);
  b(f, 0) = inv_m;
  return {a, b};
}

LqrProblem make_shear_building(const ShearBuildingParams& p) {
  if (!(p.ts > 0.0)) throw InvalidParameter("shear building: ts must be positive");
  const Discretized c = shear_building_continuous(p);
  const Discretized d = zoh_discretize(c.A, c.B, p.ts);
  const Eigen::Index n = d.A.rows();
  const Eigen::Index k = p.k_hi < 0 ? n / 2 : p.k_hi;
  if (k > n) throw InvalidParameter("shear building: k_hi exceeds the state dimension");

  Sampler rng(splitmix64(p.seed));
  Mat g(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) g(i, j) = rng.normal();
  }
  const Mat v = Eigen::HouseholderQR<Mat>(g).householderQ();
  Vec spectrum(n);
  spectrum.head(k).setConstant(p.lambda_hi);
  spectrum.tail(n - k).setConstant(p.lambda_lo);

  LqrProblem prob;
  prob.A = d.A;
  prob.B = d.B;
  prob.Q = symmetrized(v * spectrum.asDiagonal() * v.transpose()) +
           p.epsilon * Mat::Identity(n, n);
  prob.R = Mat::Constant(1, 1, p.R);
  prob.gamma = p.gamma;
  prob.Sigma_w = p.noise_var * Mat::Identity(n, n);
  prob.Sigma_0 = p.init_var * Mat::Identity(n, n);
  prob.validate();
  return prob;
}

Gain inflated_r_seed(const LqrProblem& prob, double r_factor) {
  LqrProblem inflated = prob;
  inflated.R = prob.R * r_factor;
  return optimal_gain(inflated).gain;
}

double LandscapeGrid::min_value() const {
  double best = std::numeric_limits<double>::quiet_NaN();
  for (Eigen::Index i = 0; i < J.rows(); ++i) {
    for (Eigen::Index j = 0; j < J.cols(); ++j) {
      if (stabilizing(i, j) && !(J(i, j) >= best)) best = J(i, j);
    }
  }
  return best;
}

LandscapeGrid landscape(const LqrProblem& prob, const GridAxis& theta1, const GridAxis& theta2) {
  if (prob.m() * prob.n() != 2) {
    throw DimensionUnsupported("landscape requires exactly two gain parameters, got " +
                               std::to_string(prob.m() * prob.n()));
  }
  if (theta1.steps < 1 || theta2.steps < 1) {
    throw InvalidParameter("landscape: grid steps must be positive");
  }
  LandscapeGrid grid;
  grid.theta1 = theta1;
  grid.theta2 = theta2;
  grid.J = Mat::Constant(theta1.steps, theta2.steps, std::numeric_limits<double>::quiet_NaN());
  grid.stabilizing.setConstant(theta1.steps, theta2.steps, false);
  for (int i = 0; i < theta1.steps; ++i) {
    for (int j = 0; j < theta2.steps; ++j) {
      const Vec theta = (Vec(2) << theta1.at(i), theta2.at(j)).finished();
      const Gain g = Gain::from_theta(theta, prob.m(), prob.n());
      if (!is_gamma_stabilizing(prob, g).stabilizing) continue;
      grid.stabilizing(i, j) = true;
      grid.J(i, j) = performance(prob, g);
    }
  }
  return grid;
}

namespace {

Mat random_matrix(Sampler& rng, Eigen::Index rows, Eigen::Index cols) {
  Mat x(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) x(i, j) = rng.normal();
  }
  return x;
}

Mat random_spd(Sampler& rng, Eigen::Index n, double shift) {
  const Mat l = random_matrix(rng, n, n);
  return symmetrized(l * l.transpose() / static_cast<double>(n) +
                     shift * Mat::Identity(n, n));
}

} // namespace

RandomInstance random_instance(std::uint64_t seed, Eigen::Index n, Eigen::Index m) {
  Sampler rng(splitmix64(seed));
  LqrProblem prob;
  prob.gamma = 0.5 + 0.45 * rng.uniform();
  Mat acl = random_matrix(rng, n, n);
  const double rho = spectral_radius(acl);
  acl *= 0.7 / (std::sqrt(prob.gamma) * (rho > 0.0 ? rho : 1.0));
  prob.B = random_matrix(rng, n, m);
  const Mat k = 0.5 * random_matrix(rng, m, n);
  prob.A = acl + prob.B * k;
  prob.Q = random_spd(rng, n, 0.1);
  prob.R = random_spd(rng, m, 0.1);
  prob.Sigma_w = random_spd(rng, n, 0.05);
  prob.Sigma_0 = random_spd(rng, n, 0.05);
  prob.validate();
  return {prob, Gain(k)};
}

std::vector<RandomInstance> standard_instances(std::uint64_t base_seed) {
  std::vector<RandomInstance> out;
  for (int i = 0; i < 20; ++i) {
    const Eigen::Index n = 1 + i % 4;
    const Eigen::Index m = 1 + (i / 4) % 2;
    out.push_back(random_instance(base_seed + static_cast<std::uint64_t>(i), n, m));
  }
  return out;
}

} // namespace lqrpg
