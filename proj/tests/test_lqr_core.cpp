#include <gtest/gtest.h>

#include <cmath>

#include "helpers.hpp"
#include "lqrpg/bench.hpp"
#include "lqrpg/derivatives.hpp"
#include "lqrpg/errors.hpp"
#include "lqrpg/lqr_core.hpp"

using namespace lqrpg;
using namespace lqrpg::testing;

TEST(Validate, RejectsBadProblems) {
  LqrProblem p = scalar_fixture();
  EXPECT_NO_THROW(p.validate());
  p.gamma = 1.0;
  EXPECT_THROW(p.validate(), InvalidParameter);
  p = scalar_fixture();
  p.R(0, 0) = 0.0;
  EXPECT_THROW(p.validate(), InvalidParameter);
  p = scalar_fixture();
  p.B = Mat::Zero(2, 1);
  EXPECT_THROW(p.validate(), DimensionError);
  p = scalar_fixture();
  p.Q(0, 0) = -1.0;
  EXPECT_THROW(p.validate(), InvalidParameter);
}

TEST(ClosedLoop, Examples) {
  const LqrProblem p = scalar_fixture();
  EXPECT_EQ(closed_loop(p, Gain::zero(1, 1)), p.A);
  EXPECT_DOUBLE_EQ(closed_loop(p, scalar_gain(0.5))(0, 0), 0.5);

  // continuous pendulum pair: feedback only touches the rate row
  const Discretized c = pendulum_continuous();
  LqrProblem pend = make_pendulum();
  pend.A = c.A;
  pend.B = c.B;
  const Mat k = (Mat(1, 2) << 3.0, -7.0).finished();
  const Mat a_cl = closed_loop(pend, Gain(k));
  EXPECT_EQ(a_cl.row(0), c.A.row(0));
  EXPECT_NE(a_cl.row(1), c.A.row(1));
  EXPECT_THROW(closed_loop(p, Gain::zero(2, 1)), DimensionError);
}

TEST(Stability, Examples) {
  const LqrProblem p = scalar_fixture();
  const StabilityCheck s = is_gamma_stabilizing(p, scalar_gain(0.5));
  EXPECT_TRUE(s.stabilizing);
  EXPECT_NEAR(s.rho, std::sqrt(0.9) * 0.5, 1e-15);

  LqrProblem q;
  q.A = 2 * Mat::Identity(2, 2);
  q.B = Mat::Identity(2, 1);
  q.Q = Mat::Identity(2, 2);
  q.R = Mat::Identity(1, 1);
  q.Sigma_w = q.Sigma_0 = Mat::Identity(2, 2);
  EXPECT_FALSE(is_gamma_stabilizing(q, Gain::zero(1, 2)).stabilizing);
  q.gamma = 0.2;
  EXPECT_TRUE(is_gamma_stabilizing(q, Gain::zero(1, 2)).stabilizing);
}

TEST(Stability, MonotoneInDiscount) {
  for (const auto& inst : standard_instances()) {
    LqrProblem p = inst.prob;
    ASSERT_TRUE(is_gamma_stabilizing(p, inst.gain).stabilizing);
    for (double g : {0.01, 0.1, 0.3, 0.5}) {
      p.gamma = g * inst.prob.gamma;
      EXPECT_TRUE(is_gamma_stabilizing(p, inst.gain).stabilizing);
    }
  }
}

TEST(SolveValue, ScalarFixture) {
  const LqrProblem p = scalar_fixture();
  const ValueSolution v = solve_value(p, scalar_gain(0.5));
  EXPECT_NEAR(v.P(0, 0), (0.5 + 0.5 * 0.25) / (1 - 0.9 * 0.25), 1e-14);
  EXPECT_NEAR(v.P(0, 0), 0.806452, 1e-6);
  EXPECT_EQ(v.q, 0.0);
  EXPECT_NEAR(performance(p, scalar_gain(0.5)), 0.806452, 1e-6);
  EXPECT_NEAR(value_at(v, Vec::Ones(1)), v.P(0, 0) + v.q, 1e-15);
}

TEST(SolveValue, ZeroCost) {
  auto inst = random_instance(8, 3, 2);
  LqrProblem p = inst.prob;
  p.Q.setZero();
  p.A = closed_loop(inst.prob, inst.gain);
  const ValueSolution v = solve_value(p, Gain::zero(2, 3));
  EXPECT_EQ(v.P.norm(), 0.0);
  EXPECT_EQ(v.q, 0.0);
  EXPECT_EQ(performance(p, Gain::zero(2, 3)), 0.0);
}

TEST(SolveValue, NoNoiseMeansNoOffset) {
  auto inst = random_instance(9, 3, 2);
  inst.prob.Sigma_w.setZero();
  EXPECT_EQ(solve_value(inst.prob, inst.gain).q, 0.0);
}

TEST(SolveValue, NotStabilizingThrows) {
  const LqrProblem p = scalar_fixture();
  EXPECT_THROW(solve_value(p, scalar_gain(-0.2)), NotStabilizing);
  EXPECT_THROW(solve_sigma(p, scalar_gain(2.2)), NotStabilizing);
  EXPECT_THROW(performance(p, scalar_gain(3.0)), NotStabilizing);
}

TEST(SolveSigma, Examples) {
  const LqrProblem p = scalar_fixture();
  EXPECT_NEAR(solve_sigma(p, scalar_gain(0.5)).Sigma(0, 0), 1 / (1 - 0.9 * 0.25), 1e-14);

  // A_cl = 0 collapses the equation.
  auto inst = random_instance(12, 2, 2);
  LqrProblem q = inst.prob;
  q.B = Mat::Identity(2, 2);
  const Mat sigma = solve_sigma(q, Gain(q.A)).Sigma;
  const Mat want = q.Sigma_0 + q.gamma / (1 - q.gamma) * q.Sigma_w;
  EXPECT_LE(rel_err(sigma, want), 1e-14);
}

TEST(Lyapunov, DirectAndDoublingAgree) {
  Sampler rng(77);
  for (int n : {3, 8, 20}) {
    Mat f = random_matrix(rng, n, n);
    f *= 0.9 / spectral_radius(f);
    const Mat c = Mat::Identity(n, n);
    const DiscountedLyapunov direct(f, 0.95);
    ASSERT_TRUE(direct.direct());
    // Same equation, solved through the doubling route by padding past the limit.
    Mat fbig = Mat::Zero(n + 21, n + 21);
    fbig.topLeftCorner(n, n) = f;
    Mat cbig = Mat::Zero(n + 21, n + 21);
    cbig.topLeftCorner(n, n) = c;
    const DiscountedLyapunov doubling(fbig, 0.95);
    ASSERT_FALSE(doubling.direct());
    const Mat x = direct.solve(c);
    EXPECT_LE(rel_err(doubling.solve(cbig).topLeftCorner(n, n), x), 1e-12);
    EXPECT_LE(rel_err(x - 0.95 * f * x * f.transpose(), c), 1e-12);
  }
}

TEST(Invariants, SymmetricAndPsd) {
  for (const auto& inst : standard_instances()) {
    const Mat P = solve_value(inst.prob, inst.gain).P;
    const Mat S = solve_sigma(inst.prob, inst.gain).Sigma;
    EXPECT_EQ(P, P.transpose());
    EXPECT_EQ(S, S.transpose());
    EXPECT_GE(Eigen::SelfAdjointEigenSolver<Mat>(P).eigenvalues().minCoeff(), -1e-10);
    EXPECT_GE(Eigen::SelfAdjointEigenSolver<Mat>(S).eigenvalues().minCoeff(), -1e-10);
  }
}

TEST(Invariants, MonotoneInDiscount) {
  for (const auto& inst : standard_instances()) {
    double last_q = -1.0, last_tr = -1.0;
    for (double g : {0.2, 0.4, 0.6, 0.8, 1.0}) {
      LqrProblem p = inst.prob;
      p.gamma = g * inst.prob.gamma;
      const double q = solve_value(p, inst.gain).q;
      const double tr = solve_sigma(p, inst.gain).Sigma.trace();
      EXPECT_GE(q, last_q * (1 - 1e-12));
      EXPECT_GE(tr, last_tr * (1 - 1e-12));
      last_q = q;
      last_tr = tr;
    }
  }
}

TEST(Bellman, ActionValueAtPolicyEqualsValue) {
  Sampler rng(31);
  for (const auto& inst : standard_instances()) {
    const ValueSolution v = solve_value(inst.prob, inst.gain);
    const Vec s = random_matrix(rng, inst.prob.n(), 1);
    const Vec a = -inst.gain.K() * s;
    EXPECT_NEAR(action_value_at(inst.prob, v, s, a), value_at(v, s),
                1e-10 * std::max(1.0, std::abs(value_at(v, s))));
  }
  const ValueSolution v = solve_value(scalar_fixture(), scalar_gain(0.5));
  EXPECT_EQ(value_at(v, Vec::Zero(1)), v.q);
}

TEST(OptimalGain, NoActuation) {
  auto inst = random_instance(4, 3, 1);
  inst.prob.B.setZero();
  inst.prob.A *= 0.5 / (std::sqrt(inst.prob.gamma) * std::max(1e-12, spectral_radius(inst.prob.A)));
  EXPECT_EQ(optimal_gain(inst.prob).gain.K().norm(), 0.0);
}

TEST(OptimalGain, ScalarFixedPoint) {
  const LqrProblem p = scalar_fixture();
  const OptimalGain opt = optimal_gain(p);
  const double theta = opt.gain.K()(0, 0);
  const double P = opt.value.P(0, 0);
  EXPECT_NEAR(theta, 0.9 * P * 1.0 / (0.5 + 0.9 * P), 1e-12);
  EXPECT_LE(policy_gradient(p, opt.gain).norm(), 1e-12);

  // Independent 1-d root find on the scalar gradient.
  double lo = 0.1, hi = 1.9;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (scalar_reference(ScalarLqr{}, mid).grad < 0 ? lo : hi) = mid;
  }
  EXPECT_NEAR(theta, 0.5 * (lo + hi), 1e-10);
}

TEST(OptimalGain, Pendulum) {
  const LqrProblem p = make_pendulum();
  const OptimalGain opt = optimal_gain(p);
  EXPECT_TRUE(is_gamma_stabilizing(p, opt.gain).stabilizing);
  EXPECT_LE(policy_gradient(p, opt.gain).norm(), 1e-8);
}

TEST(OptimalGain, BeatsEveryTestedGain) {
  for (const auto& inst : standard_instances()) {
    const Gain k_star = optimal_gain(inst.prob).gain;
    const double j_star = performance(inst.prob, k_star);
    EXPECT_LE(j_star, performance(inst.prob, inst.gain) * (1 + 1e-12));
    Sampler rng(inst.prob.n() * 10 + inst.prob.m());
    for (int t = 0; t < 5; ++t) {
      const Gain g(k_star.K() + 0.01 * random_matrix(rng, inst.prob.m(), inst.prob.n()));
      if (is_gamma_stabilizing(inst.prob, g).stabilizing) {
        EXPECT_LE(j_star, performance(inst.prob, g) * (1 + 1e-12));
      }
    }
  }
}

TEST(OptimalGain, DiscountHomotopyFromUnstableSeed) {
  LqrProblem q;
  q.A = (Mat(2, 2) << 1.5, 1.0, 0.0, 1.3).finished();
  q.B = (Mat(2, 1) << 0.0, 1.0).finished();
  q.Q = Mat::Identity(2, 2);
  q.R = Mat::Identity(1, 1);
  q.gamma = 0.95;
  q.Sigma_w = q.Sigma_0 = Mat::Identity(2, 2);
  ASSERT_FALSE(is_gamma_stabilizing(q, Gain::zero(1, 2)).stabilizing);
  const OptimalGain opt = optimal_gain(q);
  EXPECT_TRUE(is_gamma_stabilizing(q, opt.gain).stabilizing);
  EXPECT_LE(policy_gradient(q, opt.gain).norm(), 1e-8);
}

TEST(OptimalGain, NoConvergenceWhenCapped) {
  EXPECT_THROW(optimal_gain(make_pendulum(), 1e-12, 1), NoConvergence);
}
