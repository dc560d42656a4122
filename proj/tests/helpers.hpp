#pragma once

#include "lqrpg/oracles.hpp"

namespace lqrpg::testing {

inline Mat random_matrix(Sampler& rng, Eigen::Index r, Eigen::Index c) {
  Mat x(r, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) x(i, j) = rng.normal();
  return x;
}

inline double rel_err(const Mat& got, const Mat& want) {
  const double s = want.norm();
  return (got - want).norm() / (s > 0 ? s : 1.0);
}

inline LqrProblem scalar_fixture() { return to_problem(ScalarLqr{}); }

inline Gain scalar_gain(double theta) { return Gain(Mat::Constant(1, 1, theta)); }

} // namespace lqrpg::testing
