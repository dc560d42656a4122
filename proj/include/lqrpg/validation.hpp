#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lqrpg/bench.hpp"
#include "lqrpg/oracles.hpp"

// Oracle suites shared by `lqrpg validate` and the acceptance binary.

namespace lqrpg {

namespace tol {
inline constexpr double scalar_match = 1e-12;
inline constexpr double gradient_fd = 1e-6;
inline constexpr double hessian_fd = 1e-4;
inline constexpr double hessian_asymmetry = 1e-12;
inline constexpr double lambda_paths = 1e-10;
inline constexpr double moment_series = 1e-8;
inline constexpr double moment_tail = 1e-14;
inline constexpr double optimum_grad = 1e-8;
inline constexpr double optimum_lambda = 1e-8;
inline constexpr double optimum_gn_fd = 1e-4;
inline constexpr double mc_sigmas = 3.0;
} // namespace tol

struct CheckResult {
  std::string name;
  bool passed = false;
  double measured = 0.0;   ///< worst case over the suite
  double tolerance = 0.0;
  std::string detail;
  double seconds = 0.0;
};

/// Library derivatives on 1x1 inputs against scalar_reference at `points`
/// evenly spaced gains inside the stabilizing interval of the default fixture.
CheckResult check_scalar(int points = 50);

CheckResult check_gradient_fd(const std::vector<RandomInstance>& instances);

/// Exact Hessian against FD, plus the pre-symmetrization asymmetry.
CheckResult check_hessian_fd(const std::vector<RandomInstance>& instances);

CheckResult check_lambda_paths(const std::vector<RandomInstance>& instances);

CheckResult check_moment_series(const std::vector<RandomInstance>& instances);

/// Gradient, Lambda and GN-vs-FD identities at K* of every instance.
CheckResult check_optimum(const std::vector<RandomInstance>& instances);

/// |monte_carlo_J - performance| in units of the standard error at the
/// pendulum's optimal gain.
CheckResult check_monte_carlo(const NoiseModel& noise, long samples, std::uint64_t seed);

/// Every suite above on standard_instances(); Monte Carlo for each bundled
/// noise model.
std::vector<CheckResult> validation_suite(long mc_samples = 10000, std::uint64_t seed = 7);

std::string format_check(const CheckResult& r);

} // namespace lqrpg
