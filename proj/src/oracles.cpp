#include "lqrpg/oracles.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Eigenvalues>

#include "lqrpg/derivatives.hpp"
#include "lqrpg/errors.hpp"

namespace lqrpg {

ScalarReport scalar_reference(const ScalarLqr& sys, double theta) {
  const double acl = sys.a - sys.b * theta;
  const double denom = 1.0 - sys.gamma * acl * acl;
  if (!(denom > 0.0)) {
    throw NotStabilizing("scalar_reference: gamma (a - b theta)^2 >= 1");
  }
  const double g = sys.gamma;
  const double b = sys.b;
  ScalarReport r;
  r.sigma = (sys.sigma0_sq + g / (1.0 - g) * sys.sigma_sq) / denom;
  r.p = (sys.Q + sys.R * theta * theta) / denom;
  const double s = sys.R * theta - g * b * r.p * acl;
  r.dp_dtheta = 2.0 * s / denom;
  r.grad = 2.0 * r.sigma * s;
  r.h_gn = 2.0 * r.sigma * (sys.R + g * b * b * r.p);
  r.lambda = -4.0 * r.sigma * acl * b * r.dp_dtheta;

  const double dsigma = -2.0 * g * b * acl / denom * r.sigma;
  const double ds = sys.R - g * b * acl * r.dp_dtheta + g * b * b * r.p;
  r.hess_exact = 2.0 * (ds * r.sigma + s * dsigma);
  return r;
}

LqrProblem to_problem(const ScalarLqr& sys) {
  LqrProblem p;
  p.A = Mat::Constant(1, 1, sys.a);
  p.B = Mat::Constant(1, 1, sys.b);
  p.Q = Mat::Constant(1, 1, sys.Q);
  p.R = Mat::Constant(1, 1, sys.R);
  p.gamma = sys.gamma;
  p.Sigma_w = Mat::Constant(1, 1, sys.sigma_sq);
  p.Sigma_0 = Mat::Constant(1, 1, sys.sigma0_sq);
  return p;
}

namespace {

double perturbed_performance(const LqrProblem& prob, const Vec& theta) {
  const Gain g = Gain::from_theta(theta, prob.m(), prob.n());
  if (!is_gamma_stabilizing(prob, g).stabilizing) {
    throw PerturbationLeftStabilizingSet("finite-difference stencil leaves the stabilizing set");
  }
  return performance(prob, g);
}

} // namespace

Vec fd_gradient(const LqrProblem& prob, const Gain& gain, double h) {
  const Vec theta = gain.theta();
  Vec grad(theta.size());
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    const double step = h > 0.0 ? h : std::max(1e-6, 1e-6 * std::abs(theta(i)));
    Vec plus = theta;
    Vec minus = theta;
    plus(i) += step;
    minus(i) -= step;
    grad(i) = (perturbed_performance(prob, plus) - perturbed_performance(prob, minus)) /
              (2.0 * step);
  }
  return grad;
}

Mat fd_hessian(const LqrProblem& prob, const Gain& gain, double h) {
  const Vec theta = gain.theta();
  const Eigen::Index d = theta.size();
  Vec steps(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    steps(i) = h > 0.0 ? h : 1e-4 * std::max(1.0, std::abs(theta(i)));
  }
  Mat hess(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = i; j < d; ++j) {
      auto at = [&](double si, double sj) {
        Vec t = theta;
        t(i) += si * steps(i);
        t(j) += sj * steps(j);
        return perturbed_performance(prob, t);
      };
      const double v =
          (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (4.0 * steps(i) * steps(j));
      hess(i, j) = v;
      hess(j, i) = v;
    }
  }
  return hess;
}

Mat discounted_moment_series(const LqrProblem& prob, const Gain& gain, double trunc_tol) {
  if (!is_gamma_stabilizing(prob, gain).stabilizing) {
    throw NotStabilizing("discounted_moment_series: gain is not gamma-stabilizing");
  }
  const Mat acl = closed_loop(prob, gain);
  Mat moment = prob.Sigma_0;
  Mat total = moment;
  double weight = 1.0;
  // The terms gamma^k M_k decay like (gamma rho^2)^k, and the Sigma_w part
  // like gamma^k, so iterate until both the weight and the increment are tiny.
  for (long k = 1; k < 10'000'000; ++k) {
    moment = acl * moment * acl.transpose() + prob.Sigma_w;
    weight *= prob.gamma;
    const Mat term = weight * moment;
    total += term;
    if (weight <= trunc_tol && term.norm() <= trunc_tol * total.norm()) break;
  }
  return symmetrized(total);
}

Mat lambda_via_Mi(const LqrProblem& prob, const Gain& gain) {
  const Eigen::Index n = prob.n();
  const Eigen::Index m = prob.m();
  const Mat jac = jacobian_vecP(prob, gain);
  const Mat sigma = solve_sigma(prob, gain).Sigma;
  const Mat acl = closed_loop(prob, gain);
  Mat stacked(m * n, m * n);
  for (Eigen::Index i = 0; i < m * n; ++i) {
    const Mat d = unvec(jac.col(i), n, n);
    const Mat mi = prob.B.transpose() * (d + d.transpose()) * acl;
    stacked.col(i) = vec(mi);
  }
  const Mat ef = -kron(sigma, Mat::Identity(m, m)) * stacked;
  return ef + ef.transpose();
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double Sampler::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Sampler::uniform_open() {
  return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
}

double Sampler::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double radius = std::sqrt(-2.0 * std::log(uniform_open()));
  const double angle = 2.0 * std::numbers::pi * uniform();
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

Mat psd_sqrt(const Mat& x) {
  if (x.size() == 0) return x;
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrized(x));
  const Vec roots = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * roots.asDiagonal() * es.eigenvectors().transpose();
}

namespace {

// C-infinity step: 0 for t <= 0, 1 for t >= 1.
double smooth_step(double t) {
  auto f = [](double x) { return x > 0.0 ? std::exp(-1.0 / x) : 0.0; };
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  return f(t) / (f(t) + f(1.0 - t));
}

double taper_weight(const NoiseModel& model, double z) {
  return smooth_step((model.cutoff - std::abs(z)) / model.taper);
}

class UnitNoise {
public:
  explicit UnitNoise(const NoiseModel& model) : model_(model) {
    if (model.kind == NoiseKind::truncated_gaussian) {
      scale_ = 1.0 / std::sqrt(truncated_gaussian_variance(model));
    }
  }

  double draw(Sampler& rng) const {
    switch (model_.kind) {
    case NoiseKind::gaussian:
      return rng.normal();
    case NoiseKind::uniform_box:
      return std::sqrt(3.0) * (2.0 * rng.uniform() - 1.0);
    case NoiseKind::truncated_gaussian:
      for (;;) {
        const double z = rng.normal();
        if (std::abs(z) >= model_.cutoff) continue;
        if (rng.uniform() < taper_weight(model_, z)) return scale_ * z;
      }
    }
    return 0.0;
  }

  Vec draw(Sampler& rng, Eigen::Index n) const {
    Vec z(n);
    for (Eigen::Index i = 0; i < n; ++i) z(i) = draw(rng);
    return z;
  }

private:
  NoiseModel model_;
  double scale_ = 1.0;
};

// Neumaier compensated sum.
struct CompensatedSum {
  double sum = 0.0;
  double carry = 0.0;
  void add(double x) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x)) {
      carry += (sum - t) + x;
    } else {
      carry += (x - t) + sum;
    }
    sum = t;
  }
  double value() const { return sum + carry; }
};

} // namespace

double truncated_gaussian_variance(const NoiseModel& model) {
  if (!(model.cutoff > 0.0) || !(model.taper > 0.0) || model.taper > model.cutoff) {
    throw InvalidParameter("truncated_gaussian: need 0 < taper <= cutoff");
  }
  // Composite Simpson on [-cutoff, cutoff].
  constexpr int kIntervals = 20000;
  const double h = 2.0 * model.cutoff / kIntervals;
  double mass = 0.0;
  double second = 0.0;
  for (int i = 0; i <= kIntervals; ++i) {
    const double z = -model.cutoff + i * h;
    const double w = (i == 0 || i == kIntervals) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    const double dens = std::exp(-0.5 * z * z) * taper_weight(model, z);
    mass += w * dens;
    second += w * dens * z * z;
  }
  return second / mass;
}

long mc_horizon(const LqrProblem& prob, const Gain& gain, double rel_tol) {
  const double j = performance(prob, gain);
  const Mat acl = closed_loop(prob, gain);
  const Mat stage = prob.Q + gain.K().transpose() * prob.R * gain.K();
  Mat moment = prob.Sigma_0;
  double partial = 0.0;
  double weight = 1.0;
  for (long k = 0; k < 1'000'000; ++k) {
    if (j - partial <= rel_tol * std::abs(j)) return std::max<long>(k, 1);
    partial += weight * (stage * moment).trace();
    moment = acl * moment * acl.transpose() + prob.Sigma_w;
    weight *= prob.gamma;
  }
  throw NoConvergence("mc_horizon: discounted tail does not vanish");
}

McEstimate monte_carlo_J(const LqrProblem& prob, const Gain& gain, const NoiseModel& noise,
                         long samples, long horizon, std::uint64_t seed) {
  if (!is_gamma_stabilizing(prob, gain).stabilizing) {
    throw NotStabilizing("monte_carlo_J: gain is not gamma-stabilizing");
  }
  if (samples < 2) throw InvalidParameter("monte_carlo_J: need at least two samples");
  if (horizon <= 0) horizon = mc_horizon(prob, gain);

  const Eigen::Index n = prob.n();
  const UnitNoise unit(noise);
  const Mat l0 = psd_sqrt(prob.Sigma_0);
  const Mat lw = psd_sqrt(prob.Sigma_w);
  const Mat& k = gain.K();

  CompensatedSum sum;
  // Welford running variance
  double run_mean = 0.0;
  double run_m2 = 0.0;
  for (long i = 0; i < samples; ++i) {
    Sampler rng(splitmix64(seed + static_cast<std::uint64_t>(i) * 0x9e3779b97f4a7c15ULL));
    Vec s = l0 * unit.draw(rng, n);
    double total = 0.0;
    double weight = 1.0;
    for (long t = 0; t < horizon; ++t) {
      const Vec a = -k * s;
      total += weight * (s.dot(prob.Q * s) + a.dot(prob.R * a));
      s = prob.A * s + prob.B * a + lw * unit.draw(rng, n);
      weight *= prob.gamma;
    }
    sum.add(total);
    const double delta = total - run_mean;
    run_mean += delta / static_cast<double>(i + 1);
    run_m2 += delta * (total - run_mean);
  }
  McEstimate est;
  est.samples = samples;
  est.horizon = horizon;
  const double count = static_cast<double>(samples);
  est.mean = sum.value() / count;
  const double var = run_m2 / (count - 1.0);
  est.std_error = std::sqrt(var / count);
  return est;
}

} // namespace lqrpg
