#include "lqrpg/tensorops.hpp"

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "lqrpg/errors.hpp"

namespace lqrpg {

Vec vec(const Mat& x) {
  return Eigen::Map<const Vec>(x.data(), x.size());
}

Mat unvec(const Vec& v, Eigen::Index rows, Eigen::Index cols) {
  if (rows < 0 || cols < 0 || v.size() != rows * cols) {
    throw DimensionError("unvec: vector of length " + std::to_string(v.size()) +
                         " cannot be reshaped to " + std::to_string(rows) + "x" +
                         std::to_string(cols));
  }
  return Eigen::Map<const Mat>(v.data(), rows, cols);
}

Mat kron(const Mat& a, const Mat& b) {
  const Eigen::Index p = b.rows();
  const Eigen::Index q = b.cols();
  Mat out(a.rows() * p, a.cols() * q);
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      out.block(i * p, j * q, p, q) = a(i, j) * b;
    }
  }
  return out;
}

Mat commutation_matrix(Eigen::Index m, Eigen::Index n) {
  if (m < 1 || n < 1) {
    throw DimensionError("commutation_matrix: m and n must be positive");
  }
  // vec(X)[i + j*m] = X(i,j) = X^T(j,i) = vec(X^T)[j + i*n]
  Mat k = Mat::Zero(m * n, m * n);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      k(j + i * n, i + j * m) = 1.0;
    }
  }
  return k;
}

double spectral_radius(const Mat& x) {
  if (x.rows() != x.cols()) {
    throw DimensionError("spectral_radius: matrix is " + std::to_string(x.rows()) + "x" +
                         std::to_string(x.cols()));
  }
  if (x.size() == 0) return 0.0;
  if (x.rows() == 1) return std::abs(x(0, 0));
  Eigen::EigenSolver<Mat> es(x, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) {
    throw NoConvergence("spectral_radius: eigenvalue iteration did not converge");
  }
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

Mat expm(const Mat& x) {
  if (x.rows() != x.cols()) {
    throw DimensionError("expm: matrix is not square");
  }
  constexpr int kOrder = 18;
  const double norm = x.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm > 0.5) {
    squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
  }
  const Mat scaled = x / std::ldexp(1.0, squarings);

  // Horner evaluation of sum_{k<=order} scaled^k / k!
  const Mat eye = Mat::Identity(x.rows(), x.cols());
  Mat result = eye;
  for (int k = kOrder; k >= 1; --k) {
    result = eye + (scaled * result) / static_cast<double>(k);
  }
  for (int s = 0; s < squarings; ++s) {
    result = result * result;
  }
  return result;
}

Mat symmetrized(const Mat& x) {
  return 0.5 * (x + x.transpose());
}

bool all_finite(const Mat& x) {
  return x.allFinite();
}

} // namespace lqrpg
