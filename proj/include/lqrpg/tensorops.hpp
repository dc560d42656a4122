#pragma once

#include <Eigen/Dense>

// Dense matrix helpers used throughout the library. Storage is Eigen's default
// column-major layout, so vec() is a plain reinterpretation of the buffer.

namespace lqrpg {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

/// Stacks the columns of x top to bottom.
Vec vec(const Mat& x);

/// Inverse of vec(). Throws DimensionError when v.size() != rows * cols.
Mat unvec(const Vec& v, Eigen::Index rows, Eigen::Index cols);

/// Kronecker product: (a kron b)((i*p)+r, (j*q)+s) = a(i,j) * b(r,s).
Mat kron(const Mat& a, const Mat& b);

/// Commutation matrix K_{mn}: K_{mn} * vec(X) = vec(X^T) for every m x n X.
Mat commutation_matrix(Eigen::Index m, Eigen::Index n);

/// Largest eigenvalue modulus. Throws DimensionError for non-square input.
double spectral_radius(const Mat& x);

/// Matrix exponential by scaling and squaring with a degree-18 Taylor
/// polynomial. The scaled argument has 1-norm at most 1/2, which bounds the
/// truncation error of the polynomial below 1e-24 relative.
Mat expm(const Mat& x);

/// (x + x^T) / 2.
Mat symmetrized(const Mat& x);

bool all_finite(const Mat& x);

} // namespace lqrpg
