#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace evolab {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;

inline constexpr double kPi = 3.14159265358979323846;

/// (K + K^*) / 2
Mat hermitian_part(const Mat& K);
/// (K - K^*) / (2i), Hermitian as well
Mat skew_part(const Mat& K);

/// max |K - K^*| <= tol * max |K|
bool is_hermitian(const Mat& K, double rel_tol = 1e-12);

/// Largest singular value; eigenvalues of K^* K, no vectors.
double spectral_norm(const Mat& K);

/// Lower Cholesky factor L with G = L L^*; throws NotPositiveDefinite.
Mat cholesky_lower(const Mat& G, const char* what = "Gram");

/// Eigenvalues of the Hermitian pencil (A, B), B positive definite, ascending.
RVec pencil_eigenvalues(const Mat& A, const Mat& B);

/// Eigenpairs of the Hermitian pencil: A X = B X diag(w), X^* B X = I.
void pencil_eigen(const Mat& A, const Mat& B, RVec& values, Mat& vectors);

/// L^{-1} K (L lower triangular)
Mat lower_solve(const Mat& L, const Mat& K);
/// K L^{-*}
Mat solve_right_adjoint(const Mat& K, const Mat& L);

} // namespace evolab
