#include "evolab/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "evolab/error.hpp"

namespace evolab {

const char* error_name(ErrorCode code) {
  switch (code) {
  case ErrorCode::NonHermitian: return "NonHermitian";
  case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
  case ErrorCode::GammaOutOfRange: return "GammaOutOfRange";
  case ErrorCode::KindMismatch: return "KindMismatch";
  case ErrorCode::DimensionMismatch: return "DimensionMismatch";
  case ErrorCode::EmptyGrid: return "EmptyGrid";
  case ErrorCode::InsufficientGrid: return "InsufficientGrid";
  case ErrorCode::LambdaInSector: return "LambdaInSector";
  case ErrorCode::SingularSystem: return "SingularSystem";
  case ErrorCode::ContourTooShort: return "ContourTooShort";
  case ErrorCode::NotCoercive: return "NotCoercive";
  case ErrorCode::SingularStep: return "SingularStep";
  case ErrorCode::DiniViolated: return "DiniViolated";
  case ErrorCode::ShiftDivergence: return "ShiftDivergence";
  case ErrorCode::NoCertifiedShift: return "NoCertifiedShift";
  case ErrorCode::GridTooCoarse: return "GridTooCoarse";
  case ErrorCode::POutOfRange: return "POutOfRange";
  case ErrorCode::MeshTooCoarse: return "MeshTooCoarse";
  case ErrorCode::ConfigError: return "ConfigError";
  case ErrorCode::MissingDependency: return "MissingDependency";
  case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

Mat hermitian_part(const Mat& K) { return (K + K.adjoint()) * 0.5; }

Mat skew_part(const Mat& K) { return (K - K.adjoint()) * cplx(0.0, -0.5); }

bool is_hermitian(const Mat& K, double rel_tol) {
  if (K.rows() != K.cols()) return false;
  const double scale = K.cwiseAbs().maxCoeff();
  const double dev = (K - K.adjoint()).cwiseAbs().maxCoeff();
  return dev <= rel_tol * std::max(scale, 1e-300);
}

double spectral_norm(const Mat& K) {
  if (K.size() == 0) return 0.0;
  Mat P = K.rows() >= K.cols() ? Mat(K.adjoint() * K) : Mat(K * K.adjoint());
  P = hermitian_part(P);
  Eigen::SelfAdjointEigenSolver<Mat> es(P, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

Mat cholesky_lower(const Mat& G, const char* what) {
  Eigen::SelfAdjointEigenSolver<Mat> es(hermitian_part(G), Eigen::EigenvaluesOnly);
  const RVec& w = es.eigenvalues();
  const double lmax = w.cwiseAbs().maxCoeff();
  if (!(w(0) > 1e-12 * lmax)) {
    std::ostringstream os;
    os << what << " has eigenvalue " << w(0) << " (largest " << lmax << ")";
    fail(ErrorCode::NotPositiveDefinite, os.str());
  }
  Eigen::LLT<Mat> llt(hermitian_part(G));
  if (llt.info() != Eigen::Success) fail(ErrorCode::NotPositiveDefinite, std::string(what) + " Cholesky failed");
  return llt.matrixL();
}

Mat lower_solve(const Mat& L, const Mat& K) { return L.triangularView<Eigen::Lower>().solve(K); }

Mat solve_right_adjoint(const Mat& K, const Mat& L) {
  // X L^* = K  <=>  L X^* = K^*
  return lower_solve(L, K.adjoint()).adjoint();
}

RVec pencil_eigenvalues(const Mat& A, const Mat& B) {
  const Mat L = cholesky_lower(B);
  const Mat C = hermitian_part(solve_right_adjoint(lower_solve(L, A), L));
  Eigen::SelfAdjointEigenSolver<Mat> es(C, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

void pencil_eigen(const Mat& A, const Mat& B, RVec& values, Mat& vectors) {
  const Mat L = cholesky_lower(B);
  const Mat C = hermitian_part(solve_right_adjoint(lower_solve(L, A), L));
  Eigen::SelfAdjointEigenSolver<Mat> es(C);
  values = es.eigenvalues();
  vectors = L.adjoint().triangularView<Eigen::Upper>().solve(es.eigenvectors());
}

} // namespace evolab
