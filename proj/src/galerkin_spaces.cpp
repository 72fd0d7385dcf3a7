#include "evolab/galerkin_spaces.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "evolab/error.hpp"
#include "evolab/json_io.hpp"

namespace evolab {

CoordinateKind kind_of(Space space) {
  switch (space) {
  case Space::H:
  case Space::V:
  case Space::Vgamma: return CoordinateKind::primal;
  case Space::Vdual:
  case Space::Vgamma_dual: return CoordinateKind::action;
  }
  return CoordinateKind::primal;
}

const char* space_name(Space space) {
  switch (space) {
  case Space::H: return "H";
  case Space::V: return "V";
  case Space::Vgamma: return "V_gamma";
  case Space::Vdual: return "V'";
  case Space::Vgamma_dual: return "V'_gamma";
  }
  return "?";
}

double GelfandTriple::norm_H(const Vec& u) const { return (L_H_.adjoint() * u).norm(); }
double GelfandTriple::norm_V(const Vec& u) const { return (L_V_.adjoint() * u).norm(); }

GelfandTriple make_triple(const Mat& gram_H, const Mat& gram_V) {
  if (gram_H.rows() != gram_H.cols() || gram_V.rows() != gram_V.cols() || gram_H.rows() != gram_V.rows() ||
      gram_H.rows() == 0)
    fail(ErrorCode::DimensionMismatch, "Grams must be square, nonempty and of equal size");
  if (!is_hermitian(gram_H)) fail(ErrorCode::NonHermitian, "gram_H");
  if (!is_hermitian(gram_V)) fail(ErrorCode::NonHermitian, "gram_V");
  GelfandTriple t;
  t.gram_H_ = hermitian_part(gram_H);
  t.gram_V_ = hermitian_part(gram_V);
  t.L_H_ = cholesky_lower(t.gram_H_, "gram_H");
  t.L_V_ = cholesky_lower(t.gram_V_, "gram_V");
  const RVec w = pencil_eigenvalues(t.gram_H_, t.gram_V_);
  t.c_H_ = std::sqrt(w.maxCoeff());
  return t;
}

InterpolationScale interpolation_scale(const GelfandTriple& triple, double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) {
    std::ostringstream os;
    os << "gamma = " << gamma << " not in [0, 1]";
    fail(ErrorCode::GammaOutOfRange, os.str());
  }
  InterpolationScale s;
  s.gamma = gamma;
  if (gamma == 0.0) {
    s.gram_gamma = triple.gram_H();
  } else if (gamma == 1.0) {
    s.gram_gamma = triple.gram_V();
  } else {
    RVec lam;
    Mat Phi;
    pencil_eigen(triple.gram_V(), triple.gram_H(), lam, Phi);
    const Mat W = triple.gram_H() * Phi;
    RVec p(lam.size());
    for (Eigen::Index k = 0; k < lam.size(); ++k) p(k) = std::pow(std::max(lam(k), 0.0), gamma);
    s.gram_gamma = hermitian_part(W * p.asDiagonal() * W.adjoint());
  }
  s.chol_gamma = cholesky_lower(s.gram_gamma, "gram_gamma");
  return s;
}

Geometry::Geometry(GelfandTriple triple, double gamma)
    : triple_(std::move(triple)), scale_(interpolation_scale(triple_, gamma)) {}

const Mat& Geometry::gram(Space space) const {
  switch (space) {
  case Space::H: return triple_.gram_H();
  case Space::V:
  case Space::Vdual: return triple_.gram_V();
  case Space::Vgamma:
  case Space::Vgamma_dual: return scale_.gram_gamma;
  }
  return triple_.gram_H();
}

const Mat& Geometry::chol(Space space) const {
  switch (space) {
  case Space::H: return triple_.chol_H();
  case Space::V:
  case Space::Vdual: return triple_.chol_V();
  case Space::Vgamma:
  case Space::Vgamma_dual: return scale_.chol_gamma;
  }
  return triple_.chol_H();
}

Mat Geometry::apply_factor(const Mat& X, Space space) const {
  const Mat& L = chol(space);
  if (kind_of(space) == CoordinateKind::primal) return L.adjoint().triangularView<Eigen::Upper>() * X;
  return lower_solve(L, X);
}

Mat Geometry::apply_factor_inverse(const Mat& Y, Space space) const {
  const Mat& L = chol(space);
  if (kind_of(space) == CoordinateKind::primal) return L.adjoint().triangularView<Eigen::Upper>().solve(Y);
  return L.triangularView<Eigen::Lower>() * Y;
}

double Geometry::norm(const Vec& u, CoordinateKind kind, Space space) const {
  if (kind != kind_of(space)) {
    std::ostringstream os;
    os << (kind == CoordinateKind::primal ? "primal" : "action") << " vector measured in " << space_name(space);
    fail(ErrorCode::KindMismatch, os.str());
  }
  if (u.size() != dim()) fail(ErrorCode::DimensionMismatch, "vector length differs from the triple dimension");
  return apply_factor(u, space).norm();
}

Mat Geometry::weighted(const Mat& K, Space from, Space to) const {
  if (K.rows() != dim() || K.cols() != dim()) fail(ErrorCode::DimensionMismatch, "operator size");
  const Mat& Lf = chol(from);
  Mat right;
  if (kind_of(from) == CoordinateKind::primal)
    right = solve_right_adjoint(K, Lf);
  else
    right = K * Lf.triangularView<Eigen::Lower>();
  return apply_factor(right, to);
}

double Geometry::operator_norm(const Mat& K, Space from, Space to) const {
  return spectral_norm(weighted(K, from, to));
}

double Geometry::operator_norm(const Mat& K, CoordinateKind from_kind, Space from, CoordinateKind to_kind,
                               Space to) const {
  if (from_kind != kind_of(from) || to_kind != kind_of(to)) {
    std::ostringstream os;
    os << "operator declared " << (from_kind == CoordinateKind::primal ? "primal" : "action") << " -> "
       << (to_kind == CoordinateKind::primal ? "primal" : "action") << " measured as " << space_name(from) << " -> "
       << space_name(to);
    fail(ErrorCode::KindMismatch, os.str());
  }
  return operator_norm(K, from, to);
}

RVec embedding_singular_values(const GelfandTriple& triple) {
  const RVec w = pencil_eigenvalues(triple.gram_H(), triple.gram_V());
  RVec s(w.size());
  for (Eigen::Index k = 0; k < w.size(); ++k) s(k) = std::sqrt(std::max(0.0, w(w.size() - 1 - k)));
  return s;
}

void save_triple_json(const GelfandTriple& triple, const std::string& path) {
  json j;
  j["dim"] = triple.dim();
  j["gram_H"] = matrix_to_json(triple.gram_H());
  j["gram_V"] = matrix_to_json(triple.gram_V());
  write_json_atomic(path, j);
}

GelfandTriple load_triple_json(const std::string& path) {
  const json j = read_json_file(path);
  if (!j.contains("dim") || !j["dim"].is_number_integer() || j["dim"].get<int>() <= 0)
    fail(ErrorCode::ConfigError, "key 'dim' missing or not a positive integer");
  const int n = j["dim"].get<int>();
  if (!j.contains("gram_H")) fail(ErrorCode::ConfigError, "key 'gram_H' missing");
  if (!j.contains("gram_V")) fail(ErrorCode::ConfigError, "key 'gram_V' missing");
  return make_triple(matrix_from_json(j["gram_H"], n, "gram_H"), matrix_from_json(j["gram_V"], n, "gram_V"));
}

} // namespace evolab
