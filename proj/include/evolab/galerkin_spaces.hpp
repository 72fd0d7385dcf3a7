#pragma once

#include <string>

#include "evolab/linalg.hpp"

namespace evolab {

/// primal: coefficients of an element of V or H.
/// action: F_i = <f, phi_i> for a functional f in V'.
enum class CoordinateKind { primal, action };

enum class Space { H, V, Vgamma, Vdual, Vgamma_dual };

CoordinateKind kind_of(Space space);
const char* space_name(Space space);

class GelfandTriple {
public:
  GelfandTriple() = default;

  int dim() const { return static_cast<int>(gram_H_.rows()); }
  const Mat& gram_H() const { return gram_H_; }
  const Mat& gram_V() const { return gram_V_; }
  /// ||u||_H <= c_H ||u||_V
  double c_H() const { return c_H_; }
  /// lower Cholesky factors, G = L L^*
  const Mat& chol_H() const { return L_H_; }
  const Mat& chol_V() const { return L_V_; }

  double norm_H(const Vec& u) const;
  double norm_V(const Vec& u) const;

private:
  friend GelfandTriple make_triple(const Mat&, const Mat&);
  Mat gram_H_, gram_V_, L_H_, L_V_;
  double c_H_ = 0.0;
};

GelfandTriple make_triple(const Mat& gram_H, const Mat& gram_V);

struct InterpolationScale {
  double gamma = 0.0;
  Mat gram_gamma;
  Mat chol_gamma;
};

/// Geometric mean of the Grams: G_H^{1/2} (G_H^{-1/2} G_V G_H^{-1/2})^gamma G_H^{1/2}.
InterpolationScale interpolation_scale(const GelfandTriple& triple, double gamma);

/// A triple together with one rung V_gamma of its interpolation scale.
class Geometry {
public:
  Geometry() = default;
  explicit Geometry(GelfandTriple triple, double gamma = 0.5);

  const GelfandTriple& triple() const { return triple_; }
  const InterpolationScale& scale() const { return scale_; }
  double gamma() const { return scale_.gamma; }
  int dim() const { return triple_.dim(); }

  /// Gram of the primal space underlying `space` (V' uses G_V, V'_gamma uses G_gamma).
  const Mat& gram(Space space) const;
  const Mat& chol(Space space) const;

  /// primal: sqrt(u^* G u); action: sqrt(F^* G^{-1} F)
  double norm(const Vec& u, CoordinateKind kind, Space space) const;

  /// C_to K C_from^{-1}, C = L^* on primal spaces and L^{-1} on dual spaces
  Mat weighted(const Mat& K, Space from, Space to) const;
  double operator_norm(const Mat& K, Space from, Space to) const;
  /// same, with the argument and result kinds declared by the caller
  double operator_norm(const Mat& K, CoordinateKind from_kind, Space from, CoordinateKind to_kind,
                       Space to) const;

  /// Weighted factor applied to vectors living in `space`.
  Mat apply_factor(const Mat& X, Space space) const;
  Mat apply_factor_inverse(const Mat& Y, Space space) const;

private:
  GelfandTriple triple_;
  InterpolationScale scale_;
};

/// s_k of the identity V -> H, decreasing.
RVec embedding_singular_values(const GelfandTriple& triple);

void save_triple_json(const GelfandTriple& triple, const std::string& path);
GelfandTriple load_triple_json(const std::string& path);

} // namespace evolab
