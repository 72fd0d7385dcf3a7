#pragma once

#include <array>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "evolab/form_family.hpp"
#include "evolab/kernels.hpp"

namespace evolab {

/// Eigendecomposition of A(t) in the H-pencil: A Phi = G_H Phi diag(lambda).
struct FrozenSpectrum {
  double time = 0.0;
  Vec lambda;
  /// Phi, columns in primal coordinates
  Mat right;
  /// Psi = Phi^{-1} G_H^{-1}: action -> eigen coordinates
  Mat left_action;
  /// Phi^{-1}: primal -> eigen coordinates
  Mat left_primal;
  bool hermitian = true;

  /// Phi diag(f) Psi (action input) or Phi diag(f) Phi^{-1} (primal input)
  Mat matrix(const Vec& f, CoordinateKind input) const;
  Mat apply(const Vec& f, const Mat& X, CoordinateKind input) const;
  Vec map(const std::function<cplx(cplx)>& f) const;
};

FrozenSpectrum frozen_spectrum(const NonAutonomousForm& form, double t);

enum class CalculusMethod { automatic, spectral, contour };
enum class InvSqrtMethod { automatic, spectral, semigroup_integral, resolvent_integral };

/// lambda = r e^{+-i phi}, log r on a uniform ladder from log r_min to log r_max
struct ContourSpec {
  double phi = 1.0;
  double step = 0.15;
  double r_min = 1e-12;
  double r_max = 1e3;
  std::string rule = "trapezoid in log r, both rays";
  int node_count() const;
};

std::vector<ContourNode> contour_nodes(const ContourSpec& spec);

/// phi = sector + 0.6 (pi/2 - sector); r_max from the tail e^{-tau r cos phi} < target
ContourSpec semigroup_contour(const NonAutonomousForm& form, double t, double tau, double target = 1e-14);

/// (lambda G_H - A(t))^{-1} F; F in action coordinates, result primal
Mat resolvent_apply(const NonAutonomousForm& form, double t, cplx lambda, const Mat& F);

Mat semigroup_apply(const NonAutonomousForm& form, double t, double tau, const Mat& X, CoordinateKind kind,
                    const ContourSpec& contour, ExecutionPolicy policy = ExecutionPolicy::parallel);
/// contour chosen automatically; Hermitian forms use the spectral path under `automatic`
Mat semigroup_apply(const NonAutonomousForm& form, double t, double tau, const Mat& X, CoordinateKind kind,
                    CalculusMethod method = CalculusMethod::automatic);

/// A(t)^{-1/2} F for action F, result primal
Mat inv_sqrt_apply(const NonAutonomousForm& form, double t, const Mat& F,
                   InvSqrtMethod method = InvSqrtMethod::automatic);
/// inv_sqrt_apply(A_form(t) u)
Mat sqrt_apply(const NonAutonomousForm& form, double t, const Mat& U,
               InvSqrtMethod method = InvSqrtMethod::automatic);

/// Phi Lambda^{p} Phi^{-1}, p = +-1/2, primal -> primal
Mat half_power(const FrozenSpectrum& spec, double p);

double square_root_property_check(const NonAutonomousForm& form, const std::vector<double>& grid);

struct EstimateItem {
  int id = 0;
  std::string label;
  double constant = 0.0;
  cplx argmax_lambda = 0.0;
  double argmax_s = 0.0;
  double argmax_t = 0.0;
};

struct EstimateSuiteReport {
  std::array<EstimateItem, 11> items;
  std::vector<cplx> lambda_samples;
  std::vector<double> s_samples;
  double kappa = 0.0;
  double c0 = 0.0;
};

/// rays at sector + k (pi - sector)/3, k = 1..3, both half planes; |lambda| in [1e-2, 1e4]
std::vector<cplx> default_lambda_samples(double sector, int per_decade);
/// log-spaced in [1e-3, T]
std::vector<double> default_s_samples(double horizon, int per_decade);

EstimateSuiteReport resolvent_estimate_suite(const NonAutonomousForm& form, const std::vector<double>& grid,
                                             const std::vector<cplx>& lambda_samples,
                                             const std::vector<double>& s_samples);

struct SqrtHolderRow {
  double t = 0.0, s = 0.0, omega = 0.0;
  std::array<double, 3> difference{};
  std::array<double, 3> ratio{};
};

struct SqrtHolderReport {
  std::vector<SqrtHolderRow> rows;
  /// L(V', H) inverse root on V', L(H, V) inverse root on H, L(V, H) root
  std::array<double, 3> max_ratio{};
  std::array<double, 3> max_difference{};
};

SqrtHolderReport sqrt_holder_suite(const NonAutonomousForm& form, const std::vector<std::pair<double, double>>& pairs,
                                   const DiniModulus& modulus);

} // namespace evolab
