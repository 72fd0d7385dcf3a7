#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "evolab/galerkin_spaces.hpp"
#include "evolab/json_io.hpp"

namespace evolab {

/// c(t) * left * right^*, with c real.
struct AffineTerm {
  std::string label;
  std::function<double(double)> coefficient;
  Mat left;
  Mat right;
  /// points where c fails to be smooth
  std::vector<double> kinks;
};

/// t -> A_form(t) = base + shift * gram_H + sum_b c_b(t) U_b W_b^*,
/// A_form(t)[i, j] = a(t; phi_j, phi_i), primal -> action.
class NonAutonomousForm {
public:
  NonAutonomousForm() = default;
  NonAutonomousForm(GelfandTriple triple, double horizon, double gamma, Mat base, std::vector<AffineTerm> terms = {});

  const GelfandTriple& triple() const { return geometry_->triple(); }
  const Geometry& geometry() const { return *geometry_; }
  std::shared_ptr<const Geometry> geometry_ptr() const { return geometry_; }
  int dim() const { return geometry_->dim(); }
  double horizon() const { return horizon_; }
  double gamma() const { return gamma_; }
  double shift() const { return shift_; }
  const Mat& base() const { return base_; }
  const std::vector<AffineTerm>& terms() const { return terms_; }

  Mat at(double t) const;
  Mat operator()(double t) const { return at(t); }
  /// A_form(t) - A_form(s), built from the low-rank terms only
  Mat difference(double t, double s) const;
  bool autonomous() const { return terms_.empty(); }
  bool hermitian() const { return hermitian_; }
  std::vector<double> kinks() const;

  std::string description;

private:
  friend NonAutonomousForm shift(const NonAutonomousForm&, double);
  std::shared_ptr<const Geometry> geometry_;
  double horizon_ = 1.0;
  double gamma_ = 0.0;
  double shift_ = 0.0;
  Mat base_;
  std::vector<AffineTerm> terms_;
  bool hermitian_ = true;
};

/// A_form(t) + mu * gram_H
NonAutonomousForm shift(const NonAutonomousForm& form, double mu);

struct FormBounds {
  double M = 0.0;
  double alpha = 0.0;
  /// pi/2 - arctan(M / alpha); pi/2 when alpha <= 0
  double theta = 0.0;
  /// smallest eigenvalue of the Hermitian part in the H-pencil
  double lambda_min_H = 0.0;
  /// numerical-range half-angle of A(t) in the H-geometry, max over the grid
  double sector_H = 0.0;
  bool coercive = false;
};

FormBounds estimate_bounds(const NonAutonomousForm& form, const std::vector<double>& grid);

/// tan of the result = spectral radius of the pencil (skew part, Hermitian part) in the H-geometry.
/// Returns pi/2 when the Hermitian part is not positive definite.
double numerical_range_angle(const NonAutonomousForm& form, double t);

/// max(0, -2 lambda_min_H) + 1 when alpha <= 0, else 0
double coercive_shift_amount(const FormBounds& bounds);

struct DiniModulus {
  std::vector<double> lags;
  std::vector<double> values;
  double gamma = 0.0;
  double horizon = 1.0;
  /// omega(delta) ~ C delta^q; q = +inf when every value vanishes
  double fit_C = 0.0;
  double fit_q = 0.0;
  double sup_ratio = 0.0;
  double dini_integral = 0.0;
  double square_integral = 0.0;
  /// integral of omega / delta^{1 + gamma/2} over (0, lags[k]]
  std::vector<double> tail;

  bool vanishing() const;
  /// Largest sampled lag whose tail integral is below eps; 0 when omega vanishes.
  double delta0_for(double eps) const;
  /// sampled value at a matching lag, otherwise the power-law fit
  double at(double delta) const;
};

/// Summaries of a sampled modulus.
DiniModulus make_modulus(std::vector<double> lags, std::vector<double> values, double gamma, double horizon);

DiniModulus estimate_dini_modulus(const NonAutonomousForm& form, const std::vector<double>& lags,
                                  const std::vector<double>& grid);

/// T 2^{-k}, k = levels..1, increasing
std::vector<double> dyadic_lags(double horizon, int levels);
std::vector<double> uniform_grid(double a, double b, int intervals);

/// modulus on dyadic lags down to T 2^{-12}
DiniModulus default_dini_modulus(const NonAutonomousForm& form);

struct DiniReport {
  bool sup_finite = false;
  bool integral_finite = false;
  double q = 0.0;
  double gamma = 0.0;
  double sup_ratio = 0.0;
  double dini_integral = 0.0;
  double square_integral = 0.0;
  std::map<double, double> delta0_table;
};

DiniReport verify_dini(const DiniModulus& modulus);

/// Throws DiniViolated when the fitted exponent does not exceed gamma/2.
void require_dini(const NonAutonomousForm& form);

/// Norms of A(t) - A(s) between two spaces, using the low-rank factors once.
class DifferenceNorm {
public:
  DifferenceNorm(const NonAutonomousForm& form, Space from, Space to);
  double operator()(const RVec& dc) const;
  double operator()(double t, double s) const;

private:
  const NonAutonomousForm* form_;
  Mat RU_, RW_;
  std::vector<Eigen::Index> offsets_;
};

/// {"kind": "scalar" | "matrix-tabulated" | "robin1d", ...}
NonAutonomousForm form_from_json(const json& j);

} // namespace evolab
