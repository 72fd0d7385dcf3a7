#pragma once

#include "evolab/form_family.hpp"

namespace evolab {

/// beta(t) = b0 + c t^alpha
struct BoundaryCoefficient {
  double b0 = 1.0;
  double c = 1.0;
  double alpha = 0.5;
  double operator()(double t) const;
};

/// -u'' on (0, L) with -u'(0) + beta_left u(0) = 0 and u'(L) + beta_right u(L) = 0.
struct RobinProblem {
  double L = 1.0;
  int n = 64;
  BoundaryCoefficient beta_left;
  BoundaryCoefficient beta_right;
  double r0 = 0.3;
  double T = 1.0;
  double gamma() const { return r0 + 0.5; }
  /// smallest Hoelder exponent among the time-dependent ends
  double alpha_H() const;
};

void validate(const RobinProblem& problem);

struct FemAssembly {
  GelfandTriple triple;
  Mat mass;
  Mat stiffness;
  /// e_0 e_0^* and e_n e_n^*
  Mat E0;
  Mat EL;
};

/// P1 elements on n uniform cells of (0, L); gram_H = mass, gram_V = stiffness + mass.
FemAssembly assemble_p1(double L, int n);
/// assemble_p1 for a validated problem with n >= 4
FemAssembly assemble_fem(const RobinProblem& problem);

/// K + beta_left(t) E0 + beta_right(t) E_L with gamma = r0 + 1/2
NonAutonomousForm robin_form(const RobinProblem& problem);

/// {"L", "n", "beta": {"b0", "c", "alpha"}, "r0", "T"}; "beta_left" / "beta_right" override per end.
RobinProblem robin_problem_from_json(const json& j);
json robin_problem_to_json(const RobinProblem& problem);

} // namespace evolab
