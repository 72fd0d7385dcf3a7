#pragma once

#include <vector>

namespace evolab {

struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point Gauss-Legendre on [-1, 1] (Golub-Welsch)
Rule gauss_legendre(int n);
/// n-point Gauss-Lobatto on [-1, 1], endpoints included
Rule gauss_lobatto(int n);
/// rule mapped to [a, b]
Rule mapped(const Rule& rule, double a, double b);

/// Barycentric Lagrange basis on fixed nodes.
class LagrangeBasis {
public:
  explicit LagrangeBasis(std::vector<double> nodes);
  /// values of all basis polynomials at x
  void eval(double x, double* out) const;
  int size() const { return static_cast<int>(nodes_.size()); }

private:
  std::vector<double> nodes_, bary_;
};

} // namespace evolab
