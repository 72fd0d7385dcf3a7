#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "evolab/form_family.hpp"
#include "evolab/robin_heat.hpp"

namespace evolab::test {

/// a(t) = a0 + sum c_k t^{p_k}, all Grams 1
inline NonAutonomousForm scalar_form(double a0, std::vector<std::pair<double, double>> terms = {}, double T = 1.0,
                                     double gram_V = 1.0, double gamma = 0.0) {
  json t = json::array();
  for (auto [c, p] : terms) t.push_back({{"c", c}, {"power", p}});
  json j = {{"kind", "scalar"}, {"a0", a0}, {"T", T}, {"gram_V", gram_V}, {"gamma", gamma}};
  if (!terms.empty()) j["terms"] = t;
  return form_from_json(j);
}

inline Mat random_matrix(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Mat M(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) M(i, j) = cplx(nd(rng), nd(rng));
  return M;
}

/// random Hermitian positive definite, spectrum in [lo, lo + spread]
inline Mat random_hpd(int n, std::mt19937_64& rng, double lo = 1.0, double spread = 4.0) {
  Mat Q = random_matrix(n, n, rng).householderQr().householderQ();
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  RVec d(n);
  for (int k = 0; k < n; ++k) d(k) = lo + spread * ud(rng);
  return Q * d.asDiagonal() * Q.adjoint();
}

inline NonAutonomousForm robin(int n, double b0 = 1.0, double c = 1.0, double alpha = 0.5, double r0 = 0.3) {
  RobinProblem p;
  p.n = n;
  p.beta_left = p.beta_right = BoundaryCoefficient{b0, c, alpha};
  p.r0 = r0;
  return robin_form(p);
}

inline double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

} // namespace evolab::test
