#include "evolab/quadrature.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "evolab/error.hpp"

namespace evolab {

namespace {

double legendre(int n, double x) {
  double p0 = 1.0, p1 = x;
  if (n == 0) return p0;
  for (int k = 1; k < n; ++k) {
    const double p2 = ((2 * k + 1) * x * p1 - k * p0) / (k + 1);
    p0 = p1;
    p1 = p2;
  }
  return p1;
}

std::vector<double> jacobi_eigenvalues(const std::vector<double>& offdiag) {
  const int m = static_cast<int>(offdiag.size()) + 1;
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(m, m);
  for (int k = 0; k + 1 < m; ++k) J(k, k + 1) = J(k + 1, k) = offdiag[static_cast<size_t>(k)];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J, Eigen::EigenvaluesOnly);
  return {es.eigenvalues().data(), es.eigenvalues().data() + m};
}

} // namespace

Rule gauss_legendre(int n) {
  if (n < 1) fail(ErrorCode::ConfigError, "Gauss rule needs at least one point");
  Rule r;
  if (n == 1) {
    r.nodes = {0.0};
    r.weights = {2.0};
    return r;
  }
  std::vector<double> b;
  for (int k = 1; k < n; ++k) b.push_back(k / std::sqrt(4.0 * k * k - 1.0));
  r.nodes = jacobi_eigenvalues(b);
  for (double x : r.nodes) {
    // w = 2 / ((1 - x^2) P_n'(x)^2), P_n' = n (x P_n - P_{n-1}) / (x^2 - 1)
    const double dp = n * (x * legendre(n, x) - legendre(n - 1, x)) / (x * x - 1.0);
    r.weights.push_back(2.0 / ((1.0 - x * x) * dp * dp));
  }
  return r;
}

Rule gauss_lobatto(int n) {
  if (n < 2) fail(ErrorCode::ConfigError, "Lobatto rule needs at least two points");
  Rule r;
  r.nodes.push_back(-1.0);
  if (n > 2) {
    // interior nodes: zeros of P'_{n-1}, i.e. Jacobi(1,1) of degree n-2
    std::vector<double> b;
    for (int k = 1; k < n - 2; ++k) b.push_back(std::sqrt(k * (k + 2.0) / ((2.0 * k + 1.0) * (2.0 * k + 3.0))));
    const auto inner = n - 2 == 1 ? std::vector<double>{0.0} : jacobi_eigenvalues(b);
    r.nodes.insert(r.nodes.end(), inner.begin(), inner.end());
  }
  r.nodes.push_back(1.0);
  for (double x : r.nodes) {
    const double p = legendre(n - 1, x);
    r.weights.push_back(2.0 / (n * (n - 1.0) * p * p));
  }
  return r;
}

Rule mapped(const Rule& rule, double a, double b) {
  Rule r;
  const double h = 0.5 * (b - a), c = 0.5 * (a + b);
  for (size_t k = 0; k < rule.nodes.size(); ++k) {
    r.nodes.push_back(c + h * rule.nodes[k]);
    r.weights.push_back(h * rule.weights[k]);
  }
  return r;
}

LagrangeBasis::LagrangeBasis(std::vector<double> nodes) : nodes_(std::move(nodes)), bary_(nodes_.size(), 1.0) {
  for (size_t j = 0; j < nodes_.size(); ++j)
    for (size_t k = 0; k < nodes_.size(); ++k)
      if (k != j) bary_[j] /= (nodes_[j] - nodes_[k]);
}

void LagrangeBasis::eval(double x, double* out) const {
  const size_t n = nodes_.size();
  for (size_t j = 0; j < n; ++j)
    if (x == nodes_[j]) {
      for (size_t k = 0; k < n; ++k) out[k] = k == j ? 1.0 : 0.0;
      return;
    }
  double den = 0.0;
  for (size_t j = 0; j < n; ++j) {
    out[j] = bary_[j] / (x - nodes_[j]);
    den += out[j];
  }
  for (size_t j = 0; j < n; ++j) out[j] /= den;
}

} // namespace evolab
