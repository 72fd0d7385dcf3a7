#include "evolab/robin_heat.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "evolab/error.hpp"

namespace evolab {

double BoundaryCoefficient::operator()(double t) const {
  if (c == 0.0) return b0;
  return b0 + c * std::pow(std::max(t, 0.0), alpha);
}

double RobinProblem::alpha_H() const {
  double a = 1.0;
  if (beta_left.c != 0.0) a = std::min(a, beta_left.alpha);
  if (beta_right.c != 0.0) a = std::min(a, beta_right.alpha);
  return a;
}

void validate(const RobinProblem& p) {
  std::ostringstream os;
  if (!(p.L > 0.0)) os << "L must be positive; ";
  if (!(p.T > 0.0)) os << "T must be positive; ";
  if (!(p.r0 > 0.0 && p.r0 < 0.5)) os << "r0 must lie in (0, 1/2); ";
  for (const auto* b : {&p.beta_left, &p.beta_right}) {
    if (b->c != 0.0 && !(b->alpha > 0.25 && b->alpha <= 1.0)) os << "beta alpha must lie in (1/4, 1]; ";
    if (!std::isfinite(b->b0) || !std::isfinite(b->c)) os << "beta coefficients must be finite; ";
  }
  if (!os.str().empty()) fail(ErrorCode::ConfigError, os.str());
}

FemAssembly assemble_p1(double L, int n) {
  if (n < 1 || !(L > 0.0)) fail(ErrorCode::MeshTooCoarse, "need at least one cell of positive length");
  const int N = n + 1;
  const double h = L / n;
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(N, N), K = Eigen::MatrixXd::Zero(N, N);
  for (int e = 0; e < n; ++e) {
    M(e, e) += 2.0 * h / 6.0;
    M(e + 1, e + 1) += 2.0 * h / 6.0;
    M(e, e + 1) += h / 6.0;
    M(e + 1, e) += h / 6.0;
    K(e, e) += 1.0 / h;
    K(e + 1, e + 1) += 1.0 / h;
    K(e, e + 1) -= 1.0 / h;
    K(e + 1, e) -= 1.0 / h;
  }
  FemAssembly a;
  a.mass = M.cast<cplx>();
  a.stiffness = K.cast<cplx>();
  a.E0 = Mat::Zero(N, N);
  a.EL = Mat::Zero(N, N);
  a.E0(0, 0) = 1.0;
  a.EL(n, n) = 1.0;
  a.triple = make_triple(a.mass, a.stiffness + a.mass);
  return a;
}

FemAssembly assemble_fem(const RobinProblem& problem) {
  if (problem.n < 4) {
    std::ostringstream os;
    os << "n = " << problem.n << " cells, need at least 4";
    fail(ErrorCode::MeshTooCoarse, os.str());
  }
  validate(problem);
  return assemble_p1(problem.L, problem.n);
}

NonAutonomousForm robin_form(const RobinProblem& problem) {
  FemAssembly a = assemble_fem(problem);
  const int N = problem.n + 1;
  Mat base = a.stiffness + problem.beta_left.b0 * a.E0 + problem.beta_right.b0 * a.EL;
  std::vector<AffineTerm> terms;
  auto add = [&](const BoundaryCoefficient& b, int node, const char* label) {
    if (b.c == 0.0) return;
    AffineTerm term;
    term.label = label;
    const double c = b.c, al = b.alpha;
    term.coefficient = [c, al](double t) { return c * std::pow(std::max(t, 0.0), al); };
    term.left = Mat::Zero(N, 1);
    term.left(node, 0) = 1.0;
    term.right = term.left;
    term.kinks = {0.0};
    terms.push_back(std::move(term));
  };
  add(problem.beta_left, 0, "beta_left");
  add(problem.beta_right, problem.n, "beta_right");
  NonAutonomousForm f(a.triple, problem.T, problem.gamma(), std::move(base), std::move(terms));
  std::ostringstream os;
  os << "robin1d L=" << problem.L << " n=" << problem.n << " alpha_H=" << problem.alpha_H() << " r0=" << problem.r0;
  f.description = os.str();
  return f;
}

namespace {

BoundaryCoefficient beta_from_json(const json& j, const std::string& key) {
  if (!j.is_object()) fail(ErrorCode::ConfigError, "key '" + key + "' must be an object");
  BoundaryCoefficient b;
  for (auto [name, slot] : {std::pair<const char*, double*>{"b0", &b.b0}, {"c", &b.c}, {"alpha", &b.alpha}}) {
    if (!j.contains(name)) continue;
    if (!j[name].is_number()) fail(ErrorCode::ConfigError, "key '" + key + "." + name + "' must be a number");
    *slot = j[name].get<double>();
  }
  return b;
}

json beta_to_json(const BoundaryCoefficient& b) { return json{{"b0", b.b0}, {"c", b.c}, {"alpha", b.alpha}}; }

} // namespace

RobinProblem robin_problem_from_json(const json& j) {
  if (!j.is_object()) fail(ErrorCode::ConfigError, "robin problem must be an object");
  RobinProblem p;
  for (auto [name, slot] : {std::pair<const char*, double*>{"L", &p.L}, {"r0", &p.r0}, {"T", &p.T}}) {
    if (!j.contains(name)) continue;
    if (!j[name].is_number()) fail(ErrorCode::ConfigError, std::string("key '") + name + "' must be a number");
    *slot = j[name].get<double>();
  }
  if (j.contains("n")) {
    if (!j["n"].is_number_integer()) fail(ErrorCode::ConfigError, "key 'n' must be an integer");
    p.n = j["n"].get<int>();
  }
  if (j.contains("beta")) p.beta_left = p.beta_right = beta_from_json(j["beta"], "beta");
  if (j.contains("beta_left")) p.beta_left = beta_from_json(j["beta_left"], "beta_left");
  if (j.contains("beta_right")) p.beta_right = beta_from_json(j["beta_right"], "beta_right");
  validate(p);
  return p;
}

json robin_problem_to_json(const RobinProblem& p) {
  return json{{"kind", "robin1d"}, {"L", p.L},   {"n", p.n}, {"beta_left", beta_to_json(p.beta_left)},
              {"beta_right", beta_to_json(p.beta_right)}, {"r0", p.r0}, {"T", p.T}};
}

} // namespace evolab
