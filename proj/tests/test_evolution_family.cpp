#include <doctest.h>

#include <cmath>
#include <random>

#include "evolab/error.hpp"
#include "evolab/evolution_family.hpp"
#include "evolab/operator_calculus.hpp"
#include "support.hpp"

using namespace evolab;

namespace {

StepOptions uniform_steps(Scheme scheme, double h) {
  StepOptions o;
  o.scheme = scheme;
  o.graded = false;
  o.max_step = h;
  return o;
}

double scalar_at(const Trajectory& tr, size_t k = 0) { return tr.states[k](0, 0).real(); }

double max_gap(const NonAutonomousForm& f, const EvolutionTable& a, const EvolutionTable& b) {
  double d = 0.0;
  for (size_t i = 0; i < a.size(); ++i)
    for (size_t j = 0; j <= i; ++j) d = std::max(d, f.geometry().operator_norm(a.at(i, j) - b.at(i, j), Space::H, Space::H));
  return d;
}

} // namespace

TEST_CASE("stepper orders on a scalar exponential") {
  auto f = test::scalar_form(1.0);
  const Mat x = Mat::Ones(1, 1);
  for (auto [scheme, order] : {std::pair{Scheme::implicit_euler, 1.0}, {Scheme::crank_nicolson, 2.0}}) {
    std::vector<double> err;
    for (double h : {1.0 / 32, 1.0 / 64, 1.0 / 128})
      err.push_back(std::abs(scalar_at(step_solve(f, 0.0, x, {1.0}, uniform_steps(scheme, h))) - std::exp(-1.0)));
    for (size_t k = 1; k < err.size(); ++k) CHECK(std::log2(err[k - 1] / err[k]) == doctest::Approx(order).epsilon(0.05));
  }
}

TEST_CASE("stepper converges for a(t) = 1 + t") {
  auto f = test::scalar_form(1.0, {{1.0, 1.0}});
  const double ex = std::exp(-1.5);
  double prev = INFINITY;
  for (double h : {1.0 / 16, 1.0 / 64, 1.0 / 256}) {
    const double e = std::abs(scalar_at(step_solve(f, 0.0, Mat::Ones(1, 1), {1.0}, uniform_steps(Scheme::crank_nicolson, h))) - ex);
    CHECK(e < prev);
    prev = e;
  }
  CHECK(prev < 1e-5);
  StepOptions rich;
  rich.richardson = true;
  CHECK(std::abs(scalar_at(step_solve(f, 0.0, Mat::Ones(1, 1), {1.0}, rich)) - ex) < 1e-8);
}

TEST_CASE("implicit Euler dissipates energy at every step") {
  auto f = test::robin(16);
  std::mt19937_64 rng(4);
  Mat x = test::random_matrix(17, 1, rng);
  StepOptions o;
  o.scheme = Scheme::implicit_euler;
  o.record_all = true;
  auto tr = step_solve(f, 0.0, x, {1.0}, o);
  double prev = f.triple().norm_H(x.col(0));
  for (const auto& u : tr.states) {
    const double e = f.triple().norm_H(u.col(0));
    CHECK(e <= prev * (1 + 1e-14));
    prev = e;
  }
  CHECK(tr.states.size() > 10);
}

TEST_CASE("frozen propagator U_1") {
  CHECK(u1_apply(test::scalar_form(1.0, {{1.0, 1.0}}), 1.0, 0.0, Mat::Ones(1, 1))(0, 0).real() ==
        doctest::Approx(std::exp(-2.0)).epsilon(1e-10));
  auto a = test::scalar_form(3.0);
  CHECK(u1_apply(a, 0.7, 0.2, Mat::Ones(1, 1))(0, 0).real() == doctest::Approx(std::exp(-1.5)).epsilon(1e-10));
  auto r = test::robin(12);
  const Mat A = r.at(0.6), G = r.triple().gram_H();
  RVec w;
  Mat V;
  pencil_eigen(A, G, w, V);
  RVec e = (-0.4 * w).array().exp();
  Mat ex = V * e.cast<cplx>().asDiagonal() * V.adjoint() * G;
  CHECK((u1_apply(r, 0.6, 0.2, Mat::Identity(13, 13)) - ex).norm() < 1e-8 * ex.norm());
}

TEST_CASE("shift certification") {
  auto aut = p_norm_and_shift(test::scalar_form(2.0), 0.0, {0.5, 1.0});
  CHECK(aut.mu == 0.0);
  CHECK(aut.bound == 0.0);

  auto lin = test::scalar_form(1.0, {{1.0, 1.0}});
  std::vector<double> outs;
  for (int k = 1; k <= 8; ++k) outs.push_back(k / 8.0);
  auto c = p_norm_and_shift(lin, 0.0, outs);
  CHECK(c.bound < 0.25);
  CHECK(c.mu >= 1.0);
  CHECK(c.probes == 64);
  CHECK(c.probe_estimate <= c.bound * (1 + 1e-12));
  CHECK(c.probe_estimate > 0.0);
  CHECK(c.shifted.shift() == c.mu);
  REQUIRE(c.discretization);
  VolterraDiscretization d(lin, 0.0, outs);
  double prev = INFINITY;
  for (double mu : {1.0, 2.0, 4.0, 8.0}) {
    const double b = d.with_shift(mu).norm_bound();
    CHECK(b <= prev);
    prev = b;
  }
  for (size_t k = 1; k < c.bound_history.size(); ++k) CHECK(c.bound_history[k] <= c.bound_history[k - 1]);
}

TEST_CASE("Neumann series") {
  auto aut = test::scalar_form(2.0);
  auto ra = neumann_solve(aut, 0.0, Mat::Ones(1, 1), {0.5, 1.0});
  CHECK(ra.iterations == 0);
  CHECK(ra.trajectory.states[1](0, 0).real() == doctest::Approx(std::exp(-2.0)).epsilon(1e-12));

  auto lin = test::scalar_form(1.0, {{1.0, 1.0}});
  std::vector<double> outs;
  for (int k = 1; k <= 8; ++k) outs.push_back(k / 8.0);
  auto c = p_norm_and_shift(lin, 0.0, outs);
  auto res = neumann_solve(*c.discretization, Mat::Ones(1, 1), 1e-10);
  auto tr = unshift(res.trajectory, c.mu);
  for (size_t k = 0; k < tr.times.size(); ++k) {
    const double t = tr.times[k];
    CHECK(test::rel(tr.states[k](0, 0).real(), std::exp(-t - t * t / 2)) < 1e-6);
  }
  for (double r : res.ratios) CHECK(r <= res.certified + 0.05);
  CHECK(res.truncation_bound <= 1e-10 * res.increments.front());

  try {
    neumann_solve(test::robin(8, 1.0, 20.0), 0.0, Mat::Identity(9, 9), {1.0});
    FAIL("expected NoCertifiedShift");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoCertifiedShift);
  }
}

TEST_CASE("Neumann agrees with the extrapolated stepper on a 16 x 16 form") {
  auto f = test::robin(15);
  REQUIRE(f.dim() == 16);
  std::vector<double> outs{0.25, 0.5, 0.75, 1.0};
  auto c = p_norm_and_shift(f, 0.0, outs);
  const Mat X = Mat::Identity(16, 16);
  auto nt = unshift(neumann_solve(*c.discretization, X, 1e-9).trajectory, c.mu);
  StepOptions o;
  o.richardson = true;
  auto st = step_solve(f, 0.0, X, outs, o);
  for (size_t k = 0; k < outs.size(); ++k)
    CHECK(f.geometry().operator_norm(nt.states[k] - st.states[k], Space::H, Space::H) < 1e-5);
}

TEST_CASE("unshift") {
  auto f = test::scalar_form(1.0);
  auto tr = step_solve(f, 0.0, Mat::Ones(1, 1), {0.5, 1.0});
  auto same = unshift(tr, 0.0);
  for (size_t k = 0; k < tr.states.size(); ++k) CHECK(same.states[k] == tr.states[k]);
  StepOptions rich;
  rich.richardson = true;
  auto sh = unshift(step_solve(shift(f, 2.0), 0.3, Mat::Ones(1, 1), {0.5, 1.0}, rich), 2.0);
  CHECK(scalar_at(sh, 1) == doctest::Approx(std::exp(-0.7)).epsilon(1e-8));

  auto r = test::robin(10);
  const Mat X = Mat::Identity(11, 11);
  auto direct = step_solve(r, 0.0, X, {0.5, 1.0}, rich);
  auto round = unshift(step_solve(shift(r, 3.0), 0.0, X, {0.5, 1.0}, rich), 3.0);
  for (size_t k = 0; k < 2; ++k)
    CHECK(r.geometry().operator_norm(direct.states[k] - round.states[k], Space::H, Space::H) < 1e-6);
}

TEST_CASE("tables") {
  auto r = test::robin(8, 1.0, 0.0);
  auto grid = uniform_time_grid(0.0, 1.0, 4);
  auto st = build_table(r, grid, TableMethod::stepper);
  auto fr = build_table(r, grid, TableMethod::frozen);
  for (size_t i = 0; i < st.size(); ++i) {
    CHECK(st.at(i, i) == Mat::Identity(9, 9));
    for (size_t j = 0; j < i; ++j) {
      Mat ex = semigroup_apply(r, 0.0, grid.nodes[i] - grid.nodes[j], Mat::Identity(9, 9), CoordinateKind::primal);
      CHECK(r.geometry().operator_norm(st.at(i, j) - ex, Space::H, Space::H) < 1e-8);
    }
  }
  CHECK(evolution_law_residual(r, fr) < 1e-12);
  CHECK(max_gap(r, st, fr) < 1e-8);

  auto js = table_to_json(st);
  auto back = table_from_json(js);
  CHECK(back.method == TableMethod::stepper);
  CHECK(back.grid.nodes == grid.nodes);
  CHECK(max_gap(r, st, back) == 0.0);

  auto un = unshift(st, 1.5);
  CHECK(un.shift_applied == -1.5);
  CHECK(un.at(2, 0).isApprox(std::exp(1.5 * 0.5) * st.at(2, 0)));
}

TEST_CASE("Neumann table meets its tolerance on the evolution law") {
  auto r = test::robin(8);
  auto grid = uniform_time_grid(0.0, 1.0, 4);
  auto c = p_norm_and_shift(r, 0.0, std::vector<double>(grid.nodes.begin() + 1, grid.nodes.end()));
  TableOptions o;
  o.neumann_tol = 1e-6;
  auto nt = build_table(c.shifted, grid, TableMethod::neumann, o);
  CHECK(evolution_law_residual(c.shifted, nt) < 1e-5);
  for (double q : nt.neumann_ratios) CHECK(q <= nt.neumann_certified + 0.05);
  auto st = build_table(c.shifted, grid, TableMethod::stepper);
  CHECK(max_gap(r, st, nt) < 1e-5);
}

TEST_CASE("stepper table law residual shrinks under refinement") {
  auto r = test::robin(8);
  auto grid = uniform_time_grid(0.0, 1.0, 4);
  std::vector<double> res;
  for (double h : {1.0 / 32, 1.0 / 64, 1.0 / 128}) {
    TableOptions o;
    o.step = uniform_steps(Scheme::implicit_euler, h);
    o.step.graded = true;
    res.push_back(evolution_law_residual(r, build_table(r, grid, TableMethod::stepper, o)));
  }
  for (size_t k = 1; k < res.size(); ++k) CHECK(res[k] < res[k - 1]);
}

TEST_CASE("Duhamel") {
  auto f = test::scalar_form(2.0);
  auto grid = uniform_time_grid(0.0, 1.0, 1024);
  auto zero = duhamel_solve(f, [](double) { return Vec::Zero(1); }, grid, DuhamelMethod::evolution_quadrature);
  for (const auto& s : zero.states) CHECK(s.norm() == 0.0);
  auto cst = duhamel_solve(f, [](double) { return Vec::Constant(1, 3.0); }, grid, DuhamelMethod::forced_stepper);
  for (size_t k = 0; k < cst.times.size(); ++k)
    CHECK(std::abs(cst.states[k](0, 0).real() - (1 - std::exp(-2 * cst.times[k])) * 1.5) < 1e-6);

  auto lin = test::scalar_form(1.0, {{1.0, 1.0}});
  auto force = [](double t) { return Vec::Constant(1, std::cos(3 * t)); };
  auto q = duhamel_solve(lin, force, grid, DuhamelMethod::evolution_quadrature);
  auto s = duhamel_solve(lin, force, grid, DuhamelMethod::forced_stepper);
  for (size_t k = 0; k < q.times.size(); ++k) CHECK(std::abs(q.states[k](0, 0) - s.states[k](0, 0)) < 1e-6);
}

TEST_CASE("contractivity and energy") {
  auto r = test::robin(12);
  auto grid = uniform_time_grid(0.0, 1.0, 4);
  auto st = build_table(r, grid, TableMethod::stepper);
  const double alpha = estimate_bounds(r, uniform_grid(0, 1, 8)).alpha;
  auto e = contractivity_energy_check(r, st, alpha);
  CHECK(e.contractive);
  CHECK(e.max_norm_H <= 1 + 1e-10);

  auto zero = contractivity_energy_check(r, step_solve(r, 0.0, Mat::Zero(13, 1), {0.5, 1.0}), alpha);
  CHECK(zero.max_norm_H == 0.0);
  CHECK(zero.identity_residual == 0.0);

  StepOptions fine;
  fine.record_all = true;
  fine.max_step = 1.0 / 4096;
  auto sc = test::scalar_form(1.0, {}, 1.0, 1.0);
  auto tr = step_solve(sc, 0.0, Mat::Ones(1, 1), {1.0}, fine);
  auto es = contractivity_energy_check(sc, tr, 1.0);
  CHECK(std::abs(es.identity_residual) < 1e-3);
  CHECK(es.contractive);
}

TEST_CASE("pairs CSV header names the Gram of every column") {
  auto r = test::robin(6, 1.0, 0.0);
  auto grid = uniform_time_grid(0.0, 1.0, 2);
  auto st = build_table(r, grid, TableMethod::stepper);
  auto fr = build_table(r, grid, TableMethod::frozen);
  auto csv = pairs_csv(r, st, &fr);
  CHECK(csv.rfind("i,j,t_i,t_j,opnorm_H_to_H[gram_H],opnorm_V_to_V[gram_V],law_residual_H_to_H[gram_H],"
                  "diff_vs_frozen_H_to_H[gram_H]\n",
                  0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 7);
}
