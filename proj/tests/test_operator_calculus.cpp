#include <doctest.h>

#include <cmath>
#include <random>

#include "evolab/error.hpp"
#include "evolab/operator_calculus.hpp"
#include "support.hpp"

using namespace evolab;

namespace {

NonAutonomousForm matrix_form(const Mat& GH, const Mat& GV, const Mat& A, double gamma = 0.5) {
  return NonAutonomousForm(make_triple(GH, GV), 1.0, gamma, A);
}

/// f(A) in primal coordinates for the pencil (A, G_H) through a plain eigendecomposition
Mat oracle(const Mat& A, const Mat& GH, const std::function<cplx(cplx)>& f) {
  Eigen::ComplexEigenSolver<Mat> es(GH.inverse() * A);
  Mat V = es.eigenvectors();
  Vec d = es.eigenvalues();
  for (Eigen::Index k = 0; k < d.size(); ++k) d(k) = f(d(k));
  return V * d.asDiagonal() * V.inverse();
}

double rel_err(const Mat& a, const Mat& b) { return (a - b).norm() / b.norm(); }

} // namespace

TEST_CASE("resolvent examples") {
  auto f = test::scalar_form(4.0);
  Mat F = Mat::Constant(1, 1, 3.0);
  CHECK(std::abs(resolvent_apply(f, 0.0, -1.0, F)(0, 0) - cplx(-0.6)) < 1e-15);

  std::mt19937_64 rng(5);
  const int n = 8;
  Mat GH = test::random_hpd(n, rng), GV = test::random_hpd(n, rng, 1.0, 8.0);
  Mat A = test::random_hpd(n, rng, 1.0, 30.0);
  auto h = matrix_form(GH, GV, A);
  const double alpha = estimate_bounds(h, {0.0}).alpha;
  Mat Fr = test::random_matrix(n, 2, rng);
  Mat u0 = resolvent_apply(h, 0.0, 0.0, Fr);
  CHECK(rel_err(u0, -A.lu().solve(Fr)) < 1e-12);
  for (int c = 0; c < 2; ++c)
    CHECK(h.geometry().norm(u0.col(c), CoordinateKind::primal, Space::V) <=
          h.geometry().norm(Fr.col(c), CoordinateKind::action, Space::Vdual) / alpha * (1 + 1e-9));

  const cplx lam = 5.0 * std::polar(1.0, 3 * kPi / 8);
  Mat R = oracle(A, GH, [lam](cplx l) { return 1.0 / (lam - l); }) * GH.inverse();
  CHECK(rel_err(resolvent_apply(h, 0.0, lam, Fr), R * Fr) < 1e-10);
  CHECK_THROWS_AS(resolvent_apply(test::scalar_form(4.0), 0.0, 4.0, F), Error);
}

TEST_CASE("semigroup examples") {
  auto f = test::scalar_form(4.0);
  Mat one = Mat::Ones(1, 1);
  auto c = semigroup_contour(f, 0.0, 0.5);
  CHECK(std::abs(semigroup_apply(f, 0.0, 0.5, one, CoordinateKind::primal, c)(0, 0) - std::exp(-2.0)) < 1e-10);

  std::mt19937_64 rng(9);
  Mat GH = test::random_hpd(6, rng), GV = test::random_hpd(6, rng);
  auto h = matrix_form(GH, GV, test::random_hpd(6, rng, 1.0, 5.0));
  Mat X = test::random_matrix(6, 3, rng);
  Mat near = semigroup_apply(h, 0.0, 1e-6, X, CoordinateKind::primal, CalculusMethod::contour);
  CHECK(rel_err(near, X) < 1e-4);

  auto fem = test::robin(49);
  REQUIRE(fem.dim() == 50);
  const Mat A = fem.at(0.3), G = fem.triple().gram_H();
  Mat Y = test::random_matrix(50, 4, rng);
  for (double tau : {0.01, 0.1, 1.0}) {
    Mat c1 = semigroup_apply(fem, 0.3, tau, Y, CoordinateKind::primal, CalculusMethod::contour);
    Mat ex = oracle(A, G, [tau](cplx l) { return std::exp(-tau * l); }) * Y;
    CHECK(rel_err(c1, ex) < 1e-8);
  }
}

TEST_CASE("semigroup and resolvent identities") {
  std::mt19937_64 rng(21);
  const int n = 10;
  Mat GH = test::random_hpd(n, rng), GV = test::random_hpd(n, rng);
  Mat A = test::random_hpd(n, rng, 1.0, 10.0) + 0.5 * test::random_matrix(n, n, rng);
  auto h = matrix_form(GH, GV, A);
  REQUIRE(numerical_range_angle(h, 0.0) < kPi / 2);
  Mat X = test::random_matrix(n, 2, rng);
  auto S = [&](double tau, const Mat& Z) {
    return semigroup_apply(h, 0.0, tau, Z, CoordinateKind::primal, CalculusMethod::contour);
  };
  CHECK(rel_err(S(0.3, S(0.2, X)), S(0.5, X)) < 1e-7);

  const double sec = numerical_range_angle(h, 0.0);
  const cplx l1 = 2.0 * std::polar(1.0, (sec + kPi) / 2), l2 = 7.0 * std::polar(1.0, -(sec + kPi) / 2);
  Mat F = test::random_matrix(n, 2, rng);
  Mat lhs = resolvent_apply(h, 0.0, l1, F) - resolvent_apply(h, 0.0, l2, F);
  Mat rhs = (l2 - l1) * resolvent_apply(h, 0.0, l1, GH * resolvent_apply(h, 0.0, l2, F));
  CHECK(rel_err(lhs, rhs) < 1e-9);
}

TEST_CASE("inverse square root") {
  auto f = test::scalar_form(4.0);
  Mat one = Mat::Ones(1, 1);
  for (auto m : {InvSqrtMethod::spectral, InvSqrtMethod::semigroup_integral, InvSqrtMethod::resolvent_integral})
    CHECK(std::abs(inv_sqrt_apply(f, 0.0, one, m)(0, 0) - 0.5) < 1e-7);

  Mat D = Mat::Zero(2, 2);
  D(0, 0) = 1;
  D(1, 1) = 9;
  auto d = matrix_form(Mat::Identity(2, 2), Mat::Identity(2, 2), D);
  Mat r = inv_sqrt_apply(d, 0.0, Mat::Identity(2, 2), InvSqrtMethod::semigroup_integral);
  CHECK(std::abs(r(0, 0) - 1.0) < 1e-7);
  CHECK(std::abs(r(1, 1) - 1.0 / 3) < 1e-7);
  CHECK(std::abs(r(0, 1)) < 1e-7);

  Mat N(2, 2);
  N << 2, 1, 0, 3;
  auto nn = matrix_form(Mat::Identity(2, 2), Mat::Identity(2, 2), N);
  Mat ex = oracle(N, Mat::Identity(2, 2), [](cplx l) { return 1.0 / std::sqrt(l); });
  for (auto m : {InvSqrtMethod::semigroup_integral, InvSqrtMethod::resolvent_integral})
    CHECK(rel_err(inv_sqrt_apply(nn, 0.0, Mat::Identity(2, 2), m), ex) < 1e-7);
}

TEST_CASE("square root") {
  auto f = test::scalar_form(4.0);
  CHECK(std::abs(sqrt_apply(f, 0.0, Mat::Ones(1, 1))(0, 0) - 2.0) < 1e-7);
  Mat D = Mat::Zero(2, 2);
  D(0, 0) = 1;
  D(1, 1) = 9;
  auto d = matrix_form(Mat::Identity(2, 2), Mat::Identity(2, 2), D);
  Mat r = sqrt_apply(d, 0.0, Mat::Ones(2, 1), InvSqrtMethod::semigroup_integral);
  CHECK(std::abs(r(0, 0) - 1.0) < 1e-7);
  CHECK(std::abs(r(1, 0) - 3.0) < 1e-7);

  std::mt19937_64 rng(33);
  const int n = 16;
  Mat GH = test::random_hpd(n, rng), A = test::random_hpd(n, rng, 1.0, 20.0);
  auto h = matrix_form(GH, test::random_hpd(n, rng), A);
  Mat U = test::random_matrix(n, 3, rng);
  for (auto m : {InvSqrtMethod::spectral, InvSqrtMethod::semigroup_integral}) {
    Mat twice = sqrt_apply(h, 0.0, sqrt_apply(h, 0.0, U, m), m);
    CHECK(rel_err(twice, GH.llt().solve(A * U)) < 1e-6);
    // A^{-1/2} A^{1/2} u = u
    CHECK(rel_err(inv_sqrt_apply(h, 0.0, GH * sqrt_apply(h, 0.0, U, m), m), U) < 1e-6);
  }
}

TEST_CASE("inverse square roots: composition and the two integral formulas") {
  std::mt19937_64 rng(41);
  const int n = 12;
  Mat GH = test::random_hpd(n, rng), A = test::random_hpd(n, rng, 1.0, 10.0) + 0.3 * test::random_matrix(n, n, rng);
  auto h = matrix_form(GH, test::random_hpd(n, rng), A);
  Mat F = test::random_matrix(n, 2, rng);
  for (auto m : {InvSqrtMethod::semigroup_integral, InvSqrtMethod::resolvent_integral}) {
    Mat half = inv_sqrt_apply(h, 0.0, F, m);
    CHECK(rel_err(inv_sqrt_apply(h, 0.0, GH * half, m), A.lu().solve(F)) < 1e-6);
  }
  CHECK(rel_err(inv_sqrt_apply(h, 0.0, F, InvSqrtMethod::semigroup_integral),
                inv_sqrt_apply(h, 0.0, F, InvSqrtMethod::resolvent_integral)) < 1e-6);
  CHECK_THROWS_AS(inv_sqrt_apply(test::robin(8, 0.0, 0.0), 0.0, Mat::Identity(9, 9),
                                 InvSqrtMethod::semigroup_integral),
                  Error);
}

TEST_CASE("square root property") {
  std::mt19937_64 rng(2);
  Mat GH = test::random_hpd(8, rng), A = test::random_hpd(8, rng, 1.0, 6.0);
  CHECK(square_root_property_check(matrix_form(GH, A, A), {0.0}) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(square_root_property_check(test::scalar_form(4.0, {}, 1.0, 4.0), {0.0}) ==
        doctest::Approx(1.0).epsilon(1e-12));
  const double s = square_root_property_check(test::robin(32), {0.0});
  CHECK(s >= 1.0);
  CHECK(s <= 3.0);
}

TEST_CASE("estimate suite") {
  auto f = test::scalar_form(1.0);
  auto lams = default_lambda_samples(numerical_range_angle(f, 0.0), 4);
  auto rep = resolvent_estimate_suite(f, {0.0}, lams, default_s_samples(1.0, 4));
  double brute = 0.0;
  for (cplx l : lams) brute = std::max(brute, (1 + std::abs(l)) / std::abs(l - 1.0));
  CHECK(rep.items[1].constant == doctest::Approx(brute).epsilon(1e-6));
  for (const auto& it : rep.items) CHECK(std::isfinite(it.constant));

  std::mt19937_64 rng(8);
  Mat A = test::random_hpd(6, rng, 1.0, 5.0);
  auto sym = matrix_form(test::random_hpd(6, rng), A, A);
  auto r2 = resolvent_estimate_suite(sym, {0.0}, default_lambda_samples(0.0, 2), default_s_samples(1.0, 3));
  CHECK(r2.items[10].constant <= 1.0 + 1e-10);
  CHECK_THROWS_AS(resolvent_estimate_suite(f, {0.0}, {cplx(2.0, 0.0)}, {}), Error);
}

TEST_CASE("sqrt Hoelder suite") {
  auto aut = test::scalar_form(3.0);
  auto rep = sqrt_holder_suite(aut, {{0.5, 0.25}, {1.0, 0.0}}, default_dini_modulus(aut));
  for (double d : rep.max_difference) CHECK(d == 0.0);

  auto lin = test::scalar_form(1.0, {{0.5, 1.0}});
  auto mod = estimate_dini_modulus(lin, {0.125, 0.25, 0.5, 1.0}, uniform_grid(0, 1, 8));
  auto r = sqrt_holder_suite(lin, {{0.25, 0.125}, {1.0, 0.5}, {1.0, 0.0}}, mod);
  for (const auto& row : r.rows) {
    const double ex = std::abs(std::pow(1 + row.t / 2, -0.5) - std::pow(1 + row.s / 2, -0.5));
    CHECK(row.difference[0] == doctest::Approx(ex).epsilon(1e-10));
    CHECK(row.omega == doctest::Approx(std::abs(row.t - row.s) / 2).epsilon(1e-10));
    CHECK(row.ratio[0] <= 0.5);
  }
}

TEST_CASE("contour nodes are symmetric and ordered") {
  ContourSpec c;
  c.phi = 1.2;
  auto nodes = contour_nodes(c);
  REQUIRE(nodes.size() == static_cast<size_t>(c.node_count()));
  CHECK(nodes.size() % 2 == 0);
  CHECK(c.node_count() >= 8);
}
