#include <doctest.h>

#include <cmath>
#include <random>

#include "evolab/error.hpp"
#include "evolab/galerkin_spaces.hpp"
#include "evolab/robin_heat.hpp"
#include "support.hpp"

using namespace evolab;

namespace {
Mat diag(std::initializer_list<double> d) {
  RVec v(static_cast<Eigen::Index>(d.size()));
  Eigen::Index k = 0;
  for (double x : d) v(k++) = x;
  return v.cast<cplx>().asDiagonal();
}
} // namespace

TEST_CASE("make_triple embedding constant") {
  CHECK(make_triple(Mat::Identity(2, 2), Mat::Identity(2, 2)).c_H() == doctest::Approx(1.0));
  CHECK(make_triple(Mat::Identity(2, 2), diag({1, 4})).c_H() == doctest::Approx(1.0));
  CHECK(make_triple(Mat::Identity(2, 2), diag({0.25, 1})).c_H() == doctest::Approx(2.0));
}

TEST_CASE("make_triple rejects bad Grams") {
  Mat A = Mat::Identity(2, 2);
  A(0, 1) = 0.5;
  auto code = [](auto&& f) {
    try {
      f();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::IoError;
  };
  CHECK(code([&] { make_triple(A, Mat::Identity(2, 2)); }) == ErrorCode::NonHermitian);
  CHECK(code([&] { make_triple(diag({1, -1}), Mat::Identity(2, 2)); }) == ErrorCode::NotPositiveDefinite);
  CHECK(code([&] { make_triple(Mat::Identity(2, 2), Mat::Identity(3, 3)); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("interpolation scale endpoints and midpoint") {
  std::mt19937_64 rng(1);
  auto GH = test::random_hpd(5, rng), GV = test::random_hpd(5, rng, 2.0, 20.0);
  auto tr = make_triple(GH, GV);
  CHECK((interpolation_scale(tr, 0.0).gram_gamma - GH).norm() < 1e-12 * GH.norm());
  CHECK((interpolation_scale(tr, 1.0).gram_gamma - GV).norm() < 1e-12 * GV.norm());
  auto half = interpolation_scale(make_triple(Mat::Identity(2, 2), diag({1, 16})), 0.5);
  CHECK((half.gram_gamma - diag({1, 4})).norm() < 1e-13);
  CHECK_THROWS_AS(interpolation_scale(tr, 1.5), Error);
  CHECK_THROWS_AS(interpolation_scale(tr, -0.1), Error);
}

TEST_CASE("norms across the scale") {
  Geometry g(make_triple(Mat::Identity(2, 2), diag({1, 4})), 0.5);
  Vec z = Vec::Zero(2);
  for (Space s : {Space::H, Space::V, Space::Vgamma}) CHECK(g.norm(z, CoordinateKind::primal, s) == 0.0);
  for (Space s : {Space::Vdual, Space::Vgamma_dual}) CHECK(g.norm(z, CoordinateKind::action, s) == 0.0);
  Vec e1 = Vec::Zero(2);
  e1(1) = 1.0;
  CHECK(g.norm(e1, CoordinateKind::primal, Space::V) == doctest::Approx(2.0));
  CHECK(g.norm(e1, CoordinateKind::action, Space::Vdual) == doctest::Approx(0.5));
  CHECK_THROWS_AS(g.norm(e1, CoordinateKind::action, Space::V), Error);
  CHECK_THROWS_AS(g.norm(e1, CoordinateKind::primal, Space::Vdual), Error);

  // dual norm as a sup over the unit circle of V
  double best = 0.0;
  for (int k = 0; k < 20000; ++k) {
    const double a = 2 * kPi * k / 20000.0;
    Vec v(2);
    v << std::cos(a), std::sin(a);
    best = std::max(best, std::abs(e1.dot(v)) / g.norm(v, CoordinateKind::primal, Space::V));
  }
  CHECK(std::abs(best - 0.5) < 1e-6);
}

TEST_CASE("operator norms") {
  Geometry g(make_triple(Mat::Identity(2, 2), Mat::Identity(2, 2)));
  CHECK(g.operator_norm(Mat::Identity(2, 2), Space::H, Space::H) == doctest::Approx(1.0));
  CHECK(g.operator_norm(diag({2, 3}), Space::H, Space::H) == doctest::Approx(3.0));

  std::mt19937_64 rng(7);
  Mat K = test::random_matrix(4, 4, rng);
  Geometry g4(make_triple(Mat::Identity(4, 4), diag({1, 2, 3, 4})));
  const double exact = g4.operator_norm(K, Space::V, Space::H);
  auto ratio = [&](const Vec& u) {
    return g4.norm(K * u, CoordinateKind::primal, Space::H) / g4.norm(u, CoordinateKind::primal, Space::V);
  };
  // random probes, then a random-perturbation climb from the best one
  Vec best = test::random_matrix(4, 1, rng);
  double probe = ratio(best);
  for (int k = 0; k < 100000; ++k) {
    Vec u = test::random_matrix(4, 1, rng);
    if (double r = ratio(u); r > probe) probe = r, best = u;
  }
  double step = 0.1;
  for (int k = 0; k < 100000; ++k, step *= 0.99995) {
    Vec u = best + step * best.norm() * test::random_matrix(4, 1, rng);
    if (double r = ratio(u); r > probe) probe = r, best = u;
  }
  CHECK(probe <= exact * (1 + 1e-12));
  CHECK(std::abs(probe - exact) <= 1e-3 * exact);
}

TEST_CASE("embedding singular values") {
  auto sv = embedding_singular_values(make_triple(Mat::Identity(2, 2), diag({1, 4})));
  CHECK(sv(0) == doctest::Approx(1.0));
  CHECK(sv(1) == doctest::Approx(0.5));
  auto ones = embedding_singular_values(make_triple(diag({2, 3, 5}), diag({2, 3, 5})));
  for (int k = 0; k < 3; ++k) CHECK(ones(k) == doctest::Approx(1.0));

  // P1 on (0, 1): s_k = (1 + lambda_k)^{-1/2}, lambda_k ~ (k pi)^2 for the Neumann Laplacian
  auto fine = embedding_singular_values(assemble_p1(1.0, 512).triple);
  auto coarse = embedding_singular_values(assemble_p1(1.0, 128).triple);
  for (int k = 10; k <= 40; k += 5) {
    CHECK(test::rel(coarse(k), fine(k)) < 0.05);
    CHECK(test::rel(coarse(k), 1.0 / (k * kPi)) < 0.05);
  }
}

TEST_CASE("properties: c_H attained, dual bound, log-convexity, Schatten sums") {
  std::mt19937_64 rng(11);
  const int n = 6;
  auto tr = make_triple(test::random_hpd(n, rng), test::random_hpd(n, rng, 0.5, 10.0));
  Geometry g(tr, 0.5);
  for (int k = 0; k < 10000; ++k) {
    Vec u = test::random_matrix(n, 1, rng);
    CHECK_LE(tr.norm_H(u), tr.c_H() * tr.norm_V(u) * (1 + 1e-9));
    Vec F = test::random_matrix(n, 1, rng);
    // F as the action of an H-element
    CHECK_LE(g.norm(F, CoordinateKind::action, Space::Vdual),
             tr.c_H() * std::sqrt(std::real(F.dot(tr.gram_H().llt().solve(F)))) * (1 + 1e-9));
  }
  RVec w;
  Mat X;
  pencil_eigen(tr.gram_H(), tr.gram_V(), w, X);
  Vec top = X.col(n - 1);
  CHECK(std::abs(tr.norm_H(top) - tr.c_H() * tr.norm_V(top)) < 1e-6 * tr.norm_H(top));

  const double gammas[] = {0.0, 0.25, 0.5, 0.75, 1.0};
  std::vector<Geometry> gs;
  for (double gm : gammas) gs.emplace_back(tr, gm);
  for (int k = 0; k < 200; ++k) {
    Vec u = test::random_matrix(n, 1, rng);
    double ln[5];
    for (int i = 0; i < 5; ++i) ln[i] = std::log(gs[i].norm(u, CoordinateKind::primal, Space::Vgamma));
    for (int i = 1; i < 4; ++i) CHECK_LE(ln[i], 0.5 * (ln[i - 1] + ln[i + 1]) + 1e-9);
    const double hv = (1 - gammas[2]) * std::log(tr.norm_H(u)) + gammas[2] * std::log(tr.norm_V(u));
    CHECK_LE(ln[2], hv + 1e-9);
  }
  auto sv = embedding_singular_values(assemble_p1(1.0, 64).triple);
  double prev = INFINITY;
  for (double p : {1.0, 1.5, 2.0, 3.0}) {
    const double s = sv.array().pow(p).sum();
    CHECK_LE(s, prev);
    prev = s;
  }
}

TEST_CASE("triple JSON round trip") {
  std::mt19937_64 rng(3);
  auto tr = make_triple(test::random_hpd(3, rng), test::random_hpd(3, rng));
  const std::string path = "triple_roundtrip.json";
  save_triple_json(tr, path);
  auto back = load_triple_json(path);
  CHECK((back.gram_H() - tr.gram_H()).norm() == 0.0);
  CHECK((back.gram_V() - tr.gram_V()).norm() == 0.0);
  CHECK(back.c_H() == tr.c_H());
}
