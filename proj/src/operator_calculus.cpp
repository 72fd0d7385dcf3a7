#include "evolab/operator_calculus.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "evolab/error.hpp"

namespace evolab {

namespace {

/// B = L_H^{-1} A L_H^{-*}
Mat h_weighted(const NonAutonomousForm& form, const Mat& A) {
  const Mat& L = form.triple().chol_H();
  return solve_right_adjoint(lower_solve(L, A), L);
}

struct SpectralRange {
  double low = 0.0;   // smallest eigenvalue of the Hermitian part of B
  double high = 0.0;  // ||B||_2
  double sector = 0.0;
};

SpectralRange spectral_range(const NonAutonomousForm& form, double t) {
  const Mat B = h_weighted(form, form.at(t));
  SpectralRange r;
  r.low = Eigen::SelfAdjointEigenSolver<Mat>(hermitian_part(B), Eigen::EigenvaluesOnly).eigenvalues()(0);
  r.high = spectral_norm(B);
  r.sector = numerical_range_angle(form, t);
  return r;
}

SpectralRange require_sectorial(const NonAutonomousForm& form, double t) {
  SpectralRange r = spectral_range(form, t);
  if (!(r.low > 0.0) || r.sector >= kPi / 2) {
    std::ostringstream os;
    os << "Hermitian part of A(" << t << ") has smallest H-eigenvalue " << r.low << "; shift the form first";
    fail(ErrorCode::NotCoercive, os.str());
  }
  return r;
}

double default_phi(double sector) { return sector + 0.6 * (kPi / 2 - sector); }

Mat action_of(const NonAutonomousForm& form, const Mat& X, CoordinateKind kind) {
  return kind == CoordinateKind::primal ? Mat(form.triple().gram_H() * X) : X;
}

} // namespace

Mat FrozenSpectrum::matrix(const Vec& f, CoordinateKind input) const {
  const Mat& left = input == CoordinateKind::action ? left_action : left_primal;
  return right * f.asDiagonal() * left;
}

Mat FrozenSpectrum::apply(const Vec& f, const Mat& X, CoordinateKind input) const {
  const Mat& left = input == CoordinateKind::action ? left_action : left_primal;
  return right * (f.asDiagonal() * (left * X));
}

Vec FrozenSpectrum::map(const std::function<cplx(cplx)>& f) const {
  Vec out(lambda.size());
  for (Eigen::Index k = 0; k < lambda.size(); ++k) out(k) = f(lambda(k));
  return out;
}

FrozenSpectrum frozen_spectrum(const NonAutonomousForm& form, double t) {
  FrozenSpectrum s;
  s.time = t;
  const Mat A = form.at(t);
  const Mat& G = form.triple().gram_H();
  s.hermitian = form.hermitian();
  if (s.hermitian) {
    RVec w;
    Mat X;
    pencil_eigen(hermitian_part(A), G, w, X);
    s.lambda = w.cast<cplx>();
    s.right = X;
    s.left_action = X.adjoint();
    s.left_primal = X.adjoint() * G;
    return s;
  }
  const Mat& L = form.triple().chol_H();
  const Mat B = solve_right_adjoint(lower_solve(L, A), L);
  Eigen::ComplexEigenSolver<Mat> es(B);
  if (es.info() != Eigen::Success) fail(ErrorCode::SingularSystem, "eigendecomposition failed");
  const Mat& Q = es.eigenvectors();
  Eigen::PartialPivLU<Mat> lu(Q);
  const Mat Qinv = lu.inverse();
  s.lambda = es.eigenvalues();
  s.right = L.adjoint().triangularView<Eigen::Upper>().solve(Q);
  s.left_action = Qinv * L.triangularView<Eigen::Lower>().solve(Mat::Identity(L.rows(), L.cols()));
  s.left_primal = Qinv * L.adjoint();
  return s;
}

int ContourSpec::node_count() const {
  const int J = static_cast<int>(std::ceil(std::log(r_max / r_min) / step));
  return 2 * (J + 1);
}

std::vector<ContourNode> contour_nodes(const ContourSpec& spec) {
  const int J = static_cast<int>(std::ceil(std::log(spec.r_max / spec.r_min) / spec.step));
  const double h = std::log(spec.r_max / spec.r_min) / J;
  const double x0 = std::log(spec.r_min);
  std::vector<ContourNode> nodes;
  nodes.reserve(static_cast<size_t>(2 * (J + 1)));
  const cplx two_pi_i(0.0, 2 * kPi);
  for (int j = 0; j <= J; ++j) {
    const double r = std::exp(x0 + j * h);
    const double wj = (j == 0 || j == J) ? 0.5 * h : h;
    for (int sgn : {+1, -1}) {
      const cplx dir = std::polar(1.0, sgn * spec.phi);
      nodes.push_back({r * dir, static_cast<double>(-sgn) * dir * r * wj / two_pi_i});
    }
  }
  return nodes;
}

ContourSpec semigroup_contour(const NonAutonomousForm& form, double t, double tau, double target) {
  const SpectralRange r = require_sectorial(form, t);
  ContourSpec c;
  c.phi = default_phi(r.sector);
  c.r_min = 1e-15 * r.low;
  c.r_max = (std::log(1.0 / target) + 2.0) / (tau * std::cos(c.phi));
  c.r_max = std::max(c.r_max, 1e3 * c.r_min);
  return c;
}

Mat resolvent_apply(const NonAutonomousForm& form, double t, cplx lambda, const Mat& F) {
  const double sector = numerical_range_angle(form, t);
  if (lambda != cplx(0.0) && std::abs(std::arg(lambda)) <= sector + 1e-12) {
    std::ostringstream os;
    os << "lambda = " << lambda << " lies in the closed sector of half-angle " << sector;
    fail(ErrorCode::LambdaInSector, os.str());
  }
  const Mat M = lambda * form.triple().gram_H() - form.at(t);
  Eigen::PartialPivLU<Mat> lu(M);
  const Mat u = lu.solve(F);
  const double res = (M * u - F).norm();
  const double scale = M.norm() * u.norm() + F.norm();
  if (!u.allFinite() || res > 1e-10 * std::max(scale, 1e-300)) {
    std::ostringstream os;
    os << "relative residual " << res / std::max(scale, 1e-300) << " at lambda = " << lambda;
    fail(ErrorCode::SingularSystem, os.str());
  }
  return u;
}

Mat semigroup_apply(const NonAutonomousForm& form, double t, double tau, const Mat& X, CoordinateKind kind,
                    const ContourSpec& contour, ExecutionPolicy policy) {
  if (!(tau > 0.0)) fail(ErrorCode::ConfigError, "semigroup duration must be positive");
  const double sector = numerical_range_angle(form, t);
  if (sector >= kPi / 2) fail(ErrorCode::NotCoercive, "form is not sectorial in the H-geometry; shift it first");
  if (!(contour.phi > sector && contour.phi < kPi / 2)) {
    std::ostringstream os;
    os << "contour angle " << contour.phi << " must lie in (" << sector << ", pi/2)";
    fail(ErrorCode::LambdaInSector, os.str());
  }
  if (!(contour.r_min > 0.0 && contour.r_max > contour.r_min) || contour.node_count() < 8)
    fail(ErrorCode::ConfigError, "contour needs 0 < r_min < r_max and at least 8 nodes");
  const double tail = std::exp(-tau * contour.r_max * std::cos(contour.phi));
  if (tail > 1e-10) {
    std::ostringstream os;
    os << "tail estimate " << tail << " at r_max = " << contour.r_max << " for tau = " << tau;
    fail(ErrorCode::ContourTooShort, os.str());
  }
  const auto nodes = contour_nodes(contour);
  std::vector<cplx> f(nodes.size());
  for (size_t k = 0; k < nodes.size(); ++k) f[k] = std::exp(-tau * nodes[k].lambda);
  return contour_sum(form.at(t), form.triple().gram_H(), nodes, f, action_of(form, X, kind), policy);
}

Mat semigroup_apply(const NonAutonomousForm& form, double t, double tau, const Mat& X, CoordinateKind kind,
                    CalculusMethod method) {
  if (method == CalculusMethod::spectral || (method == CalculusMethod::automatic && form.hermitian())) {
    if (!(tau >= 0.0)) fail(ErrorCode::ConfigError, "semigroup duration must be nonnegative");
    const FrozenSpectrum s = frozen_spectrum(form, t);
    return s.apply(s.map([tau](cplx l) { return std::exp(-tau * l); }), X, kind);
  }
  return semigroup_apply(form, t, tau, X, kind, semigroup_contour(form, t, tau));
}

namespace {

Mat inv_sqrt_semigroup_integral(const NonAutonomousForm& form, double t, const Mat& F, ExecutionPolicy policy) {
  const SpectralRange r = require_sectorial(form, t);
  // A^{-1/2} = (2/sqrt(pi)) int_0^inf e^{-sigma^2 A} d sigma, sigma = e^y
  const double sig_lo = 1e-10 / std::sqrt(r.high);
  const double sig_hi = std::sqrt(40.0 / (r.low * std::cos(r.sector)));
  const double strip = 0.5 * (kPi / 2 - r.sector);
  const double hy = std::min(0.1, 2 * kPi * strip / 45.0);
  const int Ny = static_cast<int>(std::ceil(std::log(sig_hi / sig_lo) / hy));
  const double dy = std::log(sig_hi / sig_lo) / Ny;
  std::vector<double> sig2(static_cast<size_t>(Ny) + 1), wsig(static_cast<size_t>(Ny) + 1);
  for (int j = 0; j <= Ny; ++j) {
    const double s = sig_lo * std::exp(j * dy);
    sig2[static_cast<size_t>(j)] = s * s;
    wsig[static_cast<size_t>(j)] = (j == 0 || j == Ny ? 0.5 : 1.0) * dy * s * 2.0 / std::sqrt(kPi);
  }
  ContourSpec c;
  c.phi = default_phi(r.sector);
  c.r_max = 40.0 / (sig_lo * sig_lo * std::cos(c.phi));
  c.r_min = 1e-13 * r.low / (sig_hi * std::sqrt(r.high));
  const auto nodes = contour_nodes(c);
  std::vector<cplx> g(nodes.size());
  for (size_t k = 0; k < nodes.size(); ++k) {
    cplx acc = 0.0;
    for (size_t j = 0; j < sig2.size(); ++j) acc += wsig[j] * std::exp(-sig2[j] * nodes[k].lambda);
    g[k] = acc;
  }
  return contour_sum(form.at(t), form.triple().gram_H(), nodes, g, F, policy);
}

Mat inv_sqrt_resolvent_integral(const NonAutonomousForm& form, double t, const Mat& F) {
  const SpectralRange r = require_sectorial(form, t);
  // A^{-1/2} = (1/pi) int_0^inf s^{-1/2} (s + A)^{-1} ds, s = e^x
  const double x_lo = 2.0 * std::log(1e-13 * r.low / (2.0 * std::sqrt(r.high)));
  const double x_hi = 2.0 * std::log(2e13 * std::sqrt(r.high));
  const double hx = std::min(0.25, 2 * kPi * (kPi - r.sector) / 80.0);
  const int N = static_cast<int>(std::ceil((x_hi - x_lo) / hx));
  const double dx = (x_hi - x_lo) / N;
  const Mat A = form.at(t);
  const Mat& G = form.triple().gram_H();
  Mat acc = Mat::Zero(F.rows(), F.cols());
  for (int j = 0; j <= N; ++j) {
    const double s = std::exp(x_lo + j * dx);
    const double w = (j == 0 || j == N ? 0.5 : 1.0) * dx * std::sqrt(s) / kPi;
    Eigen::PartialPivLU<Mat> lu(s * G + A);
    acc += w * lu.solve(F);
  }
  return acc;
}

} // namespace

Mat inv_sqrt_apply(const NonAutonomousForm& form, double t, const Mat& F, InvSqrtMethod method) {
  if (method == InvSqrtMethod::spectral || (method == InvSqrtMethod::automatic && form.hermitian())) {
    const FrozenSpectrum s = frozen_spectrum(form, t);
    for (Eigen::Index k = 0; k < s.lambda.size(); ++k)
      if (!(s.lambda(k).real() > 0.0)) {
        std::ostringstream os;
        os << "eigenvalue " << s.lambda(k) << " of A(" << t << ") is not in the right half plane";
        fail(ErrorCode::NotCoercive, os.str());
      }
    return s.apply(s.map([](cplx l) { return 1.0 / std::sqrt(l); }), F, CoordinateKind::action);
  }
  if (method == InvSqrtMethod::resolvent_integral) return inv_sqrt_resolvent_integral(form, t, F);
  return inv_sqrt_semigroup_integral(form, t, F, ExecutionPolicy::parallel);
}

Mat sqrt_apply(const NonAutonomousForm& form, double t, const Mat& U, InvSqrtMethod method) {
  return inv_sqrt_apply(form, t, form.at(t) * U, method);
}

Mat half_power(const FrozenSpectrum& spec, double p) {
  return spec.matrix(spec.map([p](cplx l) { return std::pow(l, p); }), CoordinateKind::primal);
}

double square_root_property_check(const NonAutonomousForm& form, const std::vector<double>& grid) {
  if (grid.empty()) fail(ErrorCode::EmptyGrid, "square_root_property_check needs times");
  const Geometry& g = form.geometry();
  double sigma = 0.0;
  for (double t : grid) {
    const FrozenSpectrum s = frozen_spectrum(form, t);
    for (Eigen::Index k = 0; k < s.lambda.size(); ++k)
      if (!(s.lambda(k).real() > 0.0)) fail(ErrorCode::NotCoercive, "square root needs a coercive form");
    sigma = std::max(sigma, g.operator_norm(half_power(s, 0.5), Space::V, Space::H));
    sigma = std::max(sigma, g.operator_norm(half_power(s, -0.5), Space::H, Space::V));
  }
  return sigma;
}

std::vector<cplx> default_lambda_samples(double sector, int per_decade) {
  std::vector<cplx> out;
  const int n = 6 * per_decade;
  for (int k = 1; k <= 3; ++k) {
    const double ang = sector + k * (kPi - sector) / 3.0;
    for (int sgn : {+1, -1}) {
      if (k == 3 && sgn < 0) continue;
      for (int j = 0; j <= n; ++j) {
        const double r = std::pow(10.0, -2.0 + 6.0 * j / n);
        out.push_back(std::polar(r, sgn * ang));
      }
    }
  }
  return out;
}

std::vector<double> default_s_samples(double horizon, int per_decade) {
  std::vector<double> out;
  const double lo = std::log10(1e-3), hi = std::log10(horizon);
  const int n = std::max(1, static_cast<int>(std::ceil((hi - lo) * per_decade)));
  for (int j = 0; j <= n; ++j) out.push_back(std::pow(10.0, lo + (hi - lo) * j / n));
  out.back() = horizon;
  return out;
}

EstimateSuiteReport resolvent_estimate_suite(const NonAutonomousForm& form, const std::vector<double>& grid,
                                             const std::vector<cplx>& lambda_samples,
                                             const std::vector<double>& s_samples) {
  if (grid.empty()) fail(ErrorCode::EmptyGrid, "estimate suite needs times");
  const Geometry& g = form.geometry();
  const double gam = form.gamma();
  EstimateSuiteReport rep;
  rep.lambda_samples = lambda_samples;
  rep.s_samples = s_samples;
  const char* labels[11] = {"(1+|l|)^(1-g/2) |R|_{V'_g,H}", "(1+|l|) |R|_{V}",
                            "(1+|l|)^(1/2) |R|_{H,V}",      "(1+|l|)^(1/2) |R|_{V',H}",
                            "|R|_{V',V}",                    "(1+|l|)^((1-g)/2) |R|_{V'_g,V}",
                            "s |e^{-sA}|_{V',V}",            "s^(g/2) |e^{-sA}|_{V'_g,H}",
                            "s^((1+g)/2) |e^{-sA}|_{V'_g,V}", "s |A e^{-sA}|_{H}",
                            "|e^{-sA}|_{V}"};
  for (int i = 0; i < 11; ++i) {
    rep.items[static_cast<size_t>(i)].id = i + 1;
    rep.items[static_cast<size_t>(i)].label = labels[i];
  }
  auto update = [&](int id, double value, cplx lam, double s, double t) {
    EstimateItem& it = rep.items[static_cast<size_t>(id - 1)];
    if (!(value <= it.constant)) {
      it.constant = value;
      it.argmax_lambda = lam;
      it.argmax_s = s;
      it.argmax_t = t;
    }
  };
  const int n = form.dim();
  const Mat I = Mat::Identity(n, n);
  for (double t : grid) {
    const FrozenSpectrum sp = frozen_spectrum(form, t);
    const double sector = numerical_range_angle(form, t);
    for (cplx lam : lambda_samples) {
      if (lam != cplx(0.0) && std::abs(std::arg(lam)) <= sector + 1e-12) {
        std::ostringstream os;
        os << "sample lambda = " << lam << " lies in the sector of half-angle " << sector;
        fail(ErrorCode::LambdaInSector, os.str());
      }
      const Vec f = sp.map([lam](cplx l) { return 1.0 / (lam - l); });
      const Mat Ra = sp.matrix(f, CoordinateKind::action);
      const Mat Rp = sp.matrix(f, CoordinateKind::primal);
      const double a = 1.0 + std::abs(lam);
      update(1, std::pow(a, 1 - gam / 2) * g.operator_norm(Ra, Space::Vgamma_dual, Space::H), lam, 0, t);
      update(2, a * g.operator_norm(Rp, Space::V, Space::V), lam, 0, t);
      update(3, std::sqrt(a) * g.operator_norm(Rp, Space::H, Space::V), lam, 0, t);
      update(4, std::sqrt(a) * g.operator_norm(Ra, Space::Vdual, Space::H), lam, 0, t);
      update(5, g.operator_norm(Ra, Space::Vdual, Space::V), lam, 0, t);
      update(6, std::pow(a, (1 - gam) / 2) * g.operator_norm(Ra, Space::Vgamma_dual, Space::V), lam, 0, t);
    }
    const Mat A = form.at(t);
    const Mat& L = form.triple().chol_H();
    for (double s : s_samples) {
      const Mat Ea = semigroup_apply(form, t, s, I, CoordinateKind::action);
      const Mat Ep = Ea * form.triple().gram_H();
      const Mat AEp = L.adjoint().triangularView<Eigen::Upper>().solve(lower_solve(L, A * Ep));
      update(7, s * g.operator_norm(Ea, Space::Vdual, Space::V), 0, s, t);
      update(8, std::pow(s, gam / 2) * g.operator_norm(Ea, Space::Vgamma_dual, Space::H), 0, s, t);
      update(9, std::pow(s, (1 + gam) / 2) * g.operator_norm(Ea, Space::Vgamma_dual, Space::V), 0, s, t);
      update(10, s * g.operator_norm(AEp, Space::H, Space::H), 0, s, t);
      update(11, g.operator_norm(Ep, Space::V, Space::V), 0, s, t);
    }
    const Vec m = sp.map([](cplx l) { return 1.0 / std::sqrt(l); });
    rep.kappa = std::max(rep.kappa, g.operator_norm(sp.matrix(m, CoordinateKind::action), Space::Vdual, Space::H));
    rep.c0 = std::max(rep.c0, g.operator_norm(sp.matrix(m, CoordinateKind::primal), Space::V, Space::V));
  }
  return rep;
}

SqrtHolderReport sqrt_holder_suite(const NonAutonomousForm& form, const std::vector<std::pair<double, double>>& pairs,
                                   const DiniModulus& modulus) {
  struct Roots {
    Mat inv_action, inv_primal, root;
  };
  std::map<double, Roots> cache;
  auto roots = [&](double t) -> const Roots& {
    auto it = cache.find(t);
    if (it != cache.end()) return it->second;
    const FrozenSpectrum s = frozen_spectrum(form, t);
    for (Eigen::Index k = 0; k < s.lambda.size(); ++k)
      if (!(s.lambda(k).real() > 0.0)) fail(ErrorCode::NotCoercive, "square roots need a coercive form");
    const Vec m = s.map([](cplx l) { return 1.0 / std::sqrt(l); });
    Roots r{s.matrix(m, CoordinateKind::action), s.matrix(m, CoordinateKind::primal), half_power(s, 0.5)};
    return cache.emplace(t, std::move(r)).first->second;
  };
  const Geometry& g = form.geometry();
  SqrtHolderReport rep;
  for (const auto& [t, s] : pairs) {
    SqrtHolderRow row;
    row.t = t;
    row.s = s;
    row.omega = modulus.at(std::abs(t - s));
    const Roots& a = roots(t);
    const Roots& b = roots(s);
    row.difference[0] = g.operator_norm(a.inv_action - b.inv_action, Space::Vdual, Space::H);
    row.difference[1] = g.operator_norm(a.inv_primal - b.inv_primal, Space::H, Space::V);
    row.difference[2] = g.operator_norm(a.root - b.root, Space::V, Space::H);
    for (size_t k = 0; k < 3; ++k) {
      row.ratio[k] = row.omega > 0.0 ? row.difference[k] / row.omega : 0.0;
      rep.max_ratio[k] = std::max(rep.max_ratio[k], row.ratio[k]);
      rep.max_difference[k] = std::max(rep.max_difference[k], row.difference[k]);
    }
    rep.rows.push_back(row);
  }
  return rep;
}

} // namespace evolab
