#include "evolab/form_family.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "evolab/error.hpp"
#include "evolab/robin_heat.hpp"

namespace evolab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool term_hermitian(const AffineTerm& term) { return is_hermitian(term.left * term.right.adjoint()); }

/// index j with grid[j] = x within tol, or -1
long find_node(const std::vector<double>& grid, double x, double tol) {
  auto it = std::lower_bound(grid.begin(), grid.end(), x - tol);
  if (it != grid.end() && std::abs(*it - x) <= tol) return static_cast<long>(it - grid.begin());
  return -1;
}

} // namespace

NonAutonomousForm::NonAutonomousForm(GelfandTriple triple, double horizon, double gamma, Mat base,
                                     std::vector<AffineTerm> terms)
    : horizon_(horizon), gamma_(gamma), base_(std::move(base)), terms_(std::move(terms)) {
  if (!(horizon > 0.0)) fail(ErrorCode::ConfigError, "horizon must be positive");
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    std::ostringstream os;
    os << "form gamma = " << gamma << " not in [0, 1)";
    fail(ErrorCode::GammaOutOfRange, os.str());
  }
  const int n = triple.dim();
  if (base_.rows() != n || base_.cols() != n) fail(ErrorCode::DimensionMismatch, "base matrix size");
  geometry_ = std::make_shared<const Geometry>(std::move(triple), gamma);
  hermitian_ = is_hermitian(base_, 1e-12);
  for (const auto& term : terms_) {
    if (term.left.rows() != n || term.right.rows() != n || term.left.cols() != term.right.cols())
      fail(ErrorCode::DimensionMismatch, "term '" + term.label + "' factor sizes");
    if (!term.coefficient) fail(ErrorCode::ConfigError, "term '" + term.label + "' has no coefficient");
    hermitian_ = hermitian_ && term_hermitian(term);
  }
}

Mat NonAutonomousForm::at(double t) const {
  Mat A = base_;
  if (shift_ != 0.0) A += shift_ * triple().gram_H();
  for (const auto& term : terms_) {
    const double c = term.coefficient(t);
    if (c != 0.0) A.noalias() += c * (term.left * term.right.adjoint());
  }
  return A;
}

Mat NonAutonomousForm::difference(double t, double s) const {
  Mat D = Mat::Zero(dim(), dim());
  for (const auto& term : terms_) {
    const double dc = term.coefficient(t) - term.coefficient(s);
    if (dc != 0.0) D.noalias() += dc * (term.left * term.right.adjoint());
  }
  return D;
}

std::vector<double> NonAutonomousForm::kinks() const {
  std::vector<double> k;
  for (const auto& term : terms_) k.insert(k.end(), term.kinks.begin(), term.kinks.end());
  std::sort(k.begin(), k.end());
  k.erase(std::unique(k.begin(), k.end()), k.end());
  return k;
}

NonAutonomousForm shift(const NonAutonomousForm& form, double mu) {
  NonAutonomousForm out = form;
  out.shift_ += mu;
  return out;
}

double numerical_range_angle(const NonAutonomousForm& form, double t) {
  const Mat& L = form.triple().chol_H();
  const Mat B = solve_right_adjoint(lower_solve(L, form.at(t)), L);
  const Mat Hm = hermitian_part(B);
  RVec h = Eigen::SelfAdjointEigenSolver<Mat>(Hm, Eigen::EigenvaluesOnly).eigenvalues();
  if (!(h(0) > 1e-14 * h.cwiseAbs().maxCoeff())) return kPi / 2;
  const Mat S = skew_part(B);
  if (S.cwiseAbs().maxCoeff() == 0.0) return 0.0;
  const RVec r = pencil_eigenvalues(S, Hm);
  return std::atan(r.cwiseAbs().maxCoeff());
}

FormBounds estimate_bounds(const NonAutonomousForm& form, const std::vector<double>& grid) {
  if (grid.empty()) fail(ErrorCode::EmptyGrid, "estimate_bounds needs at least one time");
  FormBounds b;
  b.alpha = kInf;
  b.lambda_min_H = kInf;
  const Geometry& g = form.geometry();
  for (double t : grid) {
    const Mat A = form.at(t);
    b.M = std::max(b.M, g.operator_norm(A, Space::V, Space::Vdual));
    const Mat Hp = hermitian_part(A);
    b.alpha = std::min(b.alpha, pencil_eigenvalues(Hp, form.triple().gram_V())(0));
    b.lambda_min_H = std::min(b.lambda_min_H, pencil_eigenvalues(Hp, form.triple().gram_H())(0));
    b.sector_H = std::max(b.sector_H, numerical_range_angle(form, t));
  }
  b.coercive = b.alpha > 0.0;
  b.theta = b.coercive ? kPi / 2 - std::atan(b.M / b.alpha) : kPi / 2;
  return b;
}

double coercive_shift_amount(const FormBounds& bounds) {
  if (bounds.coercive) return 0.0;
  return std::max(0.0, -2.0 * bounds.lambda_min_H) + 1.0;
}

DifferenceNorm::DifferenceNorm(const NonAutonomousForm& form, Space from, Space to) : form_(&form) {
  const Geometry& g = form.geometry();
  const int n = form.dim();
  Eigen::Index total = 0;
  for (const auto& term : form.terms()) {
    offsets_.push_back(total);
    total += term.left.cols();
  }
  offsets_.push_back(total);
  if (total == 0) return;
  Mat U(n, total), W(n, total);
  for (size_t b = 0; b < form.terms().size(); ++b) {
    const auto& term = form.terms()[b];
    U.middleCols(offsets_[b], term.left.cols()) = term.left;
    W.middleCols(offsets_[b], term.right.cols()) = term.right;
  }
  // K C_from^{-1} = U (C_from^{-*} W)^*
  const Mat& Lf = g.chol(from);
  Mat Wt = kind_of(from) == CoordinateKind::primal ? lower_solve(Lf, W) : Mat(Lf.adjoint() * W);
  Mat Ut = g.apply_factor(U, to);
  const Eigen::Index r = std::min<Eigen::Index>(n, total);
  Eigen::HouseholderQR<Mat> qu(Ut), qw(Wt);
  RU_ = qu.matrixQR().topRows(r).triangularView<Eigen::Upper>();
  RW_ = qw.matrixQR().topRows(r).triangularView<Eigen::Upper>();
}

double DifferenceNorm::operator()(const RVec& dc) const {
  if (RU_.size() == 0) return 0.0;
  Mat D = RU_;
  for (size_t b = 0; b + 1 < offsets_.size(); ++b)
    D.middleCols(offsets_[b], offsets_[b + 1] - offsets_[b]) *= dc(static_cast<Eigen::Index>(b));
  return spectral_norm(D * RW_.adjoint());
}

double DifferenceNorm::operator()(double t, double s) const {
  RVec dc(form_->terms().size());
  for (size_t b = 0; b < form_->terms().size(); ++b)
    dc(static_cast<Eigen::Index>(b)) = form_->terms()[b].coefficient(t) - form_->terms()[b].coefficient(s);
  return (*this)(dc);
}

std::vector<double> dyadic_lags(double horizon, int levels) {
  std::vector<double> lags;
  for (int k = levels; k >= 0; --k) lags.push_back(std::ldexp(horizon, -k));
  return lags;
}

std::vector<double> uniform_grid(double a, double b, int intervals) {
  std::vector<double> g(static_cast<size_t>(intervals) + 1);
  for (int k = 0; k <= intervals; ++k) g[static_cast<size_t>(k)] = a + (b - a) * k / intervals;
  g.back() = b;
  return g;
}

bool DiniModulus::vanishing() const {
  return std::all_of(values.begin(), values.end(), [](double v) { return v == 0.0; });
}

double DiniModulus::delta0_for(double eps) const {
  if (vanishing()) return 0.0;
  double d0 = 0.0;
  for (size_t k = 0; k < lags.size(); ++k)
    if (tail[k] < eps) d0 = lags[k];
  return d0;
}

double DiniModulus::at(double delta) const {
  for (size_t k = 0; k < lags.size(); ++k)
    if (std::abs(lags[k] - delta) <= 1e-9 * std::max(1.0, delta)) return values[k];
  if (vanishing()) return 0.0;
  return fit_C * std::pow(delta, fit_q);
}

DiniModulus make_modulus(std::vector<double> lags, std::vector<double> values, double gamma, double horizon) {
  if (lags.empty() || lags.size() != values.size()) fail(ErrorCode::InsufficientGrid, "modulus needs lags");
  DiniModulus m;
  m.lags = std::move(lags);
  m.values = std::move(values);
  m.gamma = gamma;
  m.horizon = horizon;
  m.tail.assign(m.lags.size(), 0.0);
  if (m.vanishing()) {
    m.fit_q = kInf;
    return m;
  }
  // least squares in log-log on the positive samples
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int cnt = 0;
  for (size_t k = 0; k < m.lags.size(); ++k) {
    if (m.values[k] <= 0.0) continue;
    const double x = std::log(m.lags[k]), y = std::log(m.values[k]);
    sx += x, sy += y, sxx += x * x, sxy += x * y;
    ++cnt;
  }
  if (cnt >= 2) {
    const double den = cnt * sxx - sx * sx;
    m.fit_q = (cnt * sxy - sx * sy) / den;
    m.fit_C = std::exp((sy - m.fit_q * sx) / cnt);
  } else {
    m.fit_q = 1.0;
    m.fit_C = std::exp(sy) / std::exp(sx);
  }
  const double h = gamma / 2;
  const double d0 = m.lags.front();
  double tail = m.fit_q > h ? m.fit_C * std::pow(d0, m.fit_q - h) / (m.fit_q - h) : kInf;
  double sq = 2 * m.fit_q > gamma ? m.fit_C * m.fit_C * std::pow(d0, 2 * m.fit_q - gamma) / (2 * m.fit_q - gamma)
                                  : kInf;
  m.tail[0] = tail;
  m.sup_ratio = 0.0;
  for (size_t k = 0; k < m.lags.size(); ++k) {
    m.sup_ratio = std::max(m.sup_ratio, m.values[k] / std::pow(m.lags[k], h));
    if (k == 0) continue;
    const double dl = std::log(m.lags[k] / m.lags[k - 1]);
    const double g0 = m.values[k - 1] / std::pow(m.lags[k - 1], h);
    const double g1 = m.values[k] / std::pow(m.lags[k], h);
    const double q0 = m.values[k - 1] * m.values[k - 1] / std::pow(m.lags[k - 1], gamma);
    const double q1 = m.values[k] * m.values[k] / std::pow(m.lags[k], gamma);
    tail += 0.5 * (g0 + g1) * dl;
    sq += 0.5 * (q0 + q1) * dl;
    m.tail[k] = tail;
  }
  if (!(m.fit_q > h)) m.sup_ratio = kInf;
  m.dini_integral = tail;
  m.square_integral = sq;
  return m;
}

DiniModulus estimate_dini_modulus(const NonAutonomousForm& form, const std::vector<double>& lags,
                                  const std::vector<double>& grid_in) {
  if (lags.empty()) fail(ErrorCode::InsufficientGrid, "no lags requested");
  std::vector<double> grid = grid_in;
  std::sort(grid.begin(), grid.end());
  const double T = form.horizon();
  const double tol = 1e-12 * std::max(1.0, T);
  std::vector<double> sorted_lags = lags;
  std::sort(sorted_lags.begin(), sorted_lags.end());
  for (double d : sorted_lags)
    if (!(d > 0.0 && d <= T * (1 + 1e-12))) {
      std::ostringstream os;
      os << "lag " << d << " outside (0, T]";
      fail(ErrorCode::InsufficientGrid, os.str());
    }
  const size_t B = form.terms().size();
  Eigen::MatrixXd C(static_cast<Eigen::Index>(grid.size()), static_cast<Eigen::Index>(std::max<size_t>(B, 1)));
  for (size_t i = 0; i < grid.size(); ++i)
    for (size_t b = 0; b < B; ++b) C(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(b)) = form.terms()[b].coefficient(grid[i]);
  const DifferenceNorm dn(form, Space::V, Space::Vgamma_dual);
  std::vector<double> values(sorted_lags.size(), 0.0);
  for (size_t k = 0; k < sorted_lags.size(); ++k) {
    bool found = false;
    for (size_t i = 0; i < grid.size(); ++i) {
      const long j = find_node(grid, grid[i] + sorted_lags[k], tol);
      if (j < 0) continue;
      found = true;
      if (B == 0) continue;
      const RVec dc = (C.row(j) - C.row(static_cast<Eigen::Index>(i))).transpose();
      values[k] = std::max(values[k], dn(dc));
    }
    if (!found) {
      std::ostringstream os;
      os << "no pair of grid times at lag " << sorted_lags[k];
      fail(ErrorCode::InsufficientGrid, os.str());
    }
  }
  return make_modulus(sorted_lags, values, form.gamma(), T);
}

DiniModulus default_dini_modulus(const NonAutonomousForm& form) {
  constexpr int levels = 12;
  return estimate_dini_modulus(form, dyadic_lags(form.horizon(), levels),
                               uniform_grid(0.0, form.horizon(), 1 << levels));
}

DiniReport verify_dini(const DiniModulus& m) {
  DiniReport r;
  r.q = m.fit_q;
  r.gamma = m.gamma;
  const bool ok = m.vanishing() || m.fit_q > m.gamma / 2;
  r.sup_finite = ok;
  r.integral_finite = ok;
  r.sup_ratio = m.sup_ratio;
  r.dini_integral = m.dini_integral;
  r.square_integral = m.square_integral;
  for (double eps : {1e-1, 1e-2, 1e-3, 1e-4}) r.delta0_table[eps] = m.delta0_for(eps);
  return r;
}

void require_dini(const NonAutonomousForm& form) {
  if (form.autonomous()) return;
  const DiniReport r = verify_dini(default_dini_modulus(form));
  if (!r.integral_finite) {
    std::ostringstream os;
    os << "fitted modulus exponent q = " << r.q << " does not exceed gamma/2 = " << r.gamma / 2;
    fail(ErrorCode::DiniViolated, os.str());
  }
}

namespace {

double number_at(const json& j, const std::string& key, double fallback, bool required = false) {
  if (!j.contains(key)) {
    if (required) fail(ErrorCode::ConfigError, "key '" + key + "' missing");
    return fallback;
  }
  if (!j[key].is_number()) fail(ErrorCode::ConfigError, "key '" + key + "' must be a number");
  return j[key].get<double>();
}

NonAutonomousForm scalar_form_from_json(const json& j) {
  const double a0 = number_at(j, "a0", 1.0);
  const double gH = number_at(j, "gram_H", 1.0);
  const double gV = number_at(j, "gram_V", 1.0);
  const double T = number_at(j, "T", 1.0);
  const double gamma = number_at(j, "gamma", 0.0);
  std::vector<AffineTerm> terms;
  std::ostringstream desc;
  desc << "scalar a(t) = " << a0;
  if (j.contains("terms")) {
    if (!j["terms"].is_array()) fail(ErrorCode::ConfigError, "key 'terms' must be an array");
    for (const auto& tj : j["terms"]) {
      const double c = number_at(tj, "c", 0.0, true);
      const double p = number_at(tj, "power", 1.0);
      if (!(p > 0.0)) fail(ErrorCode::ConfigError, "key 'power' must be positive");
      AffineTerm term;
      std::ostringstream lab;
      lab << c << " t^" << p;
      term.label = lab.str();
      term.coefficient = [c, p](double t) { return c * std::pow(std::max(t, 0.0), p); };
      term.left = Mat::Ones(1, 1);
      term.right = Mat::Ones(1, 1);
      if (p != 1.0) term.kinks = {0.0};
      terms.push_back(term);
      desc << " + " << term.label;
    }
  }
  NonAutonomousForm f(make_triple(Mat::Constant(1, 1, gH), Mat::Constant(1, 1, gV)), T, gamma,
                      Mat::Constant(1, 1, a0), std::move(terms));
  f.description = desc.str();
  return f;
}

NonAutonomousForm tabulated_form_from_json(const json& j) {
  if (!j.contains("dim") || !j["dim"].is_number_integer() || j["dim"].get<int>() <= 0)
    fail(ErrorCode::ConfigError, "key 'dim' missing or not a positive integer");
  const int n = j["dim"].get<int>();
  for (const char* key : {"gram_H", "gram_V", "times", "matrices"})
    if (!j.contains(key)) fail(ErrorCode::ConfigError, std::string("key '") + key + "' missing");
  GelfandTriple triple = make_triple(matrix_from_json(j["gram_H"], n, "gram_H"), matrix_from_json(j["gram_V"], n, "gram_V"));
  if (!j["times"].is_array() || !j["matrices"].is_array() || j["times"].size() != j["matrices"].size() ||
      j["times"].empty())
    fail(ErrorCode::ConfigError, "key 'times' and key 'matrices' must be arrays of equal nonzero length");
  std::vector<double> times;
  for (const auto& t : j["times"]) {
    if (!t.is_number()) fail(ErrorCode::ConfigError, "key 'times' must hold numbers");
    times.push_back(t.get<double>());
  }
  for (size_t k = 1; k < times.size(); ++k)
    if (!(times[k] > times[k - 1])) fail(ErrorCode::ConfigError, "key 'times' must be strictly increasing");
  const double T = number_at(j, "T", times.back());
  const double gamma = number_at(j, "gamma", 0.0);
  std::vector<AffineTerm> terms;
  const size_t K = times.size();
  for (size_t k = 0; k < K; ++k) {
    AffineTerm term;
    term.label = "hat" + std::to_string(k);
    term.left = matrix_from_json(j["matrices"][k], n, "matrices");
    if (term.left.cols() != n) fail(ErrorCode::ConfigError, "key 'matrices' entries must be dim x dim");
    term.right = Mat::Identity(n, n);
    term.kinks = times;
    term.coefficient = [times, k, K](double t) {
      if (K == 1) return 1.0;
      if (t <= times.front()) return k == 0 ? 1.0 : 0.0;
      if (t >= times.back()) return k == K - 1 ? 1.0 : 0.0;
      const size_t m = static_cast<size_t>(std::upper_bound(times.begin(), times.end(), t) - times.begin()) - 1;
      const double w = (t - times[m]) / (times[m + 1] - times[m]);
      if (k == m) return 1.0 - w;
      if (k == m + 1) return w;
      return 0.0;
    };
    terms.push_back(std::move(term));
  }
  NonAutonomousForm f(std::move(triple), T, gamma, Mat::Zero(n, n), K == 1 ? std::vector<AffineTerm>{} : std::move(terms));
  if (K == 1) f = NonAutonomousForm(f.triple(), T, gamma, matrix_from_json(j["matrices"][0], n, "matrices"));
  f.description = "piecewise-linear tabulated form, " + std::to_string(K) + " nodes";
  return f;
}

} // namespace

NonAutonomousForm form_from_json(const json& j) {
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string())
    fail(ErrorCode::ConfigError, "key 'kind' missing or not a string");
  const std::string kind = j["kind"].get<std::string>();
  if (kind == "scalar") return scalar_form_from_json(j);
  if (kind == "matrix-tabulated") return tabulated_form_from_json(j);
  if (kind == "robin1d") return robin_form(robin_problem_from_json(j));
  fail(ErrorCode::ConfigError, "key 'kind' has unknown value '" + kind + "'");
}

} // namespace evolab
