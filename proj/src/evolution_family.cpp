#include "evolab/evolution_family.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#include <Eigen/SparseLU>

#include "evolab/error.hpp"
#include "evolab/operator_calculus.hpp"

namespace evolab {

TimeGrid uniform_time_grid(double a, double b, int intervals) {
  if (intervals < 1 || !(b > a)) fail(ErrorCode::EmptyGrid, "uniform grid needs b > a and at least one interval");
  TimeGrid g;
  g.grading = "uniform";
  g.anchor = a;
  for (int k = 0; k <= intervals; ++k) g.nodes.push_back(k == intervals ? b : a + (b - a) * k / intervals);
  return g;
}

TimeGrid geometric_time_grid(double s, double T, int levels, double ratio) {
  if (levels < 0 || !(T > s) || !(ratio > 0.0 && ratio < 1.0))
    fail(ErrorCode::EmptyGrid, "geometric grid needs T > s, levels >= 0 and ratio in (0, 1)");
  TimeGrid g;
  g.grading = "geometric";
  g.anchor = s;
  g.nodes.push_back(s);
  for (int k = levels; k >= 0; --k) g.nodes.push_back(k == 0 ? T : s + (T - s) * std::pow(ratio, k));
  return g;
}

namespace {

using SpMat = Eigen::SparseMatrix<cplx>;

SpMat to_sparse(const Mat& M) {
  std::vector<Eigen::Triplet<cplx>> trip;
  for (Eigen::Index c = 0; c < M.cols(); ++c)
    for (Eigen::Index r = 0; r < M.rows(); ++r)
      if (M(r, c) != cplx(0.0)) trip.emplace_back(static_cast<int>(r), static_cast<int>(c), M(r, c));
  SpMat S(M.rows(), M.cols());
  S.setFromTriplets(trip.begin(), trip.end());
  return S;
}

/// G_H and A_form(t) in a form suited to many solves.
class Integrator {
public:
  explicit Integrator(const NonAutonomousForm& form) : form_(form), dense_(form.dim() <= 16) {
    const Mat& G = form.triple().gram_H();
    Gd_ = G;
    Mat B0 = form.base();
    if (form.shift() != 0.0) B0 += form.shift() * G;
    B0d_ = B0;
    if (!dense_) {
      G_ = to_sparse(G);
      B0_ = to_sparse(B0);
      for (const auto& term : form.terms()) T_.push_back(to_sparse(term.left * term.right.adjoint()));
    }
  }

  Mat apply(double t, const Mat& u) const {
    Mat out = dense_ ? Mat(B0d_ * u) : Mat(B0_ * u);
    for (const auto& term : form_.terms()) {
      const double c = term.coefficient(t);
      if (c != 0.0) out.noalias() += c * (term.left * (term.right.adjoint() * u));
    }
    return out;
  }
  Mat gram(const Mat& u) const { return dense_ ? Mat(Gd_ * u) : Mat(G_ * u); }

  /// (G_H + k A(t)) out = rhs; false when the matrix is numerically singular
  bool solve(double t, double k, const Mat& rhs, Mat& out) const {
    if (dense_) {
      Mat M = Gd_ + k * form_.at(t);
      Eigen::PartialPivLU<Mat> lu(M);
      if (!(lu.rcond() > 1e-14)) return false;
      out = lu.solve(rhs);
    } else {
      SpMat M = G_ + k * B0_;
      size_t b = 0;
      for (const auto& term : form_.terms()) {
        const double c = term.coefficient(t);
        if (c != 0.0) M += (k * c) * T_[b];
        ++b;
      }
      M.makeCompressed();
      Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu;
      lu.compute(M);
      if (lu.info() != Eigen::Success) return false;
      out = lu.solve(rhs);
      if (lu.info() != Eigen::Success) return false;
    }
    return out.allFinite();
  }

private:
  const NonAutonomousForm& form_;
  bool dense_;
  Mat Gd_, B0d_;
  SpMat G_, B0_;
  std::vector<SpMat> T_;
};

double lambda_hi(const NonAutonomousForm& form, double s) {
  const Mat& L = form.triple().chol_H();
  return spectral_norm(solve_right_adjoint(lower_solve(L, form.at(s)), L));
}

/// states at times[want[k]]
std::vector<Mat> integrate(const Integrator& integ, const std::vector<double>& times, const Mat& X,
                           const std::function<Vec(double)>* f, Scheme scheme, const std::vector<size_t>& want,
                           int& fallbacks) {
  const double theta = scheme == Scheme::crank_nicolson ? 0.5 : 1.0;
  std::vector<Mat> out;
  out.reserve(want.size());
  size_t w = 0;
  Mat u = X;
  while (w < want.size() && want[w] == 0) {
    out.push_back(u);
    ++w;
  }
  Vec f_prev;
  if (f) f_prev = (*f)(times[0]);
  for (size_t k = 0; k + 1 < times.size(); ++k) {
    const double t0 = times[k], t1 = times[k + 1], h = t1 - t0;
    Vec f_next;
    if (f) f_next = (*f)(t1);
    Mat next;
    bool ok = false;
    if (theta < 1.0) {
      Mat rhs = integ.gram(u) - (1.0 - theta) * h * integ.apply(t0, u);
      if (f) rhs.col(0) += h * ((1.0 - theta) * f_prev + theta * f_next);
      ok = integ.solve(t1, theta * h, rhs, next);
      if (!ok) ++fallbacks;
    }
    if (!ok) {
      Mat rhs = integ.gram(u);
      if (f) rhs.col(0) += h * f_next;
      if (!integ.solve(t1, h, rhs, next)) {
        std::ostringstream os;
        os << "step " << t0 << " -> " << t1 << " is singular for both schemes";
        fail(ErrorCode::SingularStep, os.str());
      }
    }
    u = std::move(next);
    if (f) f_prev = std::move(f_next);
    while (w < want.size() && want[w] == k + 1) {
      out.push_back(u);
      ++w;
    }
  }
  return out;
}

Trajectory run_stepper(const NonAutonomousForm& form, double s, const Mat& X, const std::function<Vec(double)>* f,
                       std::vector<double> outputs, const StepOptions& opt) {
  const double T = form.horizon();
  std::sort(outputs.begin(), outputs.end());
  const double tol = 1e-13 * std::max(1.0, T);
  if (!outputs.empty() && (outputs.front() <= s - tol || outputs.back() > T + tol))
    fail(ErrorCode::ConfigError, "stepper outputs must lie in [s, T]");
  Trajectory traj;
  traj.s = s;
  traj.initial = X;
  if (outputs.empty()) return traj;
  const std::vector<double> times = step_times(s, outputs, T, lambda_hi(form, s), opt);
  std::vector<size_t> want;
  if (opt.record_all && !opt.richardson) {
    for (size_t k = 1; k < times.size(); ++k) want.push_back(k);
  } else {
    size_t k = 0;
    for (double o : outputs) {
      if (std::abs(o - s) <= tol) {
        want.push_back(0);
        continue;
      }
      while (k < times.size() && std::abs(times[k] - o) > tol) ++k;
      want.push_back(k);
    }
  }
  const Integrator integ(form);
  int fb = 0;
  std::vector<Mat> coarse = integrate(integ, times, X, f, opt.scheme, want, fb);
  for (size_t w : want) traj.times.push_back(times[w]);
  if (opt.richardson) {
    std::vector<double> fine;
    for (size_t k = 0; k + 1 < times.size(); ++k) {
      fine.push_back(times[k]);
      fine.push_back(0.5 * (times[k] + times[k + 1]));
    }
    fine.push_back(times.back());
    std::vector<size_t> want_f;
    for (size_t w : want) want_f.push_back(2 * w);
    std::vector<Mat> f_states = integrate(integ, fine, X, f, opt.scheme, want_f, fb);
    const double p = opt.scheme == Scheme::crank_nicolson ? 2.0 : 1.0;
    const double q = std::pow(2.0, p);
    for (size_t k = 0; k < coarse.size(); ++k) {
      if (want[k] == 0) continue;
      coarse[k] = (q * f_states[k] - coarse[k]) / (q - 1.0);
    }
  }
  traj.states = std::move(coarse);
  traj.fallback_steps = fb;
  return traj;
}

} // namespace

std::vector<double> step_times(double s, const std::vector<double>& outputs, double horizon, double lam_hi,
                               const StepOptions& opt) {
  const double hmax = opt.max_step > 0.0 ? opt.max_step : horizon / 256.0;
  double h = hmax;
  if (opt.graded)
    h = opt.first_step > 0.0 ? opt.first_step : std::min(1e-7 * horizon, 0.1 / std::max(lam_hi, 1e-300));
  h = std::min(h, hmax);
  const double tol = 1e-13 * std::max(1.0, horizon);
  std::vector<double> times{s};
  double t = s;
  std::vector<double> outs = outputs;
  std::sort(outs.begin(), outs.end());
  for (double o : outs) {
    while (o - t > tol) {
      const double rem = o - t;
      double step = h;
      if (rem <= h)
        step = rem;
      else if (rem < 2.0 * h)
        step = 0.5 * rem;
      t = step == rem ? o : t + step;
      times.push_back(t);
      if (opt.graded) h = std::min(h * opt.growth, hmax);
    }
  }
  return times;
}

Trajectory step_solve(const NonAutonomousForm& form, double s, const Mat& X, const std::vector<double>& outputs,
                      const StepOptions& options) {
  return run_stepper(form, s, X, nullptr, outputs, options);
}

Trajectory step_solve_forced(const NonAutonomousForm& form, double s, const Vec& x,
                             const std::function<Vec(double)>& f, const std::vector<double>& outputs,
                             const StepOptions& options) {
  return run_stepper(form, s, Mat(x), &f, outputs, options);
}

Mat u1_apply(const NonAutonomousForm& form, double t, double s, const Mat& X) {
  if (!(t > s)) fail(ErrorCode::ConfigError, "U_1(t, s) needs t > s");
  return semigroup_apply(form, t, t - s, X, CoordinateKind::primal);
}

Trajectory p_apply(const NonAutonomousForm& form, double s, const std::function<Mat(double)>& h,
                   const std::vector<double>& outputs, const VolterraOptions& options) {
  if (!form.autonomous()) require_dini(form);
  const VolterraDiscretization disc(form, s, outputs, options);
  std::vector<Mat> samples;
  samples.reserve(disc.nodes().size());
  for (double tau : disc.nodes()) samples.push_back(h(tau));
  const std::vector<Mat> ph = disc.apply(samples);
  Trajectory traj;
  traj.s = s;
  traj.initial = samples.front();
  for (size_t k = 0; k < disc.outputs().size(); ++k) {
    traj.times.push_back(disc.outputs()[k]);
    traj.states.push_back(ph[static_cast<size_t>(disc.output_index()[k])]);
  }
  return traj;
}

namespace {

/// standard normals from a fixed generator, independent of the library's distributions
class Normal {
public:
  explicit Normal(std::uint64_t seed) : rng_(seed) {}
  double operator()() {
    if (has_) {
      has_ = false;
      return spare_;
    }
    const double u1 = (static_cast<double>(rng_() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * kPi * u2);
    has_ = true;
    return r * std::cos(2.0 * kPi * u2);
  }

private:
  std::mt19937_64 rng_;
  double spare_ = 0.0;
  bool has_ = false;
};

double probe_estimate(const VolterraDiscretization& d, int probes, std::uint64_t seed) {
  Normal normal(seed);
  const int n = d.form().dim();
  std::vector<double> knots{d.start()};
  for (double t : d.outputs())
    if (t > knots.back()) knots.push_back(t);
  const std::vector<double>& nodes = d.nodes();
  double best = 0.0;
  for (int p = 0; p < probes; ++p) {
    std::vector<Vec> vals(knots.size(), Vec(n));
    for (auto& v : vals)
      for (int k = 0; k < n; ++k) v(k) = cplx(normal(), normal());
    std::vector<Mat> h(nodes.size());
    size_t seg = 0;
    for (size_t i = 0; i < nodes.size(); ++i) {
      const double tau = nodes[i];
      while (seg + 2 < knots.size() && tau > knots[seg + 1]) ++seg;
      if (knots.size() == 1) {
        h[i] = vals[0];
        continue;
      }
      const double a = knots[seg], b = knots[seg + 1];
      const double w = std::clamp((tau - a) / (b - a), 0.0, 1.0);
      h[i] = (1.0 - w) * vals[seg] + w * vals[seg + 1];
    }
    const double den = d.sup_norm(h);
    if (den > 0.0) best = std::max(best, d.sup_norm(d.apply(h)) / den);
  }
  return best;
}

} // namespace

ShiftCertificate p_norm_and_shift(const NonAutonomousForm& form, double s, const std::vector<double>& outputs,
                                  int probes, std::uint64_t seed, const VolterraOptions& options) {
  ShiftCertificate cert;
  cert.probes = probes;
  if (form.autonomous()) {
    cert.shifted = form;
    cert.discretization = std::make_shared<VolterraDiscretization>(form, s, outputs, options);
    cert.mu_history.push_back(0.0);
    cert.bound_history.push_back(0.0);
    return cert;
  }
  require_dini(form);
  const VolterraDiscretization base(form, s, outputs, options);
  double mu = 1.0;
  for (;;) {
    auto d = std::make_shared<VolterraDiscretization>(base.with_shift(mu));
    const double b = d->norm_bound();
    cert.mu_history.push_back(mu);
    cert.bound_history.push_back(b);
    if (b < 0.25) {
      cert.mu = mu;
      cert.bound = b;
      cert.shifted = d->form();
      cert.probe_estimate = probe_estimate(*d, probes, seed);
      cert.discretization = d;
      return cert;
    }
    mu *= 2.0;
    if (mu > 65536.0) {
      std::ostringstream os;
      os << "no certificate up to mu = 65536; last bound " << b;
      fail(ErrorCode::ShiftDivergence, os.str());
    }
  }
}

NeumannResult neumann_solve(const VolterraDiscretization& disc, const Mat& X, double tol) {
  NeumannResult res;
  res.certified = disc.norm_bound();
  if (!(res.certified < 0.25)) {
    std::ostringstream os;
    os << "||P_s|| bound " << res.certified << " is not below 1/4; shift the form first";
    fail(ErrorCode::NoCertifiedShift, os.str());
  }
  std::vector<Mat> h = disc.frozen_term(X);
  std::vector<Mat> sum = h;
  const double n0 = disc.sup_norm(h, X);
  res.increments.push_back(n0);
  double prev = n0;
  if (n0 > 0.0 && !disc.form().autonomous()) {
    for (int k = 0; k < 200; ++k) {
      h = disc.apply(h);
      const double nk = disc.sup_norm(h, X);
      for (size_t i = 0; i < sum.size(); ++i) sum[i] += h[i];
      res.increments.push_back(nk);
      res.ratios.push_back(prev > 0.0 ? nk / prev : 0.0);
      ++res.iterations;
      prev = nk;
      if (nk < tol * 0.75 * n0) break;
    }
  }
  res.truncation_bound = res.certified * prev / (1.0 - res.certified);
  Trajectory& traj = res.trajectory;
  traj.s = disc.start();
  traj.initial = X;
  for (size_t k = 0; k < disc.outputs().size(); ++k) {
    traj.times.push_back(disc.outputs()[k]);
    traj.states.push_back(sum[static_cast<size_t>(disc.output_index()[k])]);
  }
  return res;
}

NeumannResult neumann_solve(const NonAutonomousForm& form, double s, const Mat& X, const std::vector<double>& outputs,
                            double tol, const VolterraOptions& options) {
  const VolterraDiscretization disc(form, s, outputs, options);
  return neumann_solve(disc, X, tol);
}

Trajectory unshift(const Trajectory& traj, double mu) {
  Trajectory out = traj;
  if (mu == 0.0) return out;
  for (size_t k = 0; k < out.states.size(); ++k) out.states[k] *= std::exp(mu * (out.times[k] - out.s));
  return out;
}

const char* table_method_name(TableMethod method) {
  switch (method) {
  case TableMethod::stepper: return "stepper";
  case TableMethod::neumann: return "neumann";
  case TableMethod::frozen: return "frozen";
  }
  return "?";
}

const Mat& EvolutionTable::at(size_t i, size_t j) const {
  if (j > i || i >= size()) fail(ErrorCode::DimensionMismatch, "table entries need j <= i < size");
  return entries[i * (i + 1) / 2 + j];
}

Mat& EvolutionTable::at(size_t i, size_t j) {
  if (j > i || i >= size()) fail(ErrorCode::DimensionMismatch, "table entries need j <= i < size");
  return entries[i * (i + 1) / 2 + j];
}

EvolutionTable build_table(const NonAutonomousForm& form, const TimeGrid& grid, TableMethod method,
                           const TableOptions& options) {
  const size_t N = grid.nodes.size();
  if (N == 0) fail(ErrorCode::EmptyGrid, "table grid is empty");
  for (size_t k = 1; k < N; ++k)
    if (!(grid.nodes[k] > grid.nodes[k - 1])) fail(ErrorCode::ConfigError, "table grid must be strictly increasing");
  EvolutionTable table;
  table.grid = grid;
  table.method = method;
  table.shift_applied = form.shift();
  table.entries.resize(N * (N + 1) / 2);
  const int n = form.dim();
  const Mat I = Mat::Identity(n, n);
  for (size_t j = 0; j < N; ++j) {
    table.at(j, j) = I;
    if (j + 1 == N) continue;
    const double s = grid.nodes[j];
    const std::vector<double> outs(grid.nodes.begin() + static_cast<long>(j) + 1, grid.nodes.end());
    std::vector<Mat> col;
    switch (method) {
    case TableMethod::stepper: col = step_solve(form, s, I, outs, options.step).states; break;
    case TableMethod::neumann: {
      const VolterraDiscretization d(form, s, outs, options.volterra);
      NeumannResult r = neumann_solve(d, I, options.neumann_tol);
      table.neumann_certified = std::max(table.neumann_certified, r.certified);
      table.neumann_ratios.insert(table.neumann_ratios.end(), r.ratios.begin(), r.ratios.end());
      col = std::move(r.trajectory.states);
      break;
    }
    case TableMethod::frozen:
      for (double t : outs) col.push_back(u1_apply(form, t, s, I));
      break;
    }
    for (size_t k = 0; k < col.size(); ++k) table.at(j + 1 + k, j) = std::move(col[k]);
  }
  return table;
}

EvolutionTable unshift(const EvolutionTable& table, double mu) {
  EvolutionTable out = table;
  out.shift_applied -= mu;
  if (mu == 0.0) return out;
  const auto& t = table.grid.nodes;
  for (size_t i = 0; i < t.size(); ++i)
    for (size_t j = 0; j < i; ++j) out.at(i, j) *= std::exp(mu * (t[i] - t[j]));
  return out;
}

Trajectory duhamel_solve(const NonAutonomousForm& form, const std::function<Vec(double)>& f, const TimeGrid& grid,
                         DuhamelMethod method, const StepOptions& options) {
  const auto& r = grid.nodes;
  if (r.size() < 2) fail(ErrorCode::InsufficientGrid, "Duhamel quadrature needs at least two nodes");
  const int n = form.dim();
  Trajectory out;
  out.s = r[0];
  out.initial = Mat::Zero(n, 1);
  if (method == DuhamelMethod::forced_stepper) {
    const std::vector<double> outs(r.begin() + 1, r.end());
    Trajectory t = step_solve_forced(form, r[0], Vec::Zero(n), f, outs, options);
    out.times.push_back(r[0]);
    out.states.push_back(Mat::Zero(n, 1));
    out.times.insert(out.times.end(), t.times.begin(), t.times.end());
    out.states.insert(out.states.end(), t.states.begin(), t.states.end());
    out.fallback_steps = t.fallback_steps;
    return out;
  }
  const size_t N = r.size();
  const Eigen::LLT<Mat> gh(form.triple().gram_H());
  // cols[j][i - j] = U(r_i, r_j) G_H^{-1} f(r_j)
  std::vector<std::vector<Mat>> cols(N);
  for (size_t j = 0; j < N; ++j) {
    const Mat x = gh.solve(Mat(f(r[j])));
    cols[j].push_back(x);
    if (j + 1 == N) continue;
    const std::vector<double> outs(r.begin() + static_cast<long>(j) + 1, r.end());
    Trajectory t = step_solve(form, r[j], x, outs, options);
    out.fallback_steps += t.fallback_steps;
    for (auto& m : t.states) cols[j].push_back(std::move(m));
  }
  for (size_t i = 0; i < N; ++i) {
    Mat v = Mat::Zero(n, 1);
    for (size_t j = 0; j < i; ++j) {
      const double h = r[j + 1] - r[j];
      v += 0.5 * h * (cols[j][i - j] + cols[j + 1][i - j - 1]);
    }
    out.times.push_back(r[i]);
    out.states.push_back(v);
  }
  return out;
}

namespace {

/// L_H^* U L_H^{-*}: U as an operator on H in orthonormal coordinates
std::vector<Mat> weighted_entries(const NonAutonomousForm& form, const EvolutionTable& table) {
  const Mat& L = form.triple().chol_H();
  std::vector<Mat> W(table.entries.size());
#pragma omp parallel for schedule(dynamic)
  for (long k = 0; k < static_cast<long>(W.size()); ++k)
    W[static_cast<size_t>(k)] = solve_right_adjoint(L.adjoint() * table.entries[static_cast<size_t>(k)], L);
  return W;
}

} // namespace

double evolution_law_residual(const NonAutonomousForm& form, const EvolutionTable& table) {
  const size_t N = table.size();
  const std::vector<Mat> W = weighted_entries(form, table);
  auto idx = [](size_t i, size_t j) { return i * (i + 1) / 2 + j; };
  std::vector<double> row(N, 0.0);
#pragma omp parallel for schedule(dynamic)
  for (long ii = 0; ii < static_cast<long>(N); ++ii) {
    const size_t i = static_cast<size_t>(ii);
    double best = 0.0;
    for (size_t k = 0; k <= i; ++k)
      for (size_t j = 0; j <= k; ++j)
        best = std::max(best, spectral_norm(W[idx(i, j)] - W[idx(i, k)] * W[idx(k, j)]));
    row[i] = best;
  }
  return N ? *std::max_element(row.begin(), row.end()) : 0.0;
}

EnergyReport contractivity_energy_check(const NonAutonomousForm& form, const EvolutionTable& table, double alpha,
                                        double tol) {
  EnergyReport rep;
  const size_t N = table.size();
  const std::vector<Mat> W = weighted_entries(form, table);
  const Mat& LH = form.triple().chol_H();
  const Mat LVa = form.triple().chol_V().adjoint();
  const auto& t = table.grid.nodes;
  rep.energy_excess = -1e300;
  for (size_t j = 0; j < N; ++j) {
    const int n = form.dim();
    Mat integral = Mat::Zero(n, n);
    for (size_t i = j + 1; i < N; ++i) {
      const Mat& Wij = W[i * (i + 1) / 2 + j];
      rep.max_norm_H = std::max(rep.max_norm_H, spectral_norm(Wij));
      const Mat V = solve_right_adjoint(LVa * table.at(i, j), LH);
      integral += (t[i] - t[i - 1]) * (V.adjoint() * V);
      const Mat E = hermitian_part(Wij.adjoint() * Wij - Mat::Identity(n, n) + 2.0 * alpha * integral);
      const double top = Eigen::SelfAdjointEigenSolver<Mat>(E, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
      rep.energy_excess = std::max(rep.energy_excess, top);
    }
  }
  if (N < 2) rep.energy_excess = 0.0;
  rep.contractive = rep.max_norm_H <= 1.0 + tol;
  rep.energy_ok = rep.energy_excess <= tol;
  return rep;
}

EnergyReport contractivity_energy_check(const NonAutonomousForm& form, const Trajectory& traj, double alpha,
                                        double tol) {
  EnergyReport rep;
  const Mat& GH = form.triple().gram_H();
  const Mat& GV = form.triple().gram_V();
  const Mat& X = traj.initial;
  double excess = 0.0, ident = 0.0, top = 0.0;
  for (Eigen::Index c = 0; c < X.cols(); ++c) {
    const Vec x = X.col(c);
    const double x2 = (x.adjoint() * GH * x)(0).real();
    if (!(x2 > 0.0)) continue;
    double integral = 0.0, trap = 0.0;
    double prev_t = traj.s;
    double prev_a = (x.adjoint() * form.at(traj.s) * x)(0).real();
    for (size_t k = 0; k < traj.states.size(); ++k) {
      const Vec u = traj.states[k].col(c);
      const double dt = traj.times[k] - prev_t;
      const double u2 = (u.adjoint() * GH * u)(0).real();
      const double ua = (u.adjoint() * form.at(traj.times[k]) * u)(0).real();
      integral += dt * (u.adjoint() * GV * u)(0).real();
      trap += 0.5 * dt * (prev_a + ua);
      top = std::max(top, std::sqrt(u2 / x2));
      excess = std::max(excess, (u2 - x2 + 2.0 * alpha * integral) / x2);
      ident = std::max(ident, std::abs(u2 - x2 + 2.0 * trap) / x2);
      prev_t = traj.times[k];
      prev_a = ua;
    }
  }
  rep.max_norm_H = top;
  rep.contractive = top <= 1.0 + tol;
  rep.energy_excess = excess;
  rep.energy_ok = excess <= tol;
  rep.identity_residual = ident;
  return rep;
}

json table_to_json(const EvolutionTable& table) {
  json j;
  j["method"] = table_method_name(table.method);
  j["shift_applied"] = table.shift_applied;
  j["grid"] = {{"nodes", table.grid.nodes}, {"grading", table.grid.grading}, {"anchor", table.grid.anchor}};
  if (table.method == TableMethod::neumann) {
    j["neumann_certified"] = table.neumann_certified;
    j["neumann_ratios"] = table.neumann_ratios;
  }
  j["dim"] = table.entries.empty() ? 0 : table.entries.front().rows();
  json e = json::array();
  for (size_t i = 0; i < table.size(); ++i)
    for (size_t k = 0; k <= i; ++k) e.push_back({{"i", i}, {"j", k}, {"matrix", matrix_to_json(table.at(i, k))}});
  j["entries"] = e;
  return j;
}

EvolutionTable table_from_json(const json& j) {
  EvolutionTable t;
  try {
    const std::string m = j.at("method").get<std::string>();
    if (m == "stepper")
      t.method = TableMethod::stepper;
    else if (m == "neumann")
      t.method = TableMethod::neumann;
    else if (m == "frozen")
      t.method = TableMethod::frozen;
    else
      fail(ErrorCode::ConfigError, "key 'method': unknown table method '" + m + "'");
    t.shift_applied = j.at("shift_applied").get<double>();
    t.grid.nodes = j.at("grid").at("nodes").get<std::vector<double>>();
    t.grid.grading = j.at("grid").value("grading", "uniform");
    t.grid.anchor = j.at("grid").value("anchor", 0.0);
    t.neumann_certified = j.value("neumann_certified", 0.0);
    t.neumann_ratios = j.value("neumann_ratios", std::vector<double>{});
    const int n = j.at("dim").get<int>();
    t.entries.resize(t.size() * (t.size() + 1) / 2);
    for (const auto& e : j.at("entries")) {
      const size_t i = e.at("i").get<size_t>(), k = e.at("j").get<size_t>();
      t.at(i, k) = matrix_from_json(e.at("matrix"), n, "entries.matrix");
    }
  } catch (const json::exception& ex) {
    fail(ErrorCode::ConfigError, std::string("table JSON: ") + ex.what());
  }
  return t;
}

std::string pairs_csv(const NonAutonomousForm& form, const EvolutionTable& table, const EvolutionTable* other) {
  const Geometry& g = form.geometry();
  const std::vector<Mat> W = weighted_entries(form, table);
  auto idx = [](size_t i, size_t j) { return i * (i + 1) / 2 + j; };
  std::string out = "i,j,t_i,t_j,opnorm_H_to_H[gram_H],opnorm_V_to_V[gram_V],law_residual_H_to_H[gram_H]";
  if (other) out += std::string(",diff_vs_") + table_method_name(other->method) + "_H_to_H[gram_H]";
  out += "\n";
  char buf[256];
  for (size_t i = 0; i < table.size(); ++i)
    for (size_t j = 0; j <= i; ++j) {
      const Mat& U = table.at(i, j);
      double law = 0.0;
      for (size_t k = j; k <= i; ++k) law = std::max(law, spectral_norm(W[idx(i, j)] - W[idx(i, k)] * W[idx(k, j)]));
      std::snprintf(buf, sizeof buf, "%zu,%zu,%.17g,%.17g,%.17g,%.17g,%.17g", i, j, table.grid.nodes[i],
                    table.grid.nodes[j], spectral_norm(W[idx(i, j)]), g.operator_norm(U, Space::V, Space::V), law);
      out += buf;
      if (other) {
        std::snprintf(buf, sizeof buf, ",%.17g", g.operator_norm(U - other->at(i, j), Space::H, Space::H));
        out += buf;
      }
      out += "\n";
    }
  return out;
}

} // namespace evolab
