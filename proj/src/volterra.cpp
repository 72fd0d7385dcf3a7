#include "evolab/volterra.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "evolab/error.hpp"
#include "evolab/operator_calculus.hpp"
#include "evolab/quadrature.hpp"

namespace evolab {

namespace {

std::vector<double> build_edges(double s, double T, std::vector<double> stops, const VolterraOptions& o) {
  const double wmax = o.max_panel * T, wmin = o.min_panel * T;
  std::sort(stops.begin(), stops.end());
  stops.erase(std::unique(stops.begin(), stops.end()), stops.end());
  std::vector<double> edges{s};
  const double b1 = std::min(stops.front(), s + wmax);
  const double span = b1 - s;
  const int K = std::max(0, static_cast<int>(std::floor(std::log(wmin / span) / std::log(o.panel_ratio))));
  for (int k = K; k >= 1; --k) edges.push_back(s + span * std::pow(o.panel_ratio, k));
  edges.push_back(b1);
  for (double stop : stops) {
    const double cur = edges.back();
    if (stop <= cur) continue;
    const int m = std::max(1, static_cast<int>(std::ceil((stop - cur) / wmax - 1e-12)));
    for (int k = 1; k < m; ++k) edges.push_back(cur + (stop - cur) * k / m);
    edges.push_back(stop);
  }
  return edges;
}

} // namespace

VolterraDiscretization::VolterraDiscretization(const NonAutonomousForm& form, double s,
                                               const std::vector<double>& outputs, const VolterraOptions& options)
    : form_(form), s_(s), opt_(options), outputs_(outputs) {
  const double T = form.horizon();
  if (outputs_.empty()) fail(ErrorCode::EmptyGrid, "Volterra discretization needs output times");
  std::sort(outputs_.begin(), outputs_.end());
  if (outputs_.front() < s - 1e-14 || outputs_.back() > T + 1e-12)
    fail(ErrorCode::ConfigError, "output times must lie in [s, T]");
  if (!(s < T)) fail(ErrorCode::ConfigError, "initial time must precede the horizon");
  std::vector<double> stops;
  const double tol = 1e-13 * std::max(1.0, T);
  for (double t : outputs_)
    if (t > s + tol) stops.push_back(t);
  for (double k : form.kinks())
    if (k > s + tol && k < T - tol) stops.push_back(k);
  if (stops.empty()) stops.push_back(T);
  edges_ = build_edges(s, T, stops, opt_);
  p_ = opt_.lobatto_points;
  const Rule lob = gauss_lobatto(p_);
  const size_t P = edges_.size() - 1;
  nodes_.assign(P * static_cast<size_t>(p_ - 1) + 1, 0.0);
  for (size_t m = 0; m < P; ++m) {
    const Rule r = mapped(lob, edges_[m], edges_[m + 1]);
    for (int q = 0; q < p_; ++q) nodes_[m * static_cast<size_t>(p_ - 1) + static_cast<size_t>(q)] = r.nodes[static_cast<size_t>(q)];
    nodes_[m * static_cast<size_t>(p_ - 1)] = edges_[m];
    nodes_[(m + 1) * static_cast<size_t>(p_ - 1)] = edges_[m + 1];
  }
  for (double t : outputs_) {
    int idx = -1;
    for (size_t e = 0; e < edges_.size(); ++e)
      if (std::abs(edges_[e] - t) <= tol) idx = static_cast<int>(e) * (p_ - 1);
    if (idx < 0) {
      std::ostringstream os;
      os << "output time " << t << " is not a panel edge";
      fail(ErrorCode::GridTooCoarse, os.str());
    }
    out_idx_.push_back(idx);
  }

  const size_t N = nodes_.size();
  const size_t B = form.terms().size();
  lam_.resize(N);
  phi_.resize(N);
  phi_inv_.resize(N);
  vphi_.resize(N);
  z_.assign(N, std::vector<Mat>(B));
  const Mat LVa = form.triple().chol_V().adjoint();
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < static_cast<long>(N); ++i) {
    const size_t k = static_cast<size_t>(i);
    FrozenSpectrum sp = frozen_spectrum(form, nodes_[k]);
    for (size_t b = 0; b < B; ++b) z_[k][b] = sp.left_action * form.terms()[b].left;
    vphi_[k] = LVa * sp.right;
    lam_[k] = std::move(sp.lambda);
    phi_[k] = std::move(sp.right);
    phi_inv_[k] = std::move(sp.left_primal);
  }
  rw_.resize(B);
  for (size_t b = 0; b < B; ++b) {
    const Mat Wt = lower_solve(form.triple().chol_V(), form.terms()[b].right);
    Eigen::HouseholderQR<Mat> qr(Wt);
    const Eigen::Index r = std::min(Wt.rows(), Wt.cols());
    rw_[b] = qr.matrixQR().topRows(r).triangularView<Eigen::Upper>();
  }
  coef_.resize(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(B));
  for (size_t i = 0; i < N; ++i)
    for (size_t b = 0; b < B; ++b)
      coef_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(b)) = form.terms()[b].coefficient(nodes_[i]);
  build_weights();
}

VolterraDiscretization VolterraDiscretization::with_shift(double mu) const {
  VolterraDiscretization d = *this;
  d.form_ = shift(form_, mu);
  for (auto& l : d.lam_) l.array() += mu;
  d.build_weights();
  return d;
}

void VolterraDiscretization::build_weights() {
  const size_t N = nodes_.size();
  const size_t pm1 = static_cast<size_t>(p_ - 1);
  const int n = form_.dim();
  omega_.assign(N, Mat());
  if (form_.autonomous()) return;
  const Rule lob = gauss_lobatto(p_);
  const Rule near_rule = gauss_legendre(opt_.aux_points);
  const Rule far_rule = gauss_legendre(opt_.far_points);
  const LagrangeBasis basis(lob.nodes);
#pragma omp parallel for schedule(dynamic)
  for (long ii = 1; ii < static_cast<long>(N); ++ii) {
    const size_t i = static_cast<size_t>(ii);
    const double tau = nodes_[i];
    const size_t panel_i = std::min((i - 1) / pm1, edges_.size() - 2);
    const size_t cols = (panel_i + 1) * pm1 + 1;
    Mat Om = Mat::Zero(n, static_cast<Eigen::Index>(cols));
    const Vec& lam = lam_[i];
    const double lmax = lam.cwiseAbs().maxCoeff();
    std::vector<double> xs, ws;
    std::vector<double> lq(static_cast<size_t>(p_));
    for (size_t m = 0; m <= panel_i; ++m) {
      const double a = edges_[m], b = edges_[m + 1];
      const double upper = std::min(b, tau);
      const double w = upper - a;
      if (!(w > 0.0)) continue;
      const double rho0 = tau - upper;
      xs.clear();
      ws.clear();
      if (rho0 < w) {
        const double dmin = std::min(w, 1e-3 / std::max(lmax, 1e-300));
        const int K = std::max(0, static_cast<int>(std::ceil(std::log(dmin / w) / std::log(opt_.aux_ratio))));
        // offsets e from the upper end: [e_{k+1}, e_k], then [0, e_K]
        double hi = w;
        for (int k = 0; k <= K; ++k) {
          const double lo = k == K ? 0.0 : w * std::pow(opt_.aux_ratio, k + 1);
          const Rule r = mapped(near_rule, upper - hi, upper - lo);
          xs.insert(xs.end(), r.nodes.begin(), r.nodes.end());
          ws.insert(ws.end(), r.weights.begin(), r.weights.end());
          hi = lo;
        }
      } else {
        const Rule r = mapped(far_rule, a, upper);
        xs = r.nodes;
        ws = r.weights;
      }
      const Eigen::Index A = static_cast<Eigen::Index>(xs.size());
      Mat E(n, A);
      Mat Lg(A, p_);
      for (Eigen::Index q = 0; q < A; ++q) {
        const double d = tau - xs[static_cast<size_t>(q)];
        for (int k = 0; k < n; ++k) E(k, q) = std::exp(-d * lam(k));
        basis.eval((2.0 * xs[static_cast<size_t>(q)] - a - b) / (b - a), lq.data());
        for (int j = 0; j < p_; ++j) Lg(q, j) = lq[static_cast<size_t>(j)] * ws[static_cast<size_t>(q)];
      }
      Om.middleCols(static_cast<Eigen::Index>(m * pm1), p_) += E * Lg;
    }
    omega_[i] = std::move(Om);
  }
}

std::vector<Mat> VolterraDiscretization::frozen_term(const Mat& X) const {
  const size_t N = nodes_.size();
  std::vector<Mat> h(N);
  h[0] = X;
#pragma omp parallel for schedule(dynamic)
  for (long ii = 1; ii < static_cast<long>(N); ++ii) {
    const size_t i = static_cast<size_t>(ii);
    const double d = nodes_[i] - s_;
    Vec e(lam_[i].size());
    for (Eigen::Index k = 0; k < e.size(); ++k) e(k) = std::exp(-d * lam_[i](k));
    h[i] = phi_[i] * (e.asDiagonal() * (phi_inv_[i] * X));
  }
  return h;
}

std::vector<Mat> VolterraDiscretization::apply(const std::vector<Mat>& h) const { return apply(h, opt_.policy); }

std::vector<Mat> VolterraDiscretization::apply(const std::vector<Mat>& h, ExecutionPolicy policy) const {
  const size_t N = nodes_.size();
  if (h.size() != N) fail(ErrorCode::DimensionMismatch, "trajectory must be sampled at every node");
  const int n = form_.dim();
  const Eigen::Index m = h[0].cols();
  std::vector<Mat> out(N, Mat::Zero(n, m));
  if (form_.autonomous()) return out;
  const size_t B = form_.terms().size();
  // Y[b][rho] row j = (W_b^* h_j)[rho, :]
  std::vector<std::vector<Mat>> Y(B);
  for (size_t b = 0; b < B; ++b) {
    const Mat& W = form_.terms()[b].right;
    Y[b].assign(static_cast<size_t>(W.cols()), Mat(static_cast<Eigen::Index>(N), m));
    for (size_t j = 0; j < N; ++j) {
      const Mat y = W.adjoint() * h[j];
      for (Eigen::Index r = 0; r < W.cols(); ++r) Y[b][static_cast<size_t>(r)].row(static_cast<Eigen::Index>(j)) = y.row(r);
    }
  }
  auto node = [&](size_t i) {
    const Mat& Om = omega_[i];
    const Eigen::Index cols = Om.cols();
    Mat acc = Mat::Zero(n, m);
    for (size_t b = 0; b < B; ++b) {
      const Eigen::VectorXd dc =
          coef_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(b)) - coef_.col(static_cast<Eigen::Index>(b)).head(cols).array();
      const Eigen::VectorXcd dcc = dc.cast<cplx>();
      for (size_t r = 0; r < Y[b].size(); ++r) {
        const Mat S = Om * (dcc.asDiagonal() * Y[b][r].topRows(cols));
        acc.noalias() += z_[i][b].col(static_cast<Eigen::Index>(r)).asDiagonal() * S;
      }
    }
    out[i] = phi_[i] * acc;
  };
  if (policy == ExecutionPolicy::serial) {
    for (size_t i = 1; i < N; ++i) node(i);
  } else {
#pragma omp parallel for schedule(dynamic)
    for (long i = 1; i < static_cast<long>(N); ++i) node(static_cast<size_t>(i));
  }
  return out;
}

double VolterraDiscretization::norm_bound() const {
  if (form_.autonomous()) return 0.0;
  const size_t N = nodes_.size();
  const size_t B = form_.terms().size();
  std::vector<double> rows(N, 0.0);
#pragma omp parallel for schedule(dynamic)
  for (long ii = 1; ii < static_cast<long>(N); ++ii) {
    const size_t i = static_cast<size_t>(ii);
    const Mat& Om = omega_[i];
    const Eigen::Index cols = Om.cols();
    double sum = 0.0;
    for (size_t b = 0; b < B; ++b) {
      const Mat& Z = z_[i][b];
      const Mat& R = rw_[b];
      if (Z.cols() == 1) {
        const Mat M = vphi_[i] * (Z.col(0).asDiagonal() * Om);
        const double rn = std::abs(R(0, 0));
        for (Eigen::Index j = 0; j < cols; ++j) {
          const double dc = coef_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(b)) - coef_(j, static_cast<Eigen::Index>(b));
          sum += std::abs(dc) * M.col(j).norm() * rn;
        }
      } else {
        for (Eigen::Index j = 0; j < cols; ++j) {
          const double dc = coef_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(b)) - coef_(j, static_cast<Eigen::Index>(b));
          if (dc == 0.0) continue;
          const Mat M = vphi_[i] * (Om.col(j).asDiagonal() * Z);
          sum += std::abs(dc) * spectral_norm(M * R.adjoint());
        }
      }
    }
    rows[i] = sum;
  }
  return *std::max_element(rows.begin(), rows.end());
}

double VolterraDiscretization::sup_norm(const std::vector<Mat>& h, const Mat& X) const {
  const Mat& LV = form_.triple().chol_V();
  const Mat XV = LV.adjoint() * X;
  Eigen::LLT<Mat> llt(XV.adjoint() * XV);
  const bool weighted = llt.info() == Eigen::Success && XV.cols() <= XV.rows() &&
                        llt.matrixL().toDenseMatrix().diagonal().cwiseAbs().minCoeff() > 1e-12 * XV.norm();
  double best = 0.0;
  for (const Mat& hi : h) {
    const Mat Y = LV.adjoint() * hi;
    double v;
    if (weighted) {
      // Y R^{-1}, R = L^* from X^* G_V X = L L^*
      const Mat YR = llt.matrixU().solve(Y.adjoint()).adjoint();
      v = spectral_norm(YR);
    } else {
      v = 0.0;
      for (Eigen::Index c = 0; c < Y.cols(); ++c) v = std::max(v, Y.col(c).norm());
    }
    best = std::max(best, v);
  }
  return best;
}

double VolterraDiscretization::sup_norm(const std::vector<Mat>& h) const {
  const Mat LVa = form_.triple().chol_V().adjoint();
  double best = 0.0;
  for (const Mat& hi : h) best = std::max(best, spectral_norm(LVa * hi));
  return best;
}

} // namespace evolab
