#include "evolab/regularity_lab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "evolab/error.hpp"

namespace evolab {

TimeGrid scan_time_grid(const std::vector<double>& starts, const std::vector<double>& anchors,
                        const std::vector<double>& lags, double horizon) {
  std::vector<double> pts;
  for (const auto* base : {&starts, &anchors})
    for (double a : *base) {
      pts.push_back(a);
      for (double d : lags) pts.push_back(a + d);
    }
  std::sort(pts.begin(), pts.end());
  const double tol = 1e-12 * std::max(1.0, horizon);
  TimeGrid g;
  g.grading = "scan";
  for (double p : pts) {
    if (p < -tol || p > horizon + tol) continue;
    if (g.nodes.empty() || p - g.nodes.back() > tol) g.nodes.push_back(p);
  }
  if (g.nodes.empty()) fail(ErrorCode::EmptyGrid, "scan grid has no nodes in [0, T]");
  g.anchor = g.nodes.front();
  return g;
}

namespace {

long find_node(const std::vector<double>& nodes, double t) {
  const double tol = 1e-12 * std::max(1.0, std::abs(nodes.back()));
  auto it = std::lower_bound(nodes.begin(), nodes.end(), t - tol);
  if (it != nodes.end() && std::abs(*it - t) <= tol) return it - nodes.begin();
  return -1;
}

} // namespace

ContinuityScan norm_continuity_scan(const NonAutonomousForm& form, const EvolutionTable& table, Space space,
                                    Variation variation, double fixed, double min_separation,
                                    const std::vector<double>& lags, const DiniModulus& modulus) {
  if (space != Space::H && space != Space::V) fail(ErrorCode::ConfigError, "continuity scans use H or V");
  const auto& t = table.grid.nodes;
  const long f = find_node(t, fixed);
  if (f < 0) {
    std::ostringstream os;
    os << "fixed time " << fixed << " is not a table node";
    fail(ErrorCode::GridTooCoarse, os.str());
  }
  ContinuityScan scan;
  scan.space = space;
  scan.variation = variation;
  scan.fixed = fixed;
  scan.lags = lags;
  std::sort(scan.lags.begin(), scan.lags.end());
  double min_gap = std::numeric_limits<double>::infinity();
  for (size_t k = 1; k < t.size(); ++k) min_gap = std::min(min_gap, t[k] - t[k - 1]);
  if (!scan.lags.empty() && min_gap > scan.lags.front() * (1.0 + 1e-9)) {
    std::ostringstream os;
    os << "smallest table gap " << min_gap << " exceeds the smallest lag " << scan.lags.front();
    fail(ErrorCode::GridTooCoarse, os.str());
  }
  const Geometry& g = form.geometry();
  const size_t F = static_cast<size_t>(f);
  for (double d : scan.lags) {
    double best = -1.0, bt = 0.0, bs = 0.0;
    for (size_t a = 0; a < t.size(); ++a) {
      const long b = find_node(t, t[a] + d);
      if (b < 0) continue;
      const size_t B = static_cast<size_t>(b);
      double v, tt, ss;
      if (variation == Variation::s_fixed) {
        if (a < F || t[a] - fixed < min_separation) continue;
        v = g.operator_norm(table.at(B, F) - table.at(a, F), space, space);
        tt = t[a];
        ss = fixed;
      } else {
        if (B > F || fixed - t[B] < min_separation) continue;
        v = g.operator_norm(table.at(F, B) - table.at(F, a), space, space);
        tt = fixed;
        ss = t[a];
      }
      if (v > best) {
        best = v;
        bt = tt;
        bs = ss;
      }
    }
    if (best < 0.0) {
      std::ostringstream os;
      os << "no table pair realizes lag " << d;
      fail(ErrorCode::GridTooCoarse, os.str());
    }
    scan.modulus.push_back(best);
    scan.arg_t.push_back(bt);
    scan.arg_s.push_back(bs);
  }
  scan.monotone = true;
  for (size_t k = 1; k < scan.modulus.size(); ++k)
    if (!(scan.modulus[k - 1] < scan.modulus[k])) scan.monotone = false;
  for (size_t k = 0; k < scan.lags.size(); ++k) {
    const double d = scan.lags[k];
    const double den = std::log1p(d / (scan.arg_t[k] - scan.arg_s[k])) + modulus.at(d);
    if (den > 0.0)
      scan.fitted_C = std::max(scan.fitted_C, scan.modulus[k] / den);
    else if (scan.modulus[k] > 0.0)
      scan.fitted_C = std::numeric_limits<double>::infinity();
  }
  return scan;
}

const char* sv_geometry_name(SvGeometry g) {
  switch (g) {
  case SvGeometry::H_to_H: return "H->H";
  case SvGeometry::V_to_V: return "V->V";
  case SvGeometry::H_to_V: return "H->V";
  }
  return "?";
}

RVec singular_value_profile(const NonAutonomousForm& form, const Mat& U, SvGeometry geometry) {
  const Space from = geometry == SvGeometry::V_to_V ? Space::V : Space::H;
  const Space to = geometry == SvGeometry::H_to_H ? Space::H : Space::V;
  const Mat K = form.geometry().weighted(U, from, to);
  return Eigen::BDCSVD<Mat>(K).singularValues();
}

double schatten_norm(const RVec& sv, double p) {
  if (!(p >= 1.0) || !std::isfinite(p)) {
    std::ostringstream os;
    os << "Schatten exponent " << p << " is outside [1, inf)";
    fail(ErrorCode::POutOfRange, os.str());
  }
  if (sv.size() == 0) return 0.0;
  const double top = sv.cwiseAbs().maxCoeff();
  if (top == 0.0) return 0.0;
  double sum = 0.0;
  for (Eigen::Index k = 0; k < sv.size(); ++k) sum += std::pow(std::abs(sv(k)) / top, p);
  return top * std::pow(sum, 1.0 / p);
}

double schatten_norm(const Mat& K, double p) {
  if (!(p >= 1.0) || !std::isfinite(p)) schatten_norm(RVec(), p);
  return schatten_norm(RVec(Eigen::BDCSVD<Mat>(K).singularValues()), p);
}

GibbsStudy gibbs_refinement_study(const std::function<NonAutonomousForm(int)>& generator, const std::vector<int>& dims,
                                  double t, double s, const std::vector<double>& p_list) {
  if (dims.size() < 2) fail(ErrorCode::InsufficientGrid, "the refinement study needs at least two dimensions");
  for (size_t k = 1; k < dims.size(); ++k)
    if (dims[k] <= dims[k - 1]) fail(ErrorCode::ConfigError, "study dimensions must increase strictly");
  if (!(t > s)) fail(ErrorCode::ConfigError, "the refinement study needs t > s");
  std::vector<double> ps = p_list;
  if (std::find(ps.begin(), ps.end(), 1.0) == ps.end()) ps.insert(ps.begin(), 1.0);
  for (double p : ps) schatten_norm(RVec(RVec::Ones(1)), p);
  GibbsStudy st;
  st.t = t;
  st.s = s;
  StepOptions opt;
  opt.scheme = Scheme::crank_nicolson;
  for (int n : dims) {
    const NonAutonomousForm form = generator(n);
    const int d = form.dim();
    const Mat U = step_solve(form, s, Mat::Identity(d, d), {t}, opt).states.front();
    const RVec sv = singular_value_profile(form, U, SvGeometry::H_to_H);
    GibbsRow row;
    row.n = n;
    for (double p : ps) row.schatten[p] = schatten_norm(sv, p);
    row.embedding_S1 = embedding_singular_values(form.triple()).sum();
    st.rows.push_back(row);
  }
  for (double p : ps)
    for (size_t k = 1; k < st.rows.size(); ++k) {
      const double a = st.rows[k - 1].schatten.at(p), b = st.rows[k].schatten.at(p);
      st.changes[p].push_back(std::abs(b - a) / b);
    }
  for (size_t k = 1; k < st.rows.size(); ++k)
    st.embedding_growth.push_back((st.rows[k].embedding_S1 - st.rows[k - 1].embedding_S1) /
                                  st.rows[k - 1].embedding_S1);
  st.trace_change = st.changes.at(1.0).back();
  st.trace_stable = st.trace_change < 0.02;
  st.embedding_diverges = st.embedding_growth.back() > 0.25;
  if (st.trace_stable && st.embedding_diverges)
    st.verdict = "Gibbs-consistent";
  else if (st.trace_stable)
    st.verdict = "trace-stable; embedding growth below 25% per doubling";
  else
    st.verdict = "trace norm not yet stable";
  return st;
}

json scan_to_json(const ContinuityScan& scan) {
  return {{"space", space_name(scan.space)},
          {"variation", scan.variation == Variation::s_fixed ? "s-fixed" : "t-fixed"},
          {"fixed", scan.fixed},
          {"lags", scan.lags},
          {"modulus", scan.modulus},
          {"arg_t", scan.arg_t},
          {"arg_s", scan.arg_s},
          {"fitted_C", scan.fitted_C},
          {"monotone", scan.monotone}};
}

json gibbs_to_json(const GibbsStudy& st) {
  json rows = json::array();
  for (const auto& r : st.rows) {
    json sp = json::object();
    for (const auto& [p, v] : r.schatten) {
      std::ostringstream k;
      k << p;
      sp[k.str()] = v;
    }
    rows.push_back({{"n", r.n}, {"schatten_H", sp}, {"embedding_S1", r.embedding_S1}});
  }
  json ch = json::object();
  for (const auto& [p, v] : st.changes) {
    std::ostringstream k;
    k << p;
    ch[k.str()] = v;
  }
  return {{"t", st.t},
          {"s", st.s},
          {"rows", rows},
          {"relative_changes", ch},
          {"embedding_growth", st.embedding_growth},
          {"trace_change", st.trace_change},
          {"trace_stable", st.trace_stable},
          {"embedding_diverges", st.embedding_diverges},
          {"verdict", st.verdict}};
}

json regularity_to_json(const RegularityReport& rep) {
  json scans = json::array();
  for (const auto& s : rep.scans) scans.push_back(scan_to_json(s));
  json profiles = json::array();
  for (const auto& p : rep.sv_profiles) {
    std::vector<double> v(p.values.data(), p.values.data() + p.values.size());
    profiles.push_back({{"t", p.t}, {"s", p.s}, {"geometry", sv_geometry_name(p.geometry)}, {"values", v}});
  }
  json sch = json::object();
  for (const auto& [p, v] : rep.schatten) {
    std::ostringstream k;
    k << p;
    sch[k.str()] = v;
  }
  json flags = json::object();
  for (const auto& [k, v] : rep.flags) flags[k] = v;
  return {{"scans", scans}, {"sv_profiles", profiles}, {"schatten", sch}, {"gibbs", gibbs_to_json(rep.gibbs)},
          {"flags", flags}};
}

} // namespace evolab
