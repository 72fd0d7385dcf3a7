#include "evolab/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "evolab/error.hpp"
#include "evolab/operator_calculus.hpp"

namespace evolab {

namespace fs = std::filesystem;

namespace {

template <class T>
T get_key(const json& j, const char* key, const T& def) {
  if (!j.contains(key)) return def;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    fail(ErrorCode::ConfigError, std::string("key '") + key + "' has the wrong type");
  }
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string pkey(double p) {
  std::ostringstream os;
  os << p;
  return os.str();
}

std::string strip_code(const Error& e) {
  const std::string w = e.what();
  const auto pos = w.find(": ");
  return pos == std::string::npos ? w : w.substr(pos + 2);
}

template <class F>
auto stage(const char* name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    fail(e.code(), std::string("stage '") + name + "': " + strip_code(e));
  }
}

double rel_spread(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  if (!std::isfinite(*hi) || !(*lo > 0.0)) return std::isfinite(*hi) && *hi == *lo ? 0.0 : INFINITY;
  return (*hi - *lo) / *lo;
}

RobinProblem robin_at(const RobinProblem& p, int n) {
  RobinProblem q = p;
  q.n = n;
  return q;
}

std::vector<double> scaled(const std::vector<double>& v, double T) {
  std::vector<double> out;
  for (double x : v) out.push_back(x * T);
  return out;
}

std::vector<double> scan_lags(const ExperimentConfig& c, double T) {
  std::vector<double> lags;
  for (int k = c.lag_max_level; k >= c.lag_min_level; --k) lags.push_back(std::ldexp(T, -k));
  return lags;
}

void check_p_list(const std::vector<double>& ps) {
  for (double p : ps) schatten_norm(RVec(RVec::Ones(1)), p);
}

json bounds_json(const NonAutonomousForm& form, const FormBounds& b, const DiniModulus& m, const DiniReport& r) {
  json d0 = json::object();
  for (const auto& [eps, v] : r.delta0_table) d0[pkey(eps)] = v;
  return {{"form", form.description},
          {"dim", form.dim()},
          {"horizon", form.horizon()},
          {"gamma", form.gamma()},
          {"M", b.M},
          {"alpha", b.alpha},
          {"theta", b.theta},
          {"lambda_min_H", b.lambda_min_H},
          {"sector_H", b.sector_H},
          {"coercive", b.coercive},
          {"coercive_shift", coercive_shift_amount(b)},
          {"dini",
           {{"sup_finite", r.sup_finite},
            {"integral_finite", r.integral_finite},
            {"q", r.q},
            {"gamma_half", r.gamma / 2},
            {"sup_ratio", r.sup_ratio},
            {"dini_integral", r.dini_integral},
            {"square_integral", r.square_integral},
            {"delta0", d0}}},
          {"modulus", {{"lags", m.lags}, {"values", m.values}, {"fit_C", m.fit_C}, {"fit_q", m.fit_q}}}};
}

struct Prepared {
  NonAutonomousForm form;
  FormBounds bounds;
  double coercive_shift = 0.0;
  NonAutonomousForm coerced;
};

Prepared prepare(const ExperimentConfig& c) {
  Prepared p;
  p.form = config_form(c);
  p.bounds = estimate_bounds(p.form, uniform_grid(0.0, p.form.horizon(), 64));
  p.coercive_shift = coercive_shift_amount(p.bounds);
  p.coerced = p.coercive_shift > 0.0 ? shift(p.form, p.coercive_shift) : p.form;
  return p;
}

std::string table_path(const std::string& dir) { return (fs::path(dir) / "table.json").string(); }

void ensure_dir(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) fail(ErrorCode::IoError, "cannot create directory " + p.string() + ": " + ec.message());
}

void check_keys(const json& j, const std::set<std::string>& known, const std::string& prefix) {
  for (const auto& [key, value] : j.items())
    if (!known.count(key)) fail(ErrorCode::ConfigError, "key '" + prefix + key + "' is not recognized");
}

} // namespace

ExperimentConfig config_from_json(const json& j) {
  if (!j.is_object()) fail(ErrorCode::ConfigError, "config must be a JSON object");
  check_keys(j,
             {"fixture", "problem", "form", "table_intervals", "neumann_tol", "probes", "seed", "schatten_p", "gibbs",
              "scan", "suites", "stages", "out"},
             "");
  ExperimentConfig c;
  c.fixture = get_key<std::string>(j, "fixture", "");
  if (j.contains("problem")) c.problem = robin_problem_from_json(j["problem"]);
  if (j.contains("form")) {
    if (!j["form"].is_object()) fail(ErrorCode::ConfigError, "key 'form' must be an object");
    c.form_spec = j["form"];
  }
  if (!c.fixture.empty()) {
    static const std::set<std::string> fixtures = {"a1", "scalar-linear", "autonomous-symmetric", "robin"};
    if (!fixtures.count(c.fixture)) fail(ErrorCode::ConfigError, "key 'fixture' has unknown value '" + c.fixture + "'");
    if (c.fixture == "robin" && !c.problem) c.problem = RobinProblem{};
    if (c.fixture == "autonomous-symmetric") {
      RobinProblem p;
      p.n = 16;
      p.beta_left.c = p.beta_right.c = 0.0;
      c.problem = p;
      c.gibbs = false;
      c.refinement_dims = {16};
    }
    if (c.fixture == "a1" || c.fixture == "scalar-linear") c.gibbs = false;
  }
  if (!c.problem && c.form_spec.is_null() && c.fixture.empty())
    fail(ErrorCode::ConfigError, "key 'fixture', 'problem' or 'form' is required");
  c.table_intervals = get_key(j, "table_intervals", c.table_intervals);
  if (c.table_intervals < 1) fail(ErrorCode::ConfigError, "key 'table_intervals' must be positive");
  c.neumann_tol = get_key(j, "neumann_tol", c.neumann_tol);
  if (!(c.neumann_tol > 0.0)) fail(ErrorCode::ConfigError, "key 'neumann_tol' must be positive");
  c.probes = get_key(j, "probes", c.probes);
  c.seed = get_key<std::uint64_t>(j, "seed", c.seed);
  c.schatten_p = get_key(j, "schatten_p", c.schatten_p);
  if (j.contains("gibbs")) {
    const json& g = j["gibbs"];
    if (g.is_boolean()) {
      c.gibbs = g.get<bool>();
    } else if (g.is_object()) {
      check_keys(g, {"enabled", "dims", "t", "s"}, "gibbs.");
      c.gibbs = get_key(g, "enabled", true);
      c.gibbs_dims = get_key(g, "dims", c.gibbs_dims);
      c.gibbs_t = get_key(g, "t", c.gibbs_t);
      c.gibbs_s = get_key(g, "s", c.gibbs_s);
    } else {
      fail(ErrorCode::ConfigError, "key 'gibbs' must be a boolean or an object");
    }
  }
  if (j.contains("scan")) {
    const json& s = j["scan"];
    if (!s.is_object()) fail(ErrorCode::ConfigError, "key 'scan' must be an object");
    check_keys(s, {"lag_levels", "starts", "anchors", "min_separation"}, "scan.");
    const auto levels = get_key(s, "lag_levels", std::vector<int>{c.lag_min_level, c.lag_max_level});
    if (levels.size() != 2 || levels[0] > levels[1]) fail(ErrorCode::ConfigError, "key 'lag_levels' must be [lo, hi]");
    c.lag_min_level = levels[0];
    c.lag_max_level = levels[1];
    c.scan_starts = get_key(s, "starts", c.scan_starts);
    c.scan_anchors = get_key(s, "anchors", c.scan_anchors);
    c.min_separation = get_key(s, "min_separation", c.min_separation);
  }
  if (j.contains("suites")) {
    const json& s = j["suites"];
    if (!s.is_object()) fail(ErrorCode::ConfigError, "key 'suites' must be an object");
    check_keys(s, {"per_decade", "refinement_dims"}, "suites.");
    c.suite_per_decade = get_key(s, "per_decade", c.suite_per_decade);
    c.refinement_dims = get_key(s, "refinement_dims", c.refinement_dims);
  }
  c.out_dir = get_key(j, "out", c.out_dir);
  c.stages = get_key(j, "stages", c.stages);
  for (const auto& st : c.stages)
    if (st != "bounds" && st != "evolve" && st != "verify")
      fail(ErrorCode::ConfigError, "key 'stages' has unknown stage '" + st + "'");
  return c;
}

ExperimentConfig load_config(const std::string& path) { return config_from_json(read_json_file(path)); }

NonAutonomousForm config_form(const ExperimentConfig& c) {
  if (c.fixture == "a1") return form_from_json({{"kind", "scalar"}, {"a0", 1.0}, {"T", 1.0}});
  if (c.fixture == "scalar-linear")
    return form_from_json({{"kind", "scalar"}, {"a0", 1.0}, {"terms", {{{"c", 1.0}, {"power", 1.0}}}}, {"T", 1.0}});
  if (c.problem) return robin_form(*c.problem);
  return form_from_json(c.form_spec);
}

int cmd_bounds(const ExperimentConfig& c, const std::string& out_dir, std::ostream& log) {
  ensure_dir(out_dir);
  const NonAutonomousForm form = config_form(c);
  const FormBounds b = estimate_bounds(form, uniform_grid(0.0, form.horizon(), 64));
  const DiniModulus m = default_dini_modulus(form);
  const DiniReport r = verify_dini(m);
  write_json_atomic((fs::path(out_dir) / "bounds.json").string(), bounds_json(form, b, m, r));
  log << "bounds: M = " << b.M << ", alpha = " << b.alpha << ", theta = " << b.theta << "\n";
  if (!r.integral_finite) {
    log << "DiniViolated: fitted exponent q = " << r.q << " does not exceed gamma/2 = " << r.gamma / 2 << "\n";
    return 2;
  }
  return 0;
}

int cmd_evolve(const ExperimentConfig& c, const std::string& out_dir, std::ostream& log) {
  ensure_dir(out_dir);
  const Prepared p = stage("bounds", [&] { return prepare(c); });
  stage("dini", [&] { require_dini(p.form); });
  const double T = p.form.horizon();
  const TimeGrid grid = uniform_time_grid(0.0, T, c.table_intervals);
  const std::vector<double> outs(grid.nodes.begin() + 1, grid.nodes.end());
  const ShiftCertificate cert =
      stage("certification", [&] { return p_norm_and_shift(p.coerced, 0.0, outs, c.probes, c.seed); });
  TableOptions opt;
  opt.neumann_tol = c.neumann_tol;
  const EvolutionTable TS = stage("stepper table", [&] { return build_table(cert.shifted, grid, TableMethod::stepper, opt); });
  const EvolutionTable TN = stage("neumann table", [&] { return build_table(cert.shifted, grid, TableMethod::neumann, opt); });
  const Geometry& g = p.form.geometry();
  double agree = 0.0;
  for (size_t i = 0; i < TS.size(); ++i)
    for (size_t k = 0; k <= i; ++k) agree = std::max(agree, g.operator_norm(TS.at(i, k) - TN.at(i, k), Space::H, Space::H));
  const double lawS = evolution_law_residual(cert.shifted, TS);
  const double lawN = evolution_law_residual(cert.shifted, TN);
  const double alpha = estimate_bounds(cert.shifted, grid.nodes).alpha;
  const EnergyReport eS = contractivity_energy_check(cert.shifted, TS, alpha);
  const EnergyReport eN = contractivity_energy_check(cert.shifted, TN, alpha);
  double max_ratio = 0.0;
  for (double r : TN.neumann_ratios) max_ratio = std::max(max_ratio, r);
  json checks = {{"tables_agree_H", agree},
                 {"law_residual_stepper", lawS},
                 {"law_residual_neumann", lawN},
                 {"max_norm_H", std::max(eS.max_norm_H, eN.max_norm_H)},
                 {"energy_excess", std::max(eS.energy_excess, eN.energy_excess)},
                 {"alpha_shifted", alpha},
                 {"max_increment_ratio", max_ratio},
                 {"neumann_certified", TN.neumann_certified}};
  json cj = {{"mu", cert.mu},
             {"bound", cert.bound},
             {"probe_estimate", cert.probe_estimate},
             {"probes", cert.probes},
             {"seed", c.seed},
             {"mu_history", cert.mu_history},
             {"bound_history", cert.bound_history}};
  json out = {{"form", p.form.description},
              {"coercive_shift", p.coercive_shift},
              {"certificate", cj},
              {"checks", checks},
              {"stepper", table_to_json(TS)},
              {"neumann", table_to_json(TN)}};
  write_json_atomic(table_path(out_dir), out);
  write_text_atomic((fs::path(out_dir) / "pairs.csv").string(), pairs_csv(cert.shifted, TN, &TS));
  log << "evolve: mu = " << cert.mu << ", ||P_s|| <= " << cert.bound << ", stepper/neumann gap " << agree
      << ", law residual " << std::max(lawS, lawN) << "\n";
  return 0;
}

int cmd_verify(const ExperimentConfig& c, const std::string& out_dir, std::ostream& log) {
  check_p_list(c.schatten_p);
  if (!fs::exists(table_path(out_dir)))
    fail(ErrorCode::MissingDependency, "table.json not found in '" + out_dir + "'; run 'evolve' first");
  const Prepared p = stage("bounds", [&] { return prepare(c); });
  const json tj = read_json_file(table_path(out_dir));
  EvolutionTable TS, TN;
  double certified = 0.0;
  try {
    TS = table_from_json(tj.at("stepper"));
    TN = table_from_json(tj.at("neumann"));
    certified = tj.at("certificate").at("bound").get<double>();
  } catch (const json::exception& e) {
    fail(ErrorCode::ConfigError, std::string("table.json: ") + e.what());
  }
  if (TS.entries.empty() || TS.entries.front().rows() != p.form.dim())
    fail(ErrorCode::DimensionMismatch, "table.json does not match the configured problem; rerun 'evolve'");
  const double T = p.form.horizon();
  const NonAutonomousForm shifted = shift(p.form, TS.shift_applied);
  const Geometry& g = p.form.geometry();
  RegularityReport rep;
  json checks = json::object();

  // evolution tables
  double agree = 0.0;
  for (size_t i = 0; i < TS.size(); ++i)
    for (size_t k = 0; k <= i; ++k) agree = std::max(agree, g.operator_norm(TS.at(i, k) - TN.at(i, k), Space::H, Space::H));
  const double law = std::max(evolution_law_residual(shifted, TS), evolution_law_residual(shifted, TN));
  const double alpha = estimate_bounds(shifted, TS.grid.nodes).alpha;
  const EnergyReport eS = contractivity_energy_check(shifted, TS, alpha);
  const EnergyReport eN = contractivity_energy_check(shifted, TN, alpha);
  double max_ratio = 0.0;
  for (double r : TN.neumann_ratios) max_ratio = std::max(max_ratio, r);
  checks["tables_agree_H"] = agree;
  checks["law_residual"] = law;
  checks["max_norm_H"] = std::max(eS.max_norm_H, eN.max_norm_H);
  checks["energy_excess"] = std::max(eS.energy_excess, eN.energy_excess);
  checks["certified"] = certified;
  checks["max_increment_ratio"] = max_ratio;
  rep.flags["shift_certified"] = certified < 0.25;
  rep.flags["increment_ratios"] = max_ratio <= certified + 0.05;
  rep.flags["tables_agree"] = agree <= 1e-5;
  rep.flags["evolution_law"] = law <= 1e-5;
  rep.flags["contractive"] = eS.contractive && eN.contractive;
  rep.flags["energy_inequality"] = eS.energy_ok && eN.energy_ok;

  // continuity scans on the coercive family
  const std::vector<double> lags = scan_lags(c, T);
  const TimeGrid sg = scan_time_grid(scaled(c.scan_starts, T), scaled(c.scan_anchors, T), lags, T);
  TableOptions sopt;
  sopt.step.richardson = false;
  const EvolutionTable scanU = stage("scan table", [&] { return build_table(p.coerced, sg, TableMethod::stepper, sopt); });
  const DiniModulus mod = default_dini_modulus(p.coerced);
  const double s_fixed = c.scan_starts.empty() ? 0.0 : c.scan_starts.front() * T;
  const double t_fixed = c.scan_anchors.empty() ? T : c.scan_anchors.back() * T;
  const double sep = c.min_separation * T;
  stage("continuity scans", [&] {
    for (Space sp : {Space::V, Space::H}) {
      rep.scans.push_back(norm_continuity_scan(p.coerced, scanU, sp, Variation::s_fixed, s_fixed, sep, lags, mod));
      rep.scans.push_back(norm_continuity_scan(p.coerced, scanU, sp, Variation::t_fixed, t_fixed, sep, lags, mod));
    }
  });
  const EvolutionTable scanF = stage("frozen scan table", [&] { return build_table(p.coerced, sg, TableMethod::frozen); });
  const ContinuityScan u1 =
      stage("frozen scan", [&] { return norm_continuity_scan(p.coerced, scanF, Space::V, Variation::s_fixed, s_fixed, sep, lags, mod); });
  bool mono_V = true, mono_H = true, small_V = true, small_H = true;
  for (const auto& sc : rep.scans) {
    const bool small = sc.modulus.front() < 1e-3;
    if (sc.space == Space::V) {
      mono_V = mono_V && sc.monotone;
      small_V = small_V && small;
    } else {
      mono_H = mono_H && sc.monotone;
      small_H = small_H && small;
    }
  }
  rep.flags["modulus_V_monotone"] = mono_V;
  rep.flags["modulus_H_monotone"] = mono_H;
  rep.flags["modulus_V_small"] = small_V;
  rep.flags["modulus_H_small"] = small_H;
  rep.flags["u1_scan_finite_C"] = std::isfinite(u1.fitted_C);

  // singular values and Schatten norms of the coercive family
  const EvolutionTable TC = unshift(TS, TS.shift_applied - p.coercive_shift);
  std::vector<size_t> rows;
  for (size_t i = 1; i < TC.size(); ++i)
    if (TC.grid.nodes[i] - TC.grid.nodes[0] >= 0.1 * T - 1e-12) {
      rows.push_back(i);
      break;
    }
  if (rows.empty() || rows.back() != TC.size() - 1) rows.push_back(TC.size() - 1);
  bool sch_mono = true;
  for (size_t i : rows)
    for (SvGeometry geo : {SvGeometry::H_to_H, SvGeometry::V_to_V, SvGeometry::H_to_V}) {
      SvProfile pr{TC.grid.nodes[i], TC.grid.nodes[0], geo, singular_value_profile(p.coerced, TC.at(i, 0), geo)};
      std::vector<double> ps = c.schatten_p;
      std::sort(ps.begin(), ps.end());
      for (size_t k = 1; k < ps.size(); ++k)
        if (schatten_norm(pr.values, ps[k]) > schatten_norm(pr.values, ps[k - 1]) * (1.0 + 1e-12)) sch_mono = false;
      rep.sv_profiles.push_back(std::move(pr));
    }
  for (double pp : c.schatten_p) rep.schatten[pp] = schatten_norm(rep.sv_profiles.front().values, pp);
  rep.flags["schatten_monotone"] = sch_mono;

  // operator-calculus suites
  const FormBounds cb = estimate_bounds(p.coerced, uniform_grid(0.0, T, 16));
  const std::vector<double> suite_times{0.0, 0.5 * T, T};
  const EstimateSuiteReport s1 = stage("estimate suite", [&] {
    return resolvent_estimate_suite(p.coerced, suite_times, default_lambda_samples(cb.sector_H, c.suite_per_decade),
                                    default_s_samples(T, c.suite_per_decade));
  });
  const EstimateSuiteReport s2 = stage("estimate suite", [&] {
    return resolvent_estimate_suite(p.coerced, suite_times, default_lambda_samples(cb.sector_H, 2 * c.suite_per_decade),
                                    default_s_samples(T, 2 * c.suite_per_decade));
  });
  std::string suites = "suite,item,label,n,value,refined_value,relative_change\n";
  bool finite = true, stable = true;
  auto suite_row = [&](const std::string& suite, const std::string& item, const std::string& label, int n, double a,
                       double b) {
    const double ch = std::abs(b - a) / std::max(std::abs(a), 1e-300);
    finite = finite && std::isfinite(a) && std::isfinite(b);
    stable = stable && ch <= 0.10;
    suites += suite + "," + item + ",\"" + label + "\"," + std::to_string(n) + "," + num(a) + "," + num(b) + "," + num(ch) + "\n";
  };
  for (size_t k = 0; k < 11; ++k)
    suite_row("resolvent", std::to_string(s1.items[k].id), s1.items[k].label, p.form.dim(), s1.items[k].constant,
              s2.items[k].constant);
  suite_row("resolvent", "kappa", "|Phi Lambda^{-1/2} Psi|_{V',H}", p.form.dim(), s1.kappa, s2.kappa);
  suite_row("resolvent", "c0", "|A^{-1/2}|_{V}", p.form.dim(), s1.c0, s2.c0);
  rep.flags["suite_finite"] = finite;
  rep.flags["suite_stable"] = stable;

  std::vector<int> dims = c.problem ? c.refinement_dims : std::vector<int>{p.form.dim()};
  std::vector<double> sigmas;
  std::array<std::vector<double>, 3> c0s;
  const char* c0_labels[3] = {"|A^{-1/2}(t) - A^{-1/2}(s)|_{V',H} / omega", "|A^{-1/2}(t) - A^{-1/2}(s)|_{H,V} / omega",
                              "|A^{1/2}(t) - A^{1/2}(s)|_{V,H} / omega"};
  stage("square-root suite", [&] {
    for (int n : dims) {
      const NonAutonomousForm f =
          c.problem ? shift(robin_form(robin_at(*c.problem, n)), p.coercive_shift) : p.coerced;
      const double sig = square_root_property_check(f, {0.0, 0.25 * T, 0.5 * T, 0.75 * T, T});
      sigmas.push_back(sig);
      suites += "sqrt,sigma,\"max(|A^{1/2}|_{V,H}, |A^{-1/2}|_{H,V})\"," + std::to_string(n) + "," + num(sig) + ",,\n";
      std::vector<std::pair<double, double>> pairs;
      for (double s0 : {0.0, 0.25, 0.5})
        for (int k = 1; k <= 8; ++k) pairs.push_back({(s0 + std::ldexp(0.5, 1 - k)) * T, s0 * T});
      const SqrtHolderReport sh = sqrt_holder_suite(f, pairs, default_dini_modulus(f));
      for (size_t q = 0; q < 3; ++q) {
        c0s[q].push_back(sh.max_ratio[q]);
        suites += "sqrt,c0_" + std::to_string(q + 1) + ",\"" + c0_labels[q] + "\"," + std::to_string(n) + "," +
                  num(sh.max_ratio[q]) + ",,\n";
      }
    }
  });
  checks["sigma_spread"] = rel_spread(sigmas);
  rep.flags["sigma_stable"] = rel_spread(sigmas) <= 0.05;
  bool c0_ok = true;
  for (const auto& v : c0s) {
    for (double x : v) c0_ok = c0_ok && std::isfinite(x);
    c0_ok = c0_ok && rel_spread(v) <= 0.15;
  }
  rep.flags["c0_stable"] = c0_ok;

  if (c.gibbs && c.problem) {
    const RobinProblem base = *c.problem;
    const double mu_c = p.coercive_shift;
    rep.gibbs = stage("gibbs study", [&] {
      return gibbs_refinement_study([&](int n) { return shift(robin_form(robin_at(base, n)), mu_c); }, c.gibbs_dims,
                                    c.gibbs_t * T, c.gibbs_s * T, c.schatten_p);
    });
    rep.flags["gibbs_trace_stable"] = rep.gibbs.trace_stable;
    rep.flags["gibbs_embedding_diverges"] = rep.gibbs.embedding_diverges;
  }

  // outputs
  const fs::path dir(out_dir);
  ensure_dir(dir / "plotdata");
  json rj = regularity_to_json(rep);
  rj["checks"] = checks;
  rj["u1_scan"] = scan_to_json(u1);
  rj["seed"] = c.seed;
  write_json_atomic((dir / "regularity.json").string(), rj);
  write_text_atomic((dir / "suites.csv").string(), suites);
  for (const auto& sc : rep.scans) {
    const std::string sp = space_name(sc.space);
    const std::string var = sc.variation == Variation::s_fixed ? "s_fixed" : "t_fixed";
    std::string csv = "delta[time],modulus[L(" + sp + ") via gram_" + sp + "],t,s\n";
    for (size_t k = 0; k < sc.lags.size(); ++k)
      csv += num(sc.lags[k]) + "," + num(sc.modulus[k]) + "," + num(sc.arg_t[k]) + "," + num(sc.arg_s[k]) + "\n";
    write_text_atomic((dir / "plotdata" / ("modulus_" + sp + "_" + var + ".csv")).string(), csv);
  }
  {
    std::string csv = "delta[time],modulus_U1[L(V) via gram_V],t,s\n";
    for (size_t k = 0; k < u1.lags.size(); ++k)
      csv += num(u1.lags[k]) + "," + num(u1.modulus[k]) + "," + num(u1.arg_t[k]) + "," + num(u1.arg_s[k]) + "\n";
    write_text_atomic((dir / "plotdata" / "modulus_U1_V_s_fixed.csv").string(), csv);
  }
  for (size_t k = 0; k < rep.sv_profiles.size(); ++k) {
    const SvProfile& pr = rep.sv_profiles[k];
    const std::string geo = sv_geometry_name(pr.geometry);
    const char* grams = pr.geometry == SvGeometry::H_to_H   ? "gram_H -> gram_H"
                        : pr.geometry == SvGeometry::V_to_V ? "gram_V -> gram_V"
                                                            : "gram_H -> gram_V";
    std::string csv = "k,singular_value[" + geo + " via " + grams + "],t,s\n";
    for (Eigen::Index q = 0; q < pr.values.size(); ++q)
      csv += std::to_string(q + 1) + "," + num(pr.values(q)) + "," + num(pr.t) + "," + num(pr.s) + "\n";
    std::string tag = geo;
    std::replace(tag.begin(), tag.end(), '-', '_');
    tag.erase(std::remove(tag.begin(), tag.end(), '>'), tag.end());
    write_text_atomic((dir / "plotdata" / ("sv_profile_" + std::to_string(k / 3) + "_" + tag + ".csv")).string(), csv);
  }
  {
    const RVec e = embedding_singular_values(p.form.triple());
    std::string csv = "k,embedding_singular_value[V->H via gram_V -> gram_H]\n";
    for (Eigen::Index q = 0; q < e.size(); ++q) csv += std::to_string(q + 1) + "," + num(e(q)) + "\n";
    write_text_atomic((dir / "plotdata" / "embedding_sv.csv").string(), csv);
  }
  if (!rep.gibbs.rows.empty()) {
    std::string csv = "n";
    for (const auto& [pp, v] : rep.gibbs.rows.front().schatten) csv += ",S_" + pkey(pp) + "[H->H via gram_H]";
    csv += ",embedding_S1[V->H via gram_V / gram_H]\n";
    for (const auto& r : rep.gibbs.rows) {
      csv += std::to_string(r.n);
      for (const auto& [pp, v] : r.schatten) csv += "," + num(v);
      csv += "," + num(r.embedding_S1) + "\n";
    }
    write_text_atomic((dir / "plotdata" / "gibbs.csv").string(), csv);
  }
  int failed = 0;
  for (const auto& [k, v] : rep.flags) failed += v ? 0 : 1;
  log << "verify: " << rep.flags.size() - static_cast<size_t>(failed) << " of " << rep.flags.size() << " flags pass\n";
  for (const auto& [k, v] : rep.flags)
    if (!v) log << "  failed: " << k << "\n";
  return 0;
}

int cmd_robin(const ExperimentConfig& c, const std::string& out_dir, std::ostream& log) {
  auto wants = [&](const char* st) { return std::find(c.stages.begin(), c.stages.end(), st) != c.stages.end(); };
  if (wants("bounds")) {
    const int r = cmd_bounds(c, out_dir, log);
    if (r != 0) return r;
  }
  if (wants("evolve")) {
    const int r = cmd_evolve(c, out_dir, log);
    if (r != 0) return r;
  }
  if (!wants("verify")) return 0;
  const int rv = cmd_verify(c, out_dir, log);
  if (rv != 0) return rv;
  const json reg = read_json_file((fs::path(out_dir) / "regularity.json").string());
  json flags = reg.at("flags");
  flags["dini_gate"] = true;
  bool all = true;
  for (const auto& [k, v] : flags.items()) all = all && v.get<bool>();
  json summary = {{"problem", c.problem ? robin_problem_to_json(*c.problem) : json(config_form(c).description)},
                  {"seed", c.seed},
                  {"flags", flags},
                  {"all_pass", all}};
  if (reg.contains("gibbs")) summary["gibbs_verdict"] = reg["gibbs"].value("verdict", "");
  write_json_atomic((fs::path(out_dir) / "summary.json").string(), summary);
  log << "robin: " << (all ? "all flags pass" : "some flags fail") << "\n";
  return 0;
}

int cmd_report(const std::string& out_dir, std::ostream& log) {
  const fs::path dir(out_dir);
  const fs::path sp = dir / "summary.json";
  if (!fs::exists(sp)) fail(ErrorCode::MissingDependency, "summary.json not found in '" + out_dir + "'; run 'robin' first");
  const json s = read_json_file(sp.string());
  std::ostringstream os;
  os << "bundle " << out_dir << "\n";
  for (const char* f : {"bounds.json", "table.json", "pairs.csv", "regularity.json", "suites.csv"})
    os << "  " << f << (fs::exists(dir / f) ? "" : " (missing)") << "\n";
  os << "flags:\n";
  for (const auto& [k, v] : s.at("flags").items()) os << "  " << (v.get<bool>() ? "PASS " : "FAIL ") << k << "\n";
  if (s.contains("gibbs_verdict")) os << "gibbs: " << s["gibbs_verdict"].get<std::string>() << "\n";
  os << "all_pass: " << (s.value("all_pass", false) ? "true" : "false") << "\n";
  write_text_atomic((dir / "report.txt").string(), os.str());
  log << os.str();
  return 0;
}

int run_command(const std::string& name, const std::string& config_path, const std::string& out,
                std::optional<std::uint64_t> seed, std::ostream& log) {
  try {
    if (name == "report") return cmd_report(out.empty() ? "out" : out, log);
    if (config_path.empty()) fail(ErrorCode::ConfigError, "--config is required for '" + name + "'");
    ExperimentConfig c = load_config(config_path);
    if (seed) c.seed = *seed;
    const std::string out_dir = out.empty() ? c.out_dir : out;
    if (name == "bounds") return cmd_bounds(c, out_dir, log);
    if (name == "evolve") return cmd_evolve(c, out_dir, log);
    if (name == "verify") return cmd_verify(c, out_dir, log);
    if (name == "robin") return cmd_robin(c, out_dir, log);
    fail(ErrorCode::ConfigError, "unknown command '" + name + "'");
  } catch (const Error& e) {
    log << e.what() << "\n";
    return e.code() == ErrorCode::DiniViolated ? 2 : 1;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return 1;
  }
}

} // namespace evolab
