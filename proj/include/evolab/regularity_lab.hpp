#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "evolab/evolution_family.hpp"

namespace evolab {

/// nodes: starts, starts + lags, anchors, anchors + lags (merged, sorted)
TimeGrid scan_time_grid(const std::vector<double>& starts, const std::vector<double>& anchors,
                        const std::vector<double>& lags, double horizon);

enum class Variation { s_fixed, t_fixed };

struct ContinuityScan {
  Space space = Space::V;
  Variation variation = Variation::s_fixed;
  double fixed = 0.0;
  std::vector<double> lags;
  std::vector<double> modulus;
  /// the pair (t, s) attaining each value
  std::vector<double> arg_t, arg_s;
  /// smallest C with modulus <= C (log(1 + delta / (t - s)) + omega(delta))
  double fitted_C = 0.0;
  bool monotone = false;
};

/// s_fixed: max_t ||U(t + delta, s) - U(t, s)||; t_fixed: max_s ||U(t, s + delta) - U(t, s)||,
/// over table pairs with (t - s) >= min_separation
ContinuityScan norm_continuity_scan(const NonAutonomousForm& form, const EvolutionTable& table, Space space,
                                    Variation variation, double fixed, double min_separation,
                                    const std::vector<double>& lags, const DiniModulus& modulus);

enum class SvGeometry { H_to_H, V_to_V, H_to_V };
const char* sv_geometry_name(SvGeometry g);

/// singular values of U in the chosen geometry, decreasing
RVec singular_value_profile(const NonAutonomousForm& form, const Mat& U, SvGeometry geometry);

/// l^p norm of the singular values; p in [1, inf)
double schatten_norm(const RVec& singular_values, double p);
/// Euclidean singular values
double schatten_norm(const Mat& K, double p);

struct GibbsRow {
  int n = 0;
  std::map<double, double> schatten;
  double embedding_S1 = 0.0;
};

struct GibbsStudy {
  double t = 0.0, s = 0.0;
  std::vector<GibbsRow> rows;
  /// relative change of S_1 between the two largest dims
  double trace_change = 0.0;
  /// relative S_p change between consecutive dims, per p
  std::map<double, std::vector<double>> changes;
  /// relative growth of the embedding S_1 sum per consecutive dims
  std::vector<double> embedding_growth;
  bool trace_stable = false;
  bool embedding_diverges = false;
  std::string verdict;
};

/// U(t, s) from a CN run for each dimension; S_p in the H geometry
GibbsStudy gibbs_refinement_study(const std::function<NonAutonomousForm(int)>& generator, const std::vector<int>& dims,
                                  double t, double s, const std::vector<double>& p_list);

struct SvProfile {
  double t = 0.0, s = 0.0;
  SvGeometry geometry = SvGeometry::H_to_H;
  RVec values;
};

struct RegularityReport {
  std::vector<ContinuityScan> scans;
  std::vector<SvProfile> sv_profiles;
  /// p -> S_p of the profiled entries, first profile
  std::map<double, double> schatten;
  GibbsStudy gibbs;
  std::map<std::string, bool> flags;
};

json scan_to_json(const ContinuityScan& scan);
json gibbs_to_json(const GibbsStudy& study);
json regularity_to_json(const RegularityReport& report);

} // namespace evolab
