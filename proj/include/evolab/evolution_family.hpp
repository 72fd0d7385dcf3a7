#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "evolab/form_family.hpp"
#include "evolab/volterra.hpp"

namespace evolab {

struct TimeGrid {
  std::vector<double> nodes;
  /// "uniform", "geometric" or "scan"
  std::string grading = "uniform";
  double anchor = 0.0;
};

TimeGrid uniform_time_grid(double a, double b, int intervals);
/// nodes s + (T - s) ratio^k, k = levels..0, preceded by s itself
TimeGrid geometric_time_grid(double s, double T, int levels, double ratio = 0.5);

/// u(t_k) in primal coordinates; u(s) = initial
struct Trajectory {
  double s = 0.0;
  Mat initial;
  std::vector<double> times;
  std::vector<Mat> states;
  int fallback_steps = 0;
};

enum class Scheme { implicit_euler, crank_nicolson };

struct StepOptions {
  Scheme scheme = Scheme::crank_nicolson;
  /// 0: T / 256
  double max_step = 0.0;
  /// 0: min(1e-7 T, 0.1 / lambda_hi)
  double first_step = 0.0;
  double growth = 1.05;
  bool graded = true;
  /// combine the step sequence with its bisection
  bool richardson = false;
  /// keep every step in the trajectory, not only the outputs
  bool record_all = false;
};

/// theta-scheme for G_H u' + A_form(t) u = 0, u(s) = X; states at `outputs` (each > s)
Trajectory step_solve(const NonAutonomousForm& form, double s, const Mat& X, const std::vector<double>& outputs,
                      const StepOptions& options = {});

/// G_H u' + A_form(t) u = f(t), f action-valued
Trajectory step_solve_forced(const NonAutonomousForm& form, double s, const Vec& x,
                             const std::function<Vec(double)>& f, const std::vector<double>& outputs,
                             const StepOptions& options = {});

/// the time sequence used by step_solve, landing on every output
std::vector<double> step_times(double s, const std::vector<double>& outputs, double horizon, double lambda_hi,
                               const StepOptions& options);

/// e^{-(t - s) A(t)} x
Mat u1_apply(const NonAutonomousForm& form, double t, double s, const Mat& X);

/// (P_s h)(tau) at the outputs; h is sampled at the quadrature nodes
Trajectory p_apply(const NonAutonomousForm& form, double s, const std::function<Mat(double)>& h,
                   const std::vector<double>& outputs, const VolterraOptions& options = {});

struct ShiftCertificate {
  double mu = 0.0;
  /// rigorous bound on the discrete ||P_s|| in sup-V-norm
  double bound = 0.0;
  /// largest sup-V-norm ratio over random piecewise-linear probes
  double probe_estimate = 0.0;
  int probes = 0;
  std::vector<double> mu_history;
  std::vector<double> bound_history;
  NonAutonomousForm shifted;
  std::shared_ptr<const VolterraDiscretization> discretization;
};

/// mu = 0 for autonomous forms; otherwise mu = 1, 2, 4, ... until the bound is below 1/4
ShiftCertificate p_norm_and_shift(const NonAutonomousForm& form, double s, const std::vector<double>& outputs,
                                  int probes = 64, std::uint64_t seed = 0x5eed,
                                  const VolterraOptions& options = {});

struct NeumannResult {
  Trajectory trajectory;
  double certified = 0.0;
  /// sup-V-norm of h_k, k = 0, 1, ...
  std::vector<double> increments;
  std::vector<double> ratios;
  double truncation_bound = 0.0;
  int iterations = 0;
};

/// U(., s) X = sum_k P_s^k U_1(., s) X; `form` must already carry the certified shift
NeumannResult neumann_solve(const VolterraDiscretization& disc, const Mat& X, double tol = 1e-8);
NeumannResult neumann_solve(const NonAutonomousForm& form, double s, const Mat& X, const std::vector<double>& outputs,
                            double tol = 1e-8, const VolterraOptions& options = {});

/// multiply u(t) by e^{mu (t - s)}
Trajectory unshift(const Trajectory& traj, double mu);

enum class TableMethod { stepper, neumann, frozen };
const char* table_method_name(TableMethod method);

struct EvolutionTable {
  TimeGrid grid;
  /// packed lower triangle, entry (i, j) at i (i + 1) / 2 + j
  std::vector<Mat> entries;
  TableMethod method = TableMethod::stepper;
  double shift_applied = 0.0;
  /// Neumann columns only: largest certified bound and every observed increment ratio
  double neumann_certified = 0.0;
  std::vector<double> neumann_ratios;

  size_t size() const { return grid.nodes.size(); }
  const Mat& at(size_t i, size_t j) const;
  Mat& at(size_t i, size_t j);
};

struct TableOptions {
  StepOptions step{Scheme::crank_nicolson, 0.0, 0.0, 1.05, true, true, false};
  double neumann_tol = 1e-8;
  VolterraOptions volterra;
};

/// Columns from every t_j with X = I; diagonal entries are exactly I.
/// Neumann columns require ||P_{t_j}|| < 1/4 for `form` as given.
EvolutionTable build_table(const NonAutonomousForm& form, const TimeGrid& grid, TableMethod method,
                           const TableOptions& options = {});

EvolutionTable unshift(const EvolutionTable& table, double mu);

enum class DuhamelMethod { evolution_quadrature, forced_stepper };

/// v(t) = int_0^t U(t, r) G_H^{-1} f(r) dr on grid.nodes, v(grid.nodes[0]) = 0
Trajectory duhamel_solve(const NonAutonomousForm& form, const std::function<Vec(double)>& f, const TimeGrid& grid,
                         DuhamelMethod method, const StepOptions& options = {});

/// max over i >= k >= j of ||U_ij - U_ik U_kj||_{L(H)}
double evolution_law_residual(const NonAutonomousForm& form, const EvolutionTable& table);

struct EnergyReport {
  double max_norm_H = 0.0;
  bool contractive = false;
  /// largest excess of ||U x||^2 - ||x||^2 + 2 alpha int ||U x||_V^2 over ||x||_H = 1
  double energy_excess = 0.0;
  bool energy_ok = false;
  /// ||u(t)||^2 - ||x||^2 + 2 int Re a(r; u, u) dr, trajectories only
  double identity_residual = 0.0;
};

/// the integral uses right endpoints, which undercounts when ||U(r, s) x||_V decreases
EnergyReport contractivity_energy_check(const NonAutonomousForm& form, const EvolutionTable& table, double alpha,
                                        double tol = 1e-10);
EnergyReport contractivity_energy_check(const NonAutonomousForm& form, const Trajectory& traj, double alpha,
                                        double tol = 1e-10);

json table_to_json(const EvolutionTable& table);
EvolutionTable table_from_json(const json& j);

/// rows i, j, t_i, t_j, ||U||_{L(H)}, ||U||_{L(V)}, max_k ||U_ij - U_ik U_kj||_{L(H)}
/// and, if given, ||U - other||_{L(H)}
std::string pairs_csv(const NonAutonomousForm& form, const EvolutionTable& table,
                      const EvolutionTable* other = nullptr);

} // namespace evolab
