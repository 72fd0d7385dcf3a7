#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "evolab/evolution_family.hpp"
#include "evolab/regularity_lab.hpp"
#include "evolab/robin_heat.hpp"

namespace evolab {

struct ExperimentConfig {
  /// "a1", "scalar-linear", "autonomous-symmetric", "robin" or empty
  std::string fixture;
  /// set for Robin problems, which also enables the refinement studies
  std::optional<RobinProblem> problem;
  /// a form_from_json spec, used when neither fixture nor problem is given
  json form_spec;

  int table_intervals = 16;
  double neumann_tol = 1e-8;
  int probes = 64;
  std::uint64_t seed = 0x5eed;

  std::vector<double> schatten_p{1.0, 1.5, 2.0};
  bool gibbs = true;
  std::vector<int> gibbs_dims{32, 64, 128, 256};
  double gibbs_t = 0.1, gibbs_s = 0.0;

  /// lags T 2^{-k}, k in [lag_min_level, lag_max_level]
  int lag_min_level = 9, lag_max_level = 13;
  /// in units of T
  std::vector<double> scan_starts{0.0, 0.2};
  std::vector<double> scan_anchors{0.1, 0.25, 0.5, 0.75, 0.9};
  double min_separation = 0.1;

  int suite_per_decade = 2;
  std::vector<int> refinement_dims{32, 64, 128};

  /// used when the command line gives no --out
  std::string out_dir = "out";
  /// subset of bounds, evolve, verify run by the full pipeline
  std::vector<std::string> stages{"bounds", "evolve", "verify"};
};

ExperimentConfig config_from_json(const json& j);
ExperimentConfig load_config(const std::string& path);
NonAutonomousForm config_form(const ExperimentConfig& config);

/// Each command writes into `out_dir`; the return value is the exit code
/// (0 success, 2 mathematical gate refusal, 1 operational error).
int cmd_bounds(const ExperimentConfig& config, const std::string& out_dir, std::ostream& log);
int cmd_evolve(const ExperimentConfig& config, const std::string& out_dir, std::ostream& log);
int cmd_verify(const ExperimentConfig& config, const std::string& out_dir, std::ostream& log);
/// bounds, evolve and verify, then summary.json
int cmd_robin(const ExperimentConfig& config, const std::string& out_dir, std::ostream& log);
/// summarizes an existing bundle into report.txt
int cmd_report(const std::string& out_dir, std::ostream& log);

/// name -> command, with errors mapped to exit codes and printed to `log`;
/// an empty out_dir falls back to the config's
int run_command(const std::string& name, const std::string& config_path, const std::string& out_dir,
                std::optional<std::uint64_t> seed, std::ostream& log);

} // namespace evolab
