#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "vort/io.hpp"

namespace vort {

/* Flat experiment description: CLI flags plus the key-value config file.
 * Defaults depend on the experiment kind and are echoed, together with the
 * pass/fail thresholds, into every manifest.
 */
struct ExperimentConfig {
  std::string kind;  // invariance | scaling | sandwich | triviality | chaos-check | calibrate
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  int threads = 1;
  bool negative_control = false;

  int M = 4;
  double cutoff = 8.0;
  std::vector<double> thetas{1.0};
  std::vector<double> N_grid{8.0};
  double lambda_hat = 1.0;
  double dt = 1e-3;
  double T = 0.5;
  int record_every = 100;
  std::int64_t n_traj = 10000;  // statistical ensembles
  std::int64_t mc_traj = 0;     // sandwich / scaling cross-check ensemble, 0 skips
  std::vector<double> kappas{1.0};
  std::vector<std::string> phis{"gauss_r1"};
  int pair_count = 50;  // chaos-check random kernel pairs per N

  double z_max = 4.0;
  double window_max = 2.0;
  double slope_tol = 0.2;
  double decrease_factor = 4.0;

  Config raw;

  static ExperimentConfig load(const std::string& kind, const std::string& config_path,
                               std::uint64_t seed, const std::string& out_dir, int threads,
                               bool negative_control);
  void validate() const;  // grid non-empty, cutoff >= max N, ensemble sizes
};

/* What a runner hands back: asserted checks as printable lines, headline
 * numbers for downstream consumers, and the list of files written (CSV
 * tables, gnuplot scripts, manifest.json with config echo, input hash,
 * timings, and a sha256 per output).
 */
struct RunOutcome {
  bool pass = true;
  std::vector<std::string> checks;
  nlohmann::json summary;
  std::vector<std::string> files;
};

RunOutcome run_invariance(const ExperimentConfig& ec);
RunOutcome run_scaling(const ExperimentConfig& ec);
RunOutcome run_sandwich(const ExperimentConfig& ec);
RunOutcome run_triviality(const ExperimentConfig& ec);
RunOutcome run_chaos_check(const ExperimentConfig& ec);
RunOutcome run_calibrate(const ExperimentConfig& ec);

RunOutcome run_experiment(const ExperimentConfig& ec);  // dispatch on kind

}  // namespace vort
