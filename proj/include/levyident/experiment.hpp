#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "levyident/asymptotics.hpp"
#include "levyident/config.hpp"
#include "levyident/ecf.hpp"
#include "levyident/pe.hpp"

namespace levyident {

// More than 5% of the replications failed.
struct FailureBudgetExceeded : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ReplicationFailure {
  int index = 0;
  std::string reason;
};

struct McReport {
  std::string estimator;
  std::size_t n_samples = 0;
  int n_replications = 0;
  int n_success = 0;
  std::vector<std::string> coord_names;      // free coordinates, optimizer order
  std::vector<int> replication_index;        // successful replications
  std::vector<Eigen::VectorXd> per_replication;  // free coordinates per success
  std::vector<ReplicationFailure> failures;
  Eigen::VectorXd empirical_mean;
  Eigen::MatrixXd empirical_cov_scaled;  // N * unbiased sample covariance
  Eigen::MatrixXd closed_form_cov;       // asymptotic prediction, same scale
  Eigen::MatrixXd ratio_table;           // empirical / closed-form, entrywise
};

struct EfficiencyRow {
  double u = 0.0, g = 0.0, ratio = 0.0;
};

struct EfficiencyReport {
  std::vector<EfficiencyRow> scan;  // single-term ratio over a u-grid
  double u_opt = 0.0;
  double ratio_min = 1.0;
  bool unimodal = true;
  std::vector<int> k_values;          // multi-u table: default grids k=1..max
  std::vector<double> k_ratios;       // s/w^2 per k
  int best_k = 0;
  double best_ratio = 1.0;
};

// Trajectory CSV: header "dy,h=<h>,n=<N>", then one increment per line.
void write_trajectory_csv(const std::string& path, const Trajectory& traj);
Trajectory read_trajectory_csv(const std::string& path);

// Noise increments and trajectory for one replication; the replication seed
// is derive_seed(cfg.seed, rep).
Trajectory simulate_trajectory(const ExperimentConfig& cfg, int rep);

// One estimator run on one replication. Throws on estimator failure.
Estimate run_replication(const ExperimentConfig& cfg, int rep);

// Replicated estimation with a 5% failure budget; deterministic in the
// worker count (per-replication seeds, index-order aggregation).
McReport mc_validate(const ExperimentConfig& cfg, int workers);

// Single-term u-scan plus the multi-u (default grid) s/w^2 table, both on
// the unit-variance rescaling of cfg.noise.
EfficiencyReport efficiency_report(const ExperimentConfig& cfg);

// Closed-form N*Cov prediction for the free coordinates of cfg's estimator.
Eigen::MatrixXd closed_form_covariance(const ExperimentConfig& cfg);

// JSON/CSV serialization (stable key order; atomic file replacement).
std::string to_json(const McReport& report);
std::string to_json(const Estimate& est, const ExperimentConfig& cfg);
std::string to_json(const EfficiencyReport& report);
void write_file_atomic(const std::string& path, const std::string& content);

// Mode dispatch: runs the experiment and persists outputs under
// cfg.output_dir (overridden by out_dir if nonempty). Returns the list of
// files written.
std::vector<std::string> run(const ExperimentConfig& cfg, int workers = 1,
                             const std::string& out_dir = "");

}  // namespace levyident
