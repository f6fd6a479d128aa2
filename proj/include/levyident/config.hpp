#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "levyident/ecf.hpp"
#include "levyident/noise.hpp"
#include "levyident/system.hpp"

namespace levyident {

enum class Mode {
  Simulate,
  EstimatePe,
  EstimateEcf,
  EstimateCombined,
  Efficiency,
  McValidate,
};

std::string to_string(Mode mode);

// Which estimator a mc-validate run replicates.
enum class McEstimator {
  Pe,        // prediction-error theta
  EcfTheta,  // ECF theta with eta known
  EcfJoint,  // joint (theta, free eta)
  EcfEta,    // ECF eta with theta known
  Combined,  // PE theta then ECF eta
};

std::string to_string(McEstimator est);

// Thrown by config parsing/validation; the message lists every violation.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  Mode mode = Mode::Simulate;
  SisoSystem system;
  NoiseModel noise = NoiseModel::cgmy(1.0, 1.0, 1.0, 0.5);
  SamplingConfig sampling;
  EcfGrid grid = EcfGrid::default_grid(10);
  std::size_t n_samples = 10'000;
  int n_replications = 1;
  std::uint64_t seed = 1;
  McEstimator estimator = McEstimator::EcfTheta;
  std::vector<int> free_eta;  // empty = all eta coordinates
  bool estimate_mean = false;
  bool second_pass = false;
  std::optional<double> second_pass_u;
  // Optional box D_rho for the free coordinates, in optimizer order.
  Eigen::VectorXd domain_lower, domain_upper;
  JointParams init;  // optimizer start; defaults to the generating parameters
  int efficiency_max_k = 20;  // multi-u scan bound for mode=efficiency
  std::string output_dir = ".";

  // Free eta indices with the empty-means-all default applied.
  std::vector<int> resolved_free_eta() const;
  // Number of coordinates the selected estimator optimizes.
  int free_dim() const;
};

// Parse + default + cross-validate a config text. Collects all semantic
// violations into one ConfigError; parse errors carry line numbers.
ExperimentConfig validate_config(const std::string& text);

ExperimentConfig load_config(const std::string& path);

}  // namespace levyident
