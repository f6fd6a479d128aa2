#pragma once

#include <optional>

#include "levyident/ecf.hpp"

namespace levyident {

// V_{P,N}(theta) = (1/2) sum eps_n(theta)^2.
double pe_cost(const Trajectory& traj, const SisoSystem& theta);

// Gauss-Newton on the residuals eps_n(theta).
Estimate estimate_pe(const Trajectory& traj, const SisoSystem& init,
                     const OptimOptions& opts);

// Extended PE for nonzero-mean noise: minimizes (1/2) sum (eps_n - m)^2 over
// (theta, m). The fitted mean is reported in Estimate.rho.mean_shift.
Estimate estimate_pe_with_mean(const Trajectory& traj, const SisoSystem& init,
                               double init_mean, const OptimOptions& opts);

struct CombinedOptions {
  EstimateOptions ecf;          // eta stage: grid box/free-eta settings
  OptimOptions pe;              // theta stage
  bool estimate_mean = false;   // use the extended (theta, m) PE stage
  bool second_pass = false;     // re-estimate theta by single-term ECF
  std::optional<double> second_pass_u;  // default: asymptotics g-minimizer
};

// Stage 1: theta (and optionally m) by PE. Stage 2: eta by ECF with theta
// frozen. Stage 3 (optional): recenter the data and re-estimate theta by a
// single-term ECF with eta fixed at the stage-2 value.
Estimate combined_pe_ecf(const Trajectory& traj, const JointParams& init,
                         const EcfGrid& grid, const CombinedOptions& opts);

}  // namespace levyident
