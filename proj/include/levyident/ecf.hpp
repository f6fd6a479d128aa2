#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "levyident/noise.hpp"
#include "levyident/optim.hpp"
#include "levyident/system.hpp"

namespace levyident {

// Evaluation points u_1..u_k with a symmetric positive-definite weighting
// matrix K; caches K^{-1/2} (lower-triangular, L^{-1} from K = L L^T).
struct EcfGrid {
  Eigen::VectorXd u;
  Eigen::MatrixXd k_weight;
  Eigen::MatrixXd k_inv_sqrt;

  int k() const { return static_cast<int>(u.size()); }

  static EcfGrid make(Eigen::VectorXd u, Eigen::MatrixXd k_weight);
  static EcfGrid make_identity(Eigen::VectorXd u);
  // (0.1, 0.2, ..., 0.1k), K = I.
  static EcfGrid default_grid(int k);
};

// Joint parameter rho = (theta, eta). mean_shift subtracts a known constant
// from the noise (used by the second-pass recentered estimation); the model
// characteristic function becomes phi(u) e^{-iu mean_shift}.
struct JointParams {
  SisoSystem theta;
  NoiseModel eta;
  double mean_shift = 0.0;
};

// h_n(u) = e^{iu eps_n} - phi(u, h, eta).
std::complex<double> score(double u, double eps_n, double h, const NoiseModel& eta);

// V_N(rho) = sum_n |K^{-1/2} h_n(rho)|^2.
double cost(const Trajectory& traj, const JointParams& rho, const EcfGrid& grid);

// Gradient of the cost w.r.t. (theta, eta), dim p+q+dim(eta).
Eigen::VectorXd cost_grad(const Trajectory& traj, const JointParams& rho,
                          const EcfGrid& grid);

struct EstimateOptions {
  OptimOptions optim;          // box refers to the free coordinates, in order
  std::vector<int> free_eta;   // eta coordinate indices to estimate
};

struct Estimate {
  JointParams rho;
  double cost = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  OptimStatus status = OptimStatus::MaxIterations;
  Eigen::MatrixXd covariance;  // asymptotic, for the free coordinates
  bool has_covariance = false;
  std::vector<std::string> stages;  // combined-pipeline trace
};

// Minimize V_N over (theta, free eta coordinates). Requires 2k >= number of
// free coordinates for an identifiable Gauss-Newton step.
Estimate estimate_joint(const Trajectory& traj, const JointParams& init,
                        const EcfGrid& grid, const EstimateOptions& opts);

// Known theta: the classic i.i.d. ECF fit on the innovations.
Estimate estimate_eta_known_theta(const Trajectory& traj,
                                  const SisoSystem& theta_star,
                                  const NoiseModel& init_eta, const EcfGrid& grid,
                                  const EstimateOptions& opts);

// Known eta: the single/multi-term ECF estimator of the system parameters.
Estimate estimate_theta_known_eta(const Trajectory& traj, const JointParams& init,
                                  const EcfGrid& grid, const EstimateOptions& opts);

}  // namespace levyident
