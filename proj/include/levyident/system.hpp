#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace levyident {

// Monic ARMA(p,q) transfer function:
//   dy_n = -sum_i a_i dy_{n-i} + dz_n + sum_j c_j dz_{n-j}
// theta = (a_1..a_p, c_1..c_q). Stability (and inverse stability) means all
// roots of 1 + sum a_i z^i (resp. 1 + sum c_j z^j) lie outside the unit disk.
struct SisoSystem {
  std::vector<double> ar;  // a_1..a_p
  std::vector<double> ma;  // c_1..c_q

  int p() const { return static_cast<int>(ar.size()); }
  int q() const { return static_cast<int>(ma.size()); }
  int dim() const { return p() + q(); }

  Eigen::VectorXd theta() const;
  static SisoSystem from_theta(const Eigen::VectorXd& theta, int p, int q);
};

struct Trajectory {
  std::vector<double> dy;
  double h = 1.0;
};

// min over both coefficient polynomials of (smallest root modulus - 1);
// positive iff the system is stable and inversely stable.
double stability_margin(const SisoSystem& sys);

// Margin of the AR (forward stability) and MA (inverse stability) polynomial
// alone.
double forward_stability_margin(const SisoSystem& sys);
double inverse_stability_margin(const SisoSystem& sys);

// ARMA recursion with zero initial conditions. Rejects unstable systems.
Trajectory forward_filter(std::span<const double> dz, const SisoSystem& theta,
                          double h = 1.0);

// Inverse (innovation) filter with zero initial conditions. Rejects
// inversely-unstable systems.
std::vector<double> innovation_filter(const Trajectory& traj,
                                      const SisoSystem& theta);

struct Sensitivities {
  Eigen::MatrixXd first;                 // N x dim
  std::vector<Eigen::MatrixXd> second;   // dim matrices, each N x dim (order 2)
};

// Exact recursive derivatives of the innovation process w.r.t. theta, zero
// initial conditions. order is 1 or 2.
Sensitivities innovation_sensitivities(const Trajectory& traj,
                                       const SisoSystem& theta, int order = 1);

// Test support: max_{n >= n0} |innovations from a burned-in trajectory minus
// innovations from the zero-IC trajectory| on the aligned window.
double stationary_tail_gap(const SisoSystem& theta, std::span<const double> dz,
                           std::size_t burnin, std::size_t n0);

}  // namespace levyident
