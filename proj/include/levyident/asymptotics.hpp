#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "levyident/ecf.hpp"
#include "levyident/noise.hpp"
#include "levyident/system.hpp"

namespace levyident {

// Per-sample curvature scalar of the asymptotic ECF cost in theta:
// W_thetatheta = w * E[eps_theta eps_theta^T].
double w_scalar(const EcfGrid& grid, const NoiseModel& eta, double t = 1.0);

// Auxiliary function F(a,b,c,d) = ab [phi(a+b+c+d) - phi(a+b+c)phi(d)
//   - phi(a+b+d)phi(c) + phi(a+b)phi(c)phi(d)].
std::complex<double> f_aux(double a, double b, double c, double d,
                           const NoiseModel& eta, double t = 1.0);

// Per-sample variance scalar of the theta-score:
// Cov(V_theta per term) = s * E[eps_theta eps_theta^T]. O(k^4) sum.
double s_scalar(const EcfGrid& grid, const NoiseModel& eta, double t = 1.0);

struct EtaBlocks {
  Eigen::MatrixXd w_eta_eta;  // Hessian block of the asymptotic cost
  Eigen::MatrixXd cov_v_eta;  // per-sample covariance of the eta-score
};

// Both blocks restricted to the given eta coordinates (empty = all).
EtaBlocks eta_blocks(const EcfGrid& grid, const NoiseModel& eta,
                     const std::vector<int>& free_eta = {}, double t = 1.0);

// Sigma_P = (E[eps*_theta eps*_theta^T])^{-1}. Closed form for ARMA(1,0),
// long-run Monte Carlo Gram average otherwise.
Eigen::MatrixXd sigma_p(const SisoSystem& theta_star, const NoiseModel& eta,
                        std::size_t n_mc = 1'000'000, std::uint64_t seed = 1);

// g(u) = -(phi(2u)/phi(u)^2 + phi(-2u)/phi(-u)^2 - 2/(phi(u)phi(-u))).
// Evaluated after rescaling eta to unit variance. u must be nonzero.
double efficiency_g(double u, const NoiseModel& eta);

// Single-term ECF-to-PE variance ratio s/w^2 = g(u)/(4u^2).
double efficiency_ratio(double u, const NoiseModel& eta);

struct OptimalU {
  double u = 0.0;
  double ratio = 1.0;
  bool unimodal = true;  // false: grid scan found a non-unimodal profile
};

// Minimizer of the single-term ratio over [lo, hi] (grid scan plus golden
// section refinement). lo is floored at 1e-3.
OptimalU optimal_u(const NoiseModel& eta, double lo = 1e-3, double hi = 3.0);

struct AsymptoticReport {
  double w = 0.0;
  double s = 0.0;
  double ratio = 0.0;  // s / w^2
  Eigen::MatrixXd sigma_p;
  Eigen::MatrixXd sigma_e;  // ratio * sigma_p
  Eigen::MatrixXd r_star_theta;
  Eigen::MatrixXd r_star_eta;
  Eigen::MatrixXd cov_v_eta;
};

AsymptoticReport asymptotic_report(const EcfGrid& grid,
                                   const SisoSystem& theta_star,
                                   const NoiseModel& eta,
                                   const std::vector<int>& free_eta = {},
                                   std::size_t n_mc = 1'000'000,
                                   std::uint64_t seed = 1);

}  // namespace levyident
