#include "levyident/pe.hpp"

#include <cmath>
#include <stdexcept>

#include "levyident/asymptotics.hpp"

namespace levyident {

namespace {

constexpr double kMarginTol = 1e-6;

// Residuals eps_n(theta) - m with Jacobian; x = (theta, [m]).
ResidualFn pe_residuals(const Trajectory& traj, int p, int q, bool with_mean) {
  return [&traj, p, q, with_mean](const Eigen::VectorXd& x, Eigen::VectorXd& r,
                                  Eigen::MatrixXd& jac) -> bool {
    const int d = p + q;
    const SisoSystem sys = SisoSystem::from_theta(x.head(d), p, q);
    if (inverse_stability_margin(sys) <= kMarginTol ||
        forward_stability_margin(sys) <= kMarginTol)
      return false;
    const double m = with_mean ? x[d] : 0.0;
    const std::vector<double> eps = innovation_filter(traj, sys);
    const Eigen::MatrixXd sens = innovation_sensitivities(traj, sys, 1).first;
    const std::size_t n = eps.size();
    r.resize(n);
    jac.resize(n, d + (with_mean ? 1 : 0));
    for (std::size_t t = 0; t < n; ++t) {
      r[t] = eps[t] - m;
      jac.block(t, 0, 1, d) = sens.row(t);
      if (with_mean) jac(t, d) = -1.0;
    }
    return r.allFinite() && jac.allFinite();
  };
}

Estimate to_estimate(const OptimResult& res, const JointParams& base, int p,
                     int q, bool with_mean) {
  Estimate est;
  est.rho = base;
  est.rho.theta = SisoSystem::from_theta(res.x.head(p + q), p, q);
  if (with_mean) est.rho.mean_shift = res.x[p + q];
  est.cost = 0.5 * res.cost;  // module convention: (1/2) sum eps^2
  est.grad_norm = res.grad_norm;
  est.iterations = res.iterations;
  est.status = res.status;
  est.converged = res.status == OptimStatus::Converged;
  return est;
}

}  // namespace

double pe_cost(const Trajectory& traj, const SisoSystem& theta) {
  const std::vector<double> eps = innovation_filter(traj, theta);
  double s = 0.0;
  for (double e : eps) s += e * e;
  return 0.5 * s;
}

Estimate estimate_pe(const Trajectory& traj, const SisoSystem& init,
                     const OptimOptions& opts) {
  const int p = init.p(), q = init.q();
  if (p + q < 1) throw std::invalid_argument("estimate_pe: empty theta");
  const OptimResult res =
      levenberg_marquardt(pe_residuals(traj, p, q, false), init.theta(), opts);
  JointParams base{init, NoiseModel::cgmy(1, 1, 1, 0.5)};
  return to_estimate(res, base, p, q, false);
}

Estimate estimate_pe_with_mean(const Trajectory& traj, const SisoSystem& init,
                               double init_mean, const OptimOptions& opts) {
  const int p = init.p(), q = init.q();
  Eigen::VectorXd x0(p + q + 1);
  x0.head(p + q) = init.theta();
  x0[p + q] = init_mean;
  const OptimResult res =
      levenberg_marquardt(pe_residuals(traj, p, q, true), x0, opts);
  JointParams base{init, NoiseModel::cgmy(1, 1, 1, 0.5)};
  return to_estimate(res, base, p, q, true);
}

Estimate combined_pe_ecf(const Trajectory& traj, const JointParams& init,
                         const EcfGrid& grid, const CombinedOptions& opts) {
  // Stage 1: system dynamics by prediction error.
  Estimate stage1 = opts.estimate_mean
                        ? estimate_pe_with_mean(traj, init.theta,
                                                init.mean_shift, opts.pe)
                        : estimate_pe(traj, init.theta, opts.pe);
  stage1.rho.eta = init.eta;

  // Stage 2: noise parameters by ECF with theta frozen (certainty
  // equivalence; the stages are not re-coupled).
  Estimate stage2 = estimate_eta_known_theta(traj, stage1.rho.theta, init.eta,
                                             grid, opts.ecf);
  Estimate out = stage2;
  out.rho.theta = stage1.rho.theta;
  out.rho.mean_shift = stage1.rho.mean_shift;
  out.converged = stage1.converged && stage2.converged;
  out.iterations = stage1.iterations + stage2.iterations;
  out.stages = {"pe:" + to_string(stage1.status), "ecf-eta:" + to_string(stage2.status)};

  if (!opts.second_pass) return out;

  // Stage 3: recenter the data, dy~ = dy - A(theta_hat) m_hat, and
  // re-estimate theta by a single-term ECF with eta fixed at eta_hat.
  const double m_hat = stage1.rho.mean_shift;
  const std::size_t n = traj.dy.size();
  const std::vector<double> ones(n, m_hat);
  const Trajectory shift = forward_filter(ones, out.rho.theta, traj.h);
  Trajectory recentered = traj;
  for (std::size_t t = 0; t < n; ++t) recentered.dy[t] -= shift.dy[t];

  const double u = opts.second_pass_u
                       ? *opts.second_pass_u
                       : optimal_u(out.rho.eta).u;
  const EcfGrid single = EcfGrid::make_identity(Eigen::VectorXd::Constant(1, u));
  JointParams init3 = out.rho;
  init3.mean_shift = m_hat;  // noise recentered by m_hat in the score c.f.
  EstimateOptions theta_opts;
  theta_opts.optim = opts.pe;
  const Estimate stage3 =
      estimate_theta_known_eta(recentered, init3, single, theta_opts);
  out.rho.theta = stage3.rho.theta;
  out.cost = stage3.cost;
  out.grad_norm = stage3.grad_norm;
  out.converged = out.converged && stage3.converged;
  out.iterations += stage3.iterations;
  out.stages.push_back("ecf-theta:" + to_string(stage3.status));
  return out;
}

}  // namespace levyident
