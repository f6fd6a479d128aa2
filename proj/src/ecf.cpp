#include "levyident/ecf.hpp"

#include <cmath>
#include <stdexcept>

namespace levyident {

namespace {

constexpr double kMarginTol = 1e-6;
constexpr std::complex<double> kI{0.0, 1.0};

struct FreeSet {
  bool theta = false;
  std::vector<int> eta;  // free eta coordinate indices
  int n_theta(const JointParams& rho) const { return theta ? rho.theta.dim() : 0; }
  int size(const JointParams& rho) const {
    return n_theta(rho) + static_cast<int>(eta.size());
  }
};

JointParams unpack(const Eigen::VectorXd& x, const JointParams& base,
                   const FreeSet& free) {
  JointParams rho = base;
  int off = 0;
  if (free.theta) {
    rho.theta = SisoSystem::from_theta(x.head(base.theta.dim()), base.theta.p(),
                                       base.theta.q());
    off = base.theta.dim();
  }
  if (!free.eta.empty()) {
    Eigen::VectorXd eta = base.eta.eta();
    for (std::size_t j = 0; j < free.eta.size(); ++j)
      eta[free.eta[j]] = x[off + static_cast<int>(j)];
    rho.eta = base.eta.with_eta(eta);
  }
  return rho;
}

Eigen::VectorXd pack(const JointParams& rho, const FreeSet& free) {
  Eigen::VectorXd x(free.size(rho));
  int off = 0;
  if (free.theta) {
    x.head(rho.theta.dim()) = rho.theta.theta();
    off = rho.theta.dim();
  }
  const Eigen::VectorXd eta = rho.eta.eta();
  for (std::size_t j = 0; j < free.eta.size(); ++j)
    x[off + static_cast<int>(j)] = eta[free.eta[j]];
  return x;
}

// Stacked real residuals (Re then Im of K^{-1/2} h_n per sample) and their
// Jacobian w.r.t. the free coordinates.
void assemble(const Trajectory& traj, const JointParams& rho, const EcfGrid& grid,
              const FreeSet& free, Eigen::VectorXd* residuals,
              Eigen::MatrixXd* jacobian) {
  const int k = grid.k();
  const int nt = free.n_theta(rho);
  const int ne = static_cast<int>(free.eta.size());
  const int d = nt + ne;
  const std::size_t n = traj.dy.size();

  const std::vector<double> eps = innovation_filter(traj, rho.theta);
  Eigen::MatrixXd eps_theta;
  if (nt > 0)
    eps_theta = innovation_sensitivities(traj, rho.theta, 1).first;

  // Model characteristic function (with optional mean shift) and its
  // eta-gradient at the grid points; both constant across samples.
  Eigen::VectorXcd phi(k);
  Eigen::MatrixXcd phi_eta(k, ne);
  for (int l = 0; l < k; ++l) {
    const std::complex<double> shift =
        std::exp(-kI * (grid.u[l] * rho.mean_shift));
    phi[l] = char_fn(grid.u[l], traj.h, rho.eta) * shift;
    if (ne > 0) {
      const Eigen::VectorXcd full = char_fn_eta_grad(grid.u[l], traj.h, rho.eta);
      for (int j = 0; j < ne; ++j) phi_eta(l, j) = full[free.eta[j]] * shift;
    }
  }

  residuals->resize(2 * n * k);
  if (jacobian) jacobian->resize(2 * n * k, d);

  Eigen::VectorXcd h(k);
  Eigen::MatrixXcd dh(k, d);
  for (std::size_t t = 0; t < n; ++t) {
    const std::complex<double> e_base = std::exp(kI * (grid.u[0] * eps[t]));
    for (int l = 0; l < k; ++l) {
      const std::complex<double> e =
          (l == 0) ? e_base : std::exp(kI * (grid.u[l] * eps[t]));
      h[l] = e - phi[l];
      if (jacobian) {
        for (int j = 0; j < nt; ++j)
          dh(l, j) = e * kI * grid.u[l] * eps_theta(t, j);
        for (int j = 0; j < ne; ++j) dh(l, nt + j) = -phi_eta(l, j);
      }
    }
    const Eigen::VectorXcd r = grid.k_inv_sqrt * h;
    residuals->segment(2 * k * t, k) = r.real();
    residuals->segment(2 * k * t + k, k) = r.imag();
    if (jacobian) {
      const Eigen::MatrixXcd jr = grid.k_inv_sqrt * dh;
      jacobian->block(2 * k * t, 0, k, d) = jr.real();
      jacobian->block(2 * k * t + k, 0, k, d) = jr.imag();
    }
  }
}

bool admissible(const JointParams& rho, const FreeSet& free) {
  if (free.theta && inverse_stability_margin(rho.theta) <= kMarginTol)
    return false;
  if (forward_stability_margin(rho.theta) <= kMarginTol) return false;
  return true;
}

Estimate run_estimation(const Trajectory& traj, const JointParams& init,
                        const EcfGrid& grid, const FreeSet& free,
                        const OptimOptions& optim) {
  const int d = free.size(init);
  if (d == 0) throw std::invalid_argument("estimation: no free coordinates");
  if (2 * grid.k() < d)
    throw std::invalid_argument(
        "estimation: need 2k >= number of free coordinates for identifiability");

  const ResidualFn fn = [&](const Eigen::VectorXd& x, Eigen::VectorXd& r,
                            Eigen::MatrixXd& jac) -> bool {
    JointParams rho;
    try {
      rho = unpack(x, init, free);
    } catch (const std::invalid_argument&) {
      return false;  // eta outside its admissible family domain
    }
    if (!admissible(rho, free)) return false;
    assemble(traj, rho, grid, free, &r, &jac);
    return r.allFinite() && jac.allFinite();
  };

  const OptimResult res = levenberg_marquardt(fn, pack(init, free), optim);
  Estimate est;
  est.rho = unpack(res.x, init, free);
  est.cost = res.cost;
  est.grad_norm = res.grad_norm;
  est.iterations = res.iterations;
  est.status = res.status;
  est.converged = res.status == OptimStatus::Converged;
  return est;
}

}  // namespace

EcfGrid EcfGrid::make(Eigen::VectorXd u, Eigen::MatrixXd k_weight) {
  const int k = static_cast<int>(u.size());
  if (k < 1) throw std::invalid_argument("EcfGrid: need at least one u point");
  for (int i = 0; i < k; ++i)
    if (u[i] == 0.0) throw std::invalid_argument("EcfGrid: u points must be nonzero");
  for (int i = 1; i < k; ++i)
    if (u[i] <= u[i - 1])
      throw std::invalid_argument("EcfGrid: u points must be ordered and distinct");
  if (k_weight.rows() != k || k_weight.cols() != k)
    throw std::invalid_argument("EcfGrid: weighting matrix dimension mismatch");
  if (!k_weight.isApprox(k_weight.transpose(), 1e-12))
    throw std::invalid_argument("EcfGrid: weighting matrix must be symmetric");
  Eigen::LLT<Eigen::MatrixXd> llt(k_weight);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("EcfGrid: weighting matrix must be positive definite");
  EcfGrid grid;
  grid.u = std::move(u);
  grid.k_weight = std::move(k_weight);
  const Eigen::MatrixXd l = llt.matrixL();
  grid.k_inv_sqrt =
      l.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(k, k));
  return grid;
}

EcfGrid EcfGrid::make_identity(Eigen::VectorXd u) {
  const int k = static_cast<int>(u.size());
  return make(std::move(u), Eigen::MatrixXd::Identity(k, k));
}

EcfGrid EcfGrid::default_grid(int k) {
  Eigen::VectorXd u(k);
  for (int i = 0; i < k; ++i) u[i] = 0.1 * (i + 1);
  return make_identity(std::move(u));
}

std::complex<double> score(double u, double eps_n, double h, const NoiseModel& eta) {
  return std::exp(kI * (u * eps_n)) - char_fn(u, h, eta);
}

double cost(const Trajectory& traj, const JointParams& rho, const EcfGrid& grid) {
  FreeSet free;  // no Jacobian needed
  Eigen::VectorXd r;
  assemble(traj, rho, grid, free, &r, nullptr);
  return r.squaredNorm();
}

Eigen::VectorXd cost_grad(const Trajectory& traj, const JointParams& rho,
                          const EcfGrid& grid) {
  FreeSet free;
  free.theta = true;
  free.eta.resize(rho.eta.eta_dim());
  for (int j = 0; j < rho.eta.eta_dim(); ++j) free.eta[j] = j;
  Eigen::VectorXd r;
  Eigen::MatrixXd jac;
  assemble(traj, rho, grid, free, &r, &jac);
  return 2.0 * jac.transpose() * r;
}

Estimate estimate_joint(const Trajectory& traj, const JointParams& init,
                        const EcfGrid& grid, const EstimateOptions& opts) {
  FreeSet free;
  free.theta = true;
  free.eta = opts.free_eta;
  if (free.eta.empty()) {
    free.eta.resize(init.eta.eta_dim());
    for (int j = 0; j < init.eta.eta_dim(); ++j) free.eta[j] = j;
  }
  return run_estimation(traj, init, grid, free, opts.optim);
}

Estimate estimate_eta_known_theta(const Trajectory& traj,
                                  const SisoSystem& theta_star,
                                  const NoiseModel& init_eta, const EcfGrid& grid,
                                  const EstimateOptions& opts) {
  JointParams init{theta_star, init_eta};
  FreeSet free;
  free.eta = opts.free_eta;
  if (free.eta.empty()) {
    free.eta.resize(init_eta.eta_dim());
    for (int j = 0; j < init_eta.eta_dim(); ++j) free.eta[j] = j;
  }
  return run_estimation(traj, init, grid, free, opts.optim);
}

Estimate estimate_theta_known_eta(const Trajectory& traj, const JointParams& init,
                                  const EcfGrid& grid, const EstimateOptions& opts) {
  FreeSet free;
  free.theta = true;
  return run_estimation(traj, init, grid, free, opts.optim);
}

}  // namespace levyident
