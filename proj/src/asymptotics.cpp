#include "levyident/asymptotics.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_map>

namespace levyident {

namespace {

constexpr double kImagTol = 1e-12;

Eigen::MatrixXd k_inverse(const EcfGrid& grid) {
  return grid.k_inv_sqrt.transpose() * grid.k_inv_sqrt;
}

void require_zero_mean(const NoiseModel& eta) {
  if (std::abs(cumulant(1, eta, 1.0)) > kImagTol)
    throw std::invalid_argument(
        "theta-block asymptotics require zero-mean noise (E[dZ]=0)");
}

double real_part_checked(std::complex<double> z, const char* what) {
  if (std::abs(z.imag()) > kImagTol * std::max(1.0, std::abs(z.real())))
    throw std::runtime_error(std::string(what) + ": imaginary residue too large");
  return z.real();
}

// Characteristic-function memo for the O(k^4) sums.
class PhiCache {
 public:
  PhiCache(const NoiseModel& eta, double t) : eta_(eta), t_(t) {}
  std::complex<double> operator()(double u) {
    auto it = cache_.find(u);
    if (it != cache_.end()) return it->second;
    const std::complex<double> v = char_fn(u, t_, eta_);
    cache_.emplace(u, v);
    return v;
  }

 private:
  const NoiseModel& eta_;
  double t_;
  std::unordered_map<double, std::complex<double>> cache_;
};

std::complex<double> f_aux_cached(double a, double b, double c, double d,
                                  PhiCache& phi) {
  return a * b *
         (phi(a + b + c + d) - phi(a + b + c) * phi(d) -
          phi(a + b + d) * phi(c) + phi(a + b) * phi(c) * phi(d));
}

}  // namespace

double w_scalar(const EcfGrid& grid, const NoiseModel& eta, double t) {
  require_zero_mean(eta);
  const Eigen::MatrixXd kinv = k_inverse(grid);
  const int k = grid.k();
  PhiCache phi(eta, t);
  std::complex<double> acc = 0.0;
  for (int l = 0; l < k; ++l)
    for (int m = 0; m < k; ++m) {
      const double ul = grid.u[l], um = grid.u[m];
      acc += kinv(l, m) *
             ((ul * ul + um * um) * phi(ul) * phi(-um) -
              (ul - um) * (ul - um) * phi(ul - um));
    }
  return real_part_checked(acc, "w_scalar");
}

std::complex<double> f_aux(double a, double b, double c, double d,
                           const NoiseModel& eta, double t) {
  PhiCache phi(eta, t);
  return f_aux_cached(a, b, c, d, phi);
}

double s_scalar(const EcfGrid& grid, const NoiseModel& eta, double t) {
  require_zero_mean(eta);
  const Eigen::MatrixXd kinv = k_inverse(grid);
  const int k = grid.k();
  PhiCache phi(eta, t);
  std::complex<double> acc = 0.0;
  for (int l = 0; l < k; ++l)
    for (int m = 0; m < k; ++m) {
      const double wlm = kinv(l, m);
      if (wlm == 0.0) continue;
      for (int si = 0; si < k; ++si)
        for (int ti = 0; ti < k; ++ti) {
          const double w2 = wlm * kinv(si, ti);
          if (w2 == 0.0) continue;
          const double ul = grid.u[l], um = grid.u[m];
          const double us = grid.u[si], ut = grid.u[ti];
          acc += w2 * (f_aux_cached(ul, us, -um, -ut, phi) +
                       f_aux_cached(ul, -ut, -um, us, phi) +
                       f_aux_cached(-um, us, ul, -ut, phi) +
                       f_aux_cached(-um, -ut, ul, us, phi));
        }
    }
  // The score derivative carries a factor i per term; squaring yields -1.
  return -real_part_checked(acc, "s_scalar");
}

EtaBlocks eta_blocks(const EcfGrid& grid, const NoiseModel& eta,
                     const std::vector<int>& free_eta, double t) {
  std::vector<int> idx = free_eta;
  if (idx.empty()) {
    idx.resize(eta.eta_dim());
    for (int j = 0; j < eta.eta_dim(); ++j) idx[j] = j;
  }
  const int r = static_cast<int>(idx.size());
  const int k = grid.k();
  const Eigen::MatrixXd kinv = k_inverse(grid);
  PhiCache phi(eta, t);

  // phi_eta at +u and -u grid points, restricted to the free coordinates.
  Eigen::MatrixXcd dpos(k, r), dneg(k, r);
  for (int l = 0; l < k; ++l) {
    const Eigen::VectorXcd gp = char_fn_eta_grad(grid.u[l], t, eta);
    const Eigen::VectorXcd gn = char_fn_eta_grad(-grid.u[l], t, eta);
    for (int j = 0; j < r; ++j) {
      dpos(l, j) = gp[idx[j]];
      dneg(l, j) = gn[idx[j]];
    }
  }

  EtaBlocks out;
  out.w_eta_eta.resize(r, r);
  out.cov_v_eta.resize(r, r);

  for (int j = 0; j < r; ++j)
    for (int jp = 0; jp < r; ++jp) {
      std::complex<double> acc = 0.0;
      for (int l = 0; l < k; ++l)
        for (int m = 0; m < k; ++m)
          acc += kinv(l, m) *
                 (dpos(l, j) * dneg(m, jp) + dpos(l, jp) * dneg(m, j));
      out.w_eta_eta(j, jp) = real_part_checked(acc, "eta_blocks: W_etaeta");
    }

  // Per-sample covariance of the eta-score. Factored through
  // P_j(m) = sum_l Kinv(l,m) phi_eta_j(u_l), R_j(l) = sum_m Kinv(l,m)
  // phi_eta_j(-u_m); the product-correction terms come from
  // Cov(h(u), h(v)) = phi(u+v) - phi(u) phi(v).
  Eigen::MatrixXcd pmat = kinv * dpos;  // P_j(m) indexed (m, j)
  Eigen::MatrixXcd rmat = kinv * dneg;  // R_j(l) indexed (l, j)
  Eigen::VectorXcd phi_pos(k), phi_neg(k);
  for (int l = 0; l < k; ++l) {
    phi_pos[l] = phi(grid.u[l]);
    phi_neg[l] = phi(-grid.u[l]);
  }
  for (int j = 0; j < r; ++j)
    for (int jp = 0; jp < r; ++jp) {
      std::complex<double> acc = 0.0;
      for (int m = 0; m < k; ++m)
        for (int s = 0; s < k; ++s) {
          acc += pmat(m, j) * pmat(s, jp) * phi(-grid.u[m] - grid.u[s]);
          acc += pmat(m, j) * rmat(s, jp) * phi(-grid.u[m] + grid.u[s]);
          acc += rmat(m, j) * pmat(s, jp) * phi(grid.u[m] - grid.u[s]);
          acc += rmat(m, j) * rmat(s, jp) * phi(grid.u[m] + grid.u[s]);
        }
      const std::complex<double> pj = pmat.col(j).cwiseProduct(phi_neg).sum();
      const std::complex<double> pjp = pmat.col(jp).cwiseProduct(phi_neg).sum();
      const std::complex<double> rj = rmat.col(j).cwiseProduct(phi_pos).sum();
      const std::complex<double> rjp = rmat.col(jp).cwiseProduct(phi_pos).sum();
      acc -= pj * pjp + pj * rjp + rj * pjp + rj * rjp;
      out.cov_v_eta(j, jp) = real_part_checked(acc, "eta_blocks: Cov(V_eta)");
    }
  return out;
}

Eigen::MatrixXd sigma_p(const SisoSystem& theta_star, const NoiseModel& eta,
                        std::size_t n_mc, std::uint64_t seed) {
  const int d = theta_star.dim();
  if (d == 0) throw std::invalid_argument("sigma_p: empty theta");
  const double var = cumulant(2, eta, 1.0);

  if (theta_star.p() == 1 && theta_star.q() == 0) {
    const double a = theta_star.ar[0];
    Eigen::MatrixXd out(1, 1);
    out(0, 0) = (1.0 - a * a) / var;
    return out;
  }

  // Long-run Monte Carlo Gram average with burn-in.
  const std::size_t burn = 1000;
  SamplingConfig cfg;
  cfg.seed = seed;
  const std::vector<double> dz = sample_increments(n_mc + burn, eta, cfg);
  const Trajectory traj = forward_filter(dz, theta_star);
  const Eigen::MatrixXd sens = innovation_sensitivities(traj, theta_star, 1).first;
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(d, d);
  for (std::size_t t = burn; t < n_mc + burn; ++t)
    gram += sens.row(t).transpose() * sens.row(t);
  gram /= static_cast<double>(n_mc);
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(gram);
  if (!lu.isInvertible())
    throw std::runtime_error("sigma_p: singular sensitivity Gram matrix (unidentifiable theta)");
  return lu.inverse();
}

double efficiency_g(double u, const NoiseModel& eta) {
  if (u == 0.0) throw std::invalid_argument("efficiency_g: u must be nonzero");
  const NoiseModel unit = normalized_to_unit_variance(eta);
  const std::complex<double> p = char_fn(u, 1.0, unit);
  const std::complex<double> pm = char_fn(-u, 1.0, unit);
  const std::complex<double> p2 = char_fn(2.0 * u, 1.0, unit);
  const std::complex<double> p2m = char_fn(-2.0 * u, 1.0, unit);
  const std::complex<double> g = -(p2 / (p * p) + p2m / (pm * pm) - 2.0 / (p * pm));
  return real_part_checked(g, "efficiency_g");
}

double efficiency_ratio(double u, const NoiseModel& eta) {
  return efficiency_g(u, eta) / (4.0 * u * u);
}

OptimalU optimal_u(const NoiseModel& eta, double lo, double hi) {
  lo = std::max(lo, 1e-3);
  if (!(hi > lo)) throw std::invalid_argument("optimal_u: empty search interval");
  const int n_scan = 300;
  std::vector<double> us(n_scan), ratios(n_scan);
  int best = 0;
  for (int i = 0; i < n_scan; ++i) {
    us[i] = lo + (hi - lo) * i / (n_scan - 1);
    ratios[i] = efficiency_ratio(us[i], eta);
    if (ratios[i] < ratios[best]) best = i;
  }
  int n_minima = 0;
  for (int i = 1; i + 1 < n_scan; ++i)
    if (ratios[i] < ratios[i - 1] && ratios[i] < ratios[i + 1]) ++n_minima;

  OptimalU out;
  out.unimodal = n_minima <= 1;
  double a = us[std::max(best - 1, 0)];
  double b = us[std::min(best + 1, n_scan - 1)];
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
  double f1 = efficiency_ratio(x1, eta), f2 = efficiency_ratio(x2, eta);
  for (int it = 0; it < 80; ++it) {
    if (f1 < f2) {
      b = x2; x2 = x1; f2 = f1;
      x1 = b - gr * (b - a);
      f1 = efficiency_ratio(x1, eta);
    } else {
      a = x1; x1 = x2; f1 = f2;
      x2 = a + gr * (b - a);
      f2 = efficiency_ratio(x2, eta);
    }
  }
  out.u = 0.5 * (a + b);
  out.ratio = efficiency_ratio(out.u, eta);
  if (ratios[best] < out.ratio) {
    out.u = us[best];
    out.ratio = ratios[best];
  }
  return out;
}

AsymptoticReport asymptotic_report(const EcfGrid& grid,
                                   const SisoSystem& theta_star,
                                   const NoiseModel& eta,
                                   const std::vector<int>& free_eta,
                                   std::size_t n_mc, std::uint64_t seed) {
  AsymptoticReport rep;
  rep.w = w_scalar(grid, eta);
  rep.s = s_scalar(grid, eta);
  rep.ratio = rep.s / (rep.w * rep.w);
  rep.sigma_p = sigma_p(theta_star, eta, n_mc, seed);
  rep.sigma_e = rep.ratio * rep.sigma_p;
  rep.r_star_theta = rep.w * rep.sigma_p.inverse();
  const EtaBlocks blocks = eta_blocks(grid, eta, free_eta);
  rep.r_star_eta = blocks.w_eta_eta;
  rep.cov_v_eta = blocks.cov_v_eta;
  return rep;
}

}  // namespace levyident
