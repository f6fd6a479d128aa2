#include "levyident/system.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace levyident {

namespace {

constexpr double kMarginTol = 1e-6;

// Smallest root modulus of 1 + c_1 z + ... + c_n z^n; +inf if the (trimmed)
// polynomial is constant.
double min_root_modulus(const std::vector<double>& coeffs) {
  int deg = static_cast<int>(coeffs.size());
  while (deg > 0 && coeffs[deg - 1] == 0.0) --deg;
  if (deg == 0) return std::numeric_limits<double>::infinity();
  // Companion matrix of the monic reversal: roots of c_n z^n + ... + 1.
  Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(deg, deg);
  for (int i = 1; i < deg; ++i) comp(i, i - 1) = 1.0;
  const double lead = coeffs[deg - 1];
  for (int i = 0; i < deg; ++i) {
    const double ci = (i == 0) ? 1.0 : coeffs[i - 1];
    comp(i, deg - 1) = -ci / lead;
  }
  const auto roots = comp.eigenvalues();
  double min_mod = std::numeric_limits<double>::infinity();
  for (int i = 0; i < roots.size(); ++i)
    min_mod = std::min(min_mod, std::abs(roots[i]));
  return min_mod;
}

}  // namespace

Eigen::VectorXd SisoSystem::theta() const {
  Eigen::VectorXd v(dim());
  for (int i = 0; i < p(); ++i) v[i] = ar[i];
  for (int j = 0; j < q(); ++j) v[p() + j] = ma[j];
  return v;
}

SisoSystem SisoSystem::from_theta(const Eigen::VectorXd& theta, int p, int q) {
  if (theta.size() != p + q)
    throw std::invalid_argument("from_theta: dimension mismatch");
  SisoSystem sys;
  sys.ar.assign(theta.data(), theta.data() + p);
  sys.ma.assign(theta.data() + p, theta.data() + p + q);
  return sys;
}

double forward_stability_margin(const SisoSystem& sys) {
  return min_root_modulus(sys.ar) - 1.0;
}

double inverse_stability_margin(const SisoSystem& sys) {
  return min_root_modulus(sys.ma) - 1.0;
}

double stability_margin(const SisoSystem& sys) {
  return std::min(forward_stability_margin(sys), inverse_stability_margin(sys));
}

Trajectory forward_filter(std::span<const double> dz, const SisoSystem& sys,
                          double h) {
  if (forward_stability_margin(sys) <= kMarginTol)
    throw std::invalid_argument("forward_filter: unstable AR polynomial");
  const int p = sys.p(), q = sys.q();
  const std::size_t n = dz.size();
  Trajectory traj;
  traj.h = h;
  traj.dy.resize(n);
  auto& dy = traj.dy;
  for (std::size_t t = 0; t < n; ++t) {
    double v = dz[t];
    for (int j = 1; j <= q; ++j)
      if (t >= static_cast<std::size_t>(j)) v += sys.ma[j - 1] * dz[t - j];
    for (int i = 1; i <= p; ++i)
      if (t >= static_cast<std::size_t>(i)) v -= sys.ar[i - 1] * dy[t - i];
    dy[t] = v;
  }
  return traj;
}

std::vector<double> innovation_filter(const Trajectory& traj,
                                      const SisoSystem& sys) {
  if (inverse_stability_margin(sys) <= kMarginTol)
    throw std::invalid_argument("innovation_filter: inversely-unstable MA polynomial");
  const int p = sys.p(), q = sys.q();
  const std::size_t n = traj.dy.size();
  const auto& dy = traj.dy;
  std::vector<double> eps(n);
  for (std::size_t t = 0; t < n; ++t) {
    double v = dy[t];
    for (int i = 1; i <= p; ++i)
      if (t >= static_cast<std::size_t>(i)) v += sys.ar[i - 1] * dy[t - i];
    for (int j = 1; j <= q; ++j)
      if (t >= static_cast<std::size_t>(j)) v -= sys.ma[j - 1] * eps[t - j];
    eps[t] = v;
  }
  return eps;
}

Sensitivities innovation_sensitivities(const Trajectory& traj,
                                       const SisoSystem& sys, int order) {
  if (order != 1 && order != 2)
    throw std::invalid_argument("innovation_sensitivities: order must be 1 or 2");
  if (inverse_stability_margin(sys) <= kMarginTol)
    throw std::invalid_argument("innovation_sensitivities: inversely-unstable system");
  const int p = sys.p(), q = sys.q(), d = p + q;
  const std::size_t n = traj.dy.size();
  const auto& dy = traj.dy;
  const std::vector<double> eps = innovation_filter(traj, sys);

  Sensitivities s;
  s.first = Eigen::MatrixXd::Zero(n, d);
  // eps_n = dy_n + sum_i a_i dy_{n-i} - sum_j c_j eps_{n-j}
  // d/da_i:  dy_{n-i}      - sum_j c_j (d eps_{n-j}/da_i)
  // d/dc_j: -eps_{n-j}     - sum_l c_l (d eps_{n-l}/dc_j)
  for (std::size_t t = 0; t < n; ++t) {
    for (int i = 1; i <= p; ++i) {
      double v = (t >= static_cast<std::size_t>(i)) ? dy[t - i] : 0.0;
      for (int j = 1; j <= q; ++j)
        if (t >= static_cast<std::size_t>(j))
          v -= sys.ma[j - 1] * s.first(t - j, i - 1);
      s.first(t, i - 1) = v;
    }
    for (int j = 1; j <= q; ++j) {
      double v = (t >= static_cast<std::size_t>(j)) ? -eps[t - j] : 0.0;
      for (int l = 1; l <= q; ++l)
        if (t >= static_cast<std::size_t>(l))
          v -= sys.ma[l - 1] * s.first(t - l, p + j - 1);
      s.first(t, p + j - 1) = v;
    }
  }
  if (order < 2) return s;

  s.second.assign(d, Eigen::MatrixXd::Zero(n, d));
  // Second derivatives: the pure-AR block vanishes; forcing terms come from
  // first-order sensitivities.
  for (std::size_t t = 0; t < n; ++t) {
    for (int j = 1; j <= q; ++j) {
      const int cj = p + j - 1;
      // d2/da_i dc_j
      for (int i = 1; i <= p; ++i) {
        double v = (t >= static_cast<std::size_t>(j))
                       ? -s.first(t - j, i - 1)
                       : 0.0;
        for (int l = 1; l <= q; ++l)
          if (t >= static_cast<std::size_t>(l))
            v -= sys.ma[l - 1] * s.second[i - 1](t - l, cj);
        s.second[i - 1](t, cj) = v;
        s.second[cj](t, i - 1) = v;
      }
      // d2/dc_j dc_m (m >= j)
      for (int m = j; m <= q; ++m) {
        const int cm = p + m - 1;
        double v = 0.0;
        if (t >= static_cast<std::size_t>(j)) v -= s.first(t - j, cm);
        if (t >= static_cast<std::size_t>(m)) v -= s.first(t - m, cj);
        for (int l = 1; l <= q; ++l)
          if (t >= static_cast<std::size_t>(l))
            v -= sys.ma[l - 1] * s.second[cj](t - l, cm);
        s.second[cj](t, cm) = v;
        s.second[cm](t, cj) = v;
      }
    }
  }
  return s;
}

double stationary_tail_gap(const SisoSystem& sys, std::span<const double> dz,
                           std::size_t burnin, std::size_t n0) {
  if (dz.size() <= burnin)
    throw std::invalid_argument("stationary_tail_gap: need dz longer than burnin");
  // Innovations of the same observation path computed with the full (burned
  // in, near-stationary) history versus zero initial conditions at the window
  // start; the difference is the r_n term and decays at the inverse root rate.
  const Trajectory full = forward_filter(dz, sys);
  const Trajectory window{
      std::vector<double>(full.dy.begin() + static_cast<std::ptrdiff_t>(burnin),
                          full.dy.end()),
      full.h};
  const std::vector<double> eps_full = innovation_filter(full, sys);
  const std::vector<double> eps_win = innovation_filter(window, sys);
  double gap = 0.0;
  for (std::size_t t = n0; t < eps_win.size(); ++t)
    gap = std::max(gap, std::abs(eps_full[burnin + t] - eps_win[t]));
  return gap;
}

}  // namespace levyident
