#include "levyident/noise.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_sf_gamma.h>
#include <gsl/gsl_sf_psi.h>

#include "levyident/rng.hpp"

namespace levyident {

namespace {

constexpr std::complex<double> kI{0.0, 1.0};

void validate_cgmy(const CgmyParams& p) {
  if (!(p.c > 0.0)) throw std::invalid_argument("CGMY: C must be > 0");
  if (!(p.g > 0.0)) throw std::invalid_argument("CGMY: G must be > 0");
  if (!(p.m > 0.0)) throw std::invalid_argument("CGMY: M must be > 0");
  if (!(p.y > 0.0 && p.y < 2.0))
    throw std::invalid_argument("CGMY: Y must lie in (0,2)");
  if (p.y == 1.0)
    throw std::invalid_argument("CGMY: Y=1 is excluded (Gamma(-Y) pole)");
}

void validate_vg(const VgParams& p) {
  if (!(p.sigma > 0.0)) throw std::invalid_argument("VG: sigma must be > 0");
  if (!(p.nu > 0.0)) throw std::invalid_argument("VG: nu must be > 0");
}

// Upper incomplete gamma Gamma(a, x), a may be negative non-integer, x > 0.
double upper_gamma(double a, double x) {
  gsl_sf_result r;
  gsl_error_handler_t* old = gsl_set_error_handler_off();
  int status = gsl_sf_gamma_inc_e(a, x, &r);
  gsl_set_error_handler(old);
  if (status != 0) throw std::runtime_error("incomplete gamma evaluation failed");
  return r.val;
}

// Lower incomplete gamma gamma(a, x), a > 0.
double lower_gamma(double a, double x) {
  return gsl_sf_gamma_inc_P(a, x) * gsl_sf_gamma(a);
}

double cgmy_cumulant_rate(int order, const CgmyParams& p) {
  // kappa_n / t = C Gamma(n - Y) (M^{Y-n} + (-1)^n G^{Y-n})
  const double sign = (order % 2 == 0) ? 1.0 : -1.0;
  return p.c * gsl_sf_gamma(static_cast<double>(order) - p.y) *
         (std::pow(p.m, p.y - order) + sign * std::pow(p.g, p.y - order));
}

double vg_cumulant_rate(int order, const VgParams& p) {
  const double t = p.drift, s2 = p.sigma * p.sigma, nu = p.nu;
  switch (order) {
    case 1: return t;
    case 2: return s2 + t * t * nu;
    case 3: return 3.0 * t * s2 * nu + 2.0 * t * t * t * nu * nu;
    case 4:
      return 3.0 * s2 * s2 * nu + 12.0 * t * t * s2 * nu * nu +
             6.0 * t * t * t * t * nu * nu * nu;
    default: throw std::invalid_argument("cumulant order must be in {1,..,4}");
  }
}

}  // namespace

NoiseModel NoiseModel::cgmy(double c, double g, double m, double y) {
  CgmyParams p{c, g, m, y};
  validate_cgmy(p);
  return NoiseModel(p);
}

NoiseModel NoiseModel::vg(double drift, double sigma, double nu) {
  VgParams p{drift, sigma, nu};
  validate_vg(p);
  return NoiseModel(p);
}

Eigen::VectorXd NoiseModel::eta() const {
  Eigen::VectorXd v(eta_dim());
  if (is_cgmy()) {
    const auto& p = cgmy_params();
    v << p.c, p.g, p.m, p.y;
  } else {
    const auto& p = vg_params();
    v << p.drift, p.sigma, p.nu;
  }
  return v;
}

NoiseModel NoiseModel::with_eta(const Eigen::VectorXd& eta) const {
  if (eta.size() != eta_dim())
    throw std::invalid_argument("with_eta: wrong parameter dimension");
  if (is_cgmy()) return cgmy(eta[0], eta[1], eta[2], eta[3]);
  return vg(eta[0], eta[1], eta[2]);
}

std::vector<std::string> NoiseModel::eta_names() const {
  if (is_cgmy()) return {"c", "g", "m", "y"};
  return {"drift", "sigma", "nu"};
}

std::complex<double> cgmy_char_exponent(double u, const CgmyParams& p) {
  const std::complex<double> a = std::pow(std::complex<double>(p.m, -u), p.y);
  const std::complex<double> b = std::pow(std::complex<double>(p.g, u), p.y);
  return p.c * gsl_sf_gamma(-p.y) *
         (a - std::pow(p.m, p.y) + b - std::pow(p.g, p.y));
}

std::complex<double> char_fn(double u, double t, const NoiseModel& model) {
  if (!(t > 0.0)) throw std::invalid_argument("char_fn: t must be > 0");
  if (model.is_cgmy())
    return std::exp(t * cgmy_char_exponent(u, model.cgmy_params()));
  const auto& p = model.vg_params();
  const std::complex<double> d =
      1.0 - kI * (u * p.drift * p.nu) + 0.5 * u * u * p.sigma * p.sigma * p.nu;
  return std::exp(-(t / p.nu) * std::log(d));
}

Eigen::VectorXcd char_fn_eta_grad(double u, double t, const NoiseModel& model) {
  Eigen::VectorXcd grad(model.eta_dim());
  const std::complex<double> phi = char_fn(u, t, model);
  if (model.is_cgmy()) {
    const auto& p = model.cgmy_params();
    const std::complex<double> zm(p.m, -u), zg(p.g, u);
    const std::complex<double> zm_y = std::pow(zm, p.y);
    const std::complex<double> zg_y = std::pow(zg, p.y);
    const double m_y = std::pow(p.m, p.y), g_y = std::pow(p.g, p.y);
    const double gam = gsl_sf_gamma(-p.y);
    const std::complex<double> bracket = zm_y - m_y + zg_y - g_y;
    // d psi / dC
    grad[0] = gam * bracket;
    // d psi / dG: Y ((G+iu)^{Y-1} - G^{Y-1})
    grad[1] = p.c * gam * p.y *
              (std::pow(zg, p.y - 1.0) - std::pow(p.g, p.y - 1.0));
    // d psi / dM: Y ((M-iu)^{Y-1} - M^{Y-1})
    grad[2] = p.c * gam * p.y *
              (std::pow(zm, p.y - 1.0) - std::pow(p.m, p.y - 1.0));
    // d psi / dY: product rule through Gamma(-Y) and the complex powers.
    const std::complex<double> bracket_dy =
        zm_y * std::log(zm) - m_y * std::log(p.m) + zg_y * std::log(zg) -
        g_y * std::log(p.g);
    const double digamma = gsl_sf_psi(-p.y);
    grad[3] = p.c * gam * (-digamma * bracket + bracket_dy);
    grad *= t * phi;  // phi = exp(t psi)
  } else {
    const auto& p = model.vg_params();
    const std::complex<double> d =
        1.0 - kI * (u * p.drift * p.nu) + 0.5 * u * u * p.sigma * p.sigma * p.nu;
    grad[0] = phi * (t * kI * u) / d;
    grad[1] = -phi * t * u * u * p.sigma / d;
    grad[2] = phi * ((t / (p.nu * p.nu)) * std::log(d) -
                     (t / p.nu) * (-kI * (u * p.drift) +
                                   0.5 * u * u * p.sigma * p.sigma) / d);
  }
  return grad;
}

double cumulant(int order, const NoiseModel& model, double t) {
  if (order < 1 || order > 4)
    throw std::invalid_argument("cumulant order must be in {1,..,4}");
  if (!(t > 0.0)) throw std::invalid_argument("cumulant: t must be > 0");
  const double rate = model.is_cgmy() ? cgmy_cumulant_rate(order, model.cgmy_params())
                                      : vg_cumulant_rate(order, model.vg_params());
  return t * rate;
}

double moment(int order, const NoiseModel& model, double t) {
  if (order < 1 || order > 4)
    throw std::invalid_argument("moment order must be in {1,..,4}");
  const double k1 = cumulant(1, model, t);
  if (order == 1) return k1;
  const double k2 = cumulant(2, model, t);
  if (order == 2) return k2 + k1 * k1;
  const double k3 = cumulant(3, model, t);
  if (order == 3) return k3 + 3.0 * k1 * k2 + k1 * k1 * k1;
  const double k4 = cumulant(4, model, t);
  return k4 + 4.0 * k1 * k3 + 3.0 * k2 * k2 + 6.0 * k1 * k1 * k2 +
         k1 * k1 * k1 * k1;
}

std::vector<double> sample_increments(std::size_t n, const NoiseModel& model,
                                      const SamplingConfig& cfg) {
  if (n < 1) throw std::invalid_argument("sample_increments: n must be >= 1");
  if (!(cfg.h > 0.0)) throw std::invalid_argument("sampling interval must be > 0");

  RngEngine rng = make_engine(cfg.seed);
  std::vector<double> out(n);

  if (!model.is_cgmy()) {
    const auto& p = model.vg_params();
    std::gamma_distribution<double> gamma(cfg.h / p.nu, p.nu);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double mean = cfg.center ? p.drift * cfg.h : 0.0;
    for (auto& x : out) {
      const double g = gamma(rng);
      x = p.drift * g + p.sigma * std::sqrt(g) * normal(rng) - mean;
    }
    return out;
  }

  const auto& p = model.cgmy_params();
  const double eps = cfg.epsilon;
  if (!(eps > 0.0 && eps < 1.0))
    throw std::invalid_argument("sampling: epsilon must lie in (0,1)");

  // Jump intensities on each side of the truncation level.
  const double lambda_pos = p.c * std::pow(p.m, p.y) * upper_gamma(-p.y, p.m * eps);
  const double lambda_neg = p.c * std::pow(p.g, p.y) * upper_gamma(-p.y, p.g * eps);
  const double lambda = lambda_pos + lambda_neg;
  if (!std::isfinite(lambda))
    throw std::runtime_error("sampling: non-finite jump intensity");

  // Mean of the truncated compound Poisson part per unit time.
  const double cp_mean =
      p.c * (std::pow(p.m, p.y - 1.0) * upper_gamma(1.0 - p.y, p.m * eps) -
             std::pow(p.g, p.y - 1.0) * upper_gamma(1.0 - p.y, p.g * eps));
  // Variance of the discarded small jumps per unit time.
  const double small_var =
      p.c * (std::pow(p.m, p.y - 2.0) * lower_gamma(2.0 - p.y, p.m * eps) +
             std::pow(p.g, p.y - 2.0) * lower_gamma(2.0 - p.y, p.g * eps));

  const double k1 = cgmy_cumulant_rate(1, p);
  // Shift so that E[increment] = h * k1 exactly; centering removes h * k1.
  const double drift = cfg.h * (k1 - cp_mean) - (cfg.center ? cfg.h * k1 : 0.0);
  const double comp_sd =
      cfg.compensate_small_jumps ? std::sqrt(cfg.h * small_var) : 0.0;

  std::poisson_distribution<long> n_jumps(cfg.h * lambda);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double p_pos = lambda_pos / lambda;
  const double inv_y = 1.0 / p.y;

  for (auto& x : out) {
    double sum = drift;
    const long jumps = n_jumps(rng);
    for (long j = 0; j < jumps; ++j) {
      const bool positive = unif(rng) < p_pos;
      const double rate = positive ? p.m : p.g;
      // Pareto proposal on [eps, inf) with exponential thinning.
      double mag;
      do {
        mag = eps * std::pow(unif(rng), -inv_y);
      } while (unif(rng) > std::exp(-rate * (mag - eps)));
      sum += positive ? mag : -mag;
    }
    if (comp_sd > 0.0) sum += comp_sd * normal(rng);
    x = sum;
  }
  return out;
}

NoiseModel normalized_to_unit_variance(const NoiseModel& model) {
  const double var = cumulant(2, model, 1.0);
  if (model.is_cgmy()) {
    const auto& p = model.cgmy_params();
    return NoiseModel::cgmy(p.c / var, p.g, p.m, p.y);
  }
  const auto& p = model.vg_params();
  const double scale = 1.0 / std::sqrt(var);
  return NoiseModel::vg(p.drift * scale, p.sigma * scale, p.nu);
}

}  // namespace levyident
