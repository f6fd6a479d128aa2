#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace levyident {

// CGMY tempered-stable law. C: activity level, G/M: left/right exponential
// tempering rates, Y: fine-structure index.
struct CgmyParams {
  double c = 1.0;
  double g = 1.0;
  double m = 1.0;
  double y = 0.5;
};

// Variance Gamma: Brownian motion with drift/volatility time-changed by a
// unit-mean-rate gamma process with variance rate nu.
struct VgParams {
  double drift = 0.0;
  double sigma = 1.0;
  double nu = 0.2;
};

class NoiseModel {
 public:
  NoiseModel() : law_(CgmyParams{}) {}
  static NoiseModel cgmy(double c, double g, double m, double y);
  static NoiseModel vg(double drift, double sigma, double nu);

  bool is_cgmy() const { return std::holds_alternative<CgmyParams>(law_); }
  const CgmyParams& cgmy_params() const { return std::get<CgmyParams>(law_); }
  const VgParams& vg_params() const { return std::get<VgParams>(law_); }

  int eta_dim() const { return is_cgmy() ? 4 : 3; }
  Eigen::VectorXd eta() const;
  // Same family with a replaced parameter vector (validated).
  NoiseModel with_eta(const Eigen::VectorXd& eta) const;
  std::vector<std::string> eta_names() const;
  std::string family() const { return is_cgmy() ? "cgmy" : "vg"; }

 private:
  explicit NoiseModel(CgmyParams p) : law_(p) {}
  explicit NoiseModel(VgParams p) : law_(p) {}
  std::variant<CgmyParams, VgParams> law_;
};

struct SamplingConfig {
  double h = 1.0;                     // sampling interval
  double epsilon = 1e-4;              // small-jump truncation level (CGMY)
  bool compensate_small_jumps = true; // variance-matched Gaussian for |x|<epsilon
  bool center = true;                 // subtract the closed-form mean
  std::uint64_t seed = 0;
};

// psi(u) = C Gamma(-Y) ((M-iu)^Y - M^Y + (G+iu)^Y - G^Y), principal branch.
std::complex<double> cgmy_char_exponent(double u, const CgmyParams& eta);

// E[e^{iu Z_t}]: exp(t psi(u)) for CGMY, the closed-form expression for VG.
std::complex<double> char_fn(double u, double t, const NoiseModel& model);

// d phi / d eta_j, analytic, ordered as eta().
Eigen::VectorXcd char_fn_eta_grad(double u, double t, const NoiseModel& model);

// n-th cumulant of Z_t, n in {1,..,4}.
double cumulant(int order, const NoiseModel& model, double t);

// Raw moment E[(Z_t)^order], order in {1,..,4}, from closed-form cumulants.
double moment(int order, const NoiseModel& model, double t);

// i.i.d. draws of the increment Z_h. CGMY: compound Poisson on |x| >= epsilon
// with exact mean correction, plus optional Gaussian small-jump compensation.
// VG: gamma-time-changed Brownian draw. Deterministic given cfg.seed.
std::vector<double> sample_increments(std::size_t n, const NoiseModel& model,
                                      const SamplingConfig& cfg);

// Rescale parameters so that Var(Z_1) = 1. CGMY: C -> C / Var. VG: law
// rescaling (drift, sigma) -> (drift, sigma) / sqrt(Var).
NoiseModel normalized_to_unit_variance(const NoiseModel& model);

}  // namespace levyident
