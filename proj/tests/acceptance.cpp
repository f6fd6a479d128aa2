// Acceptance suite: one pass/fail line per criterion, selectable by number.
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "levyident/asymptotics.hpp"
#include "levyident/config.hpp"
#include "levyident/experiment.hpp"
#include "levyident/pe.hpp"
#include "levyident/rng.hpp"

using namespace levyident;
namespace fs = std::filesystem;

namespace {

const NoiseModel kBenchmark = NoiseModel::cgmy(0.564, 1.0, 1.0, 0.5);
const SisoSystem kSystem{{-0.5}, {}};

ExperimentConfig benchmark_config() {
  ExperimentConfig cfg;
  cfg.mode = Mode::McValidate;
  cfg.system = kSystem;
  cfg.noise = kBenchmark;
  cfg.init = JointParams{kSystem, kBenchmark, 0.0};
  cfg.n_samples = 10'000;
  cfg.n_replications = 500;
  cfg.seed = 1;
  return cfg;
}

// 1. Exact filter round trip over random stable/inverse-stable systems.
bool criterion_1() {
  RngEngine rng = make_engine(1001);
  std::uniform_real_distribution<double> coeff(-0.9, 0.9);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int rep = 0; rep < 100; ++rep) {
    SisoSystem sys;
    const int p = static_cast<int>(rng() % 4), q = static_cast<int>(rng() % 4);
    do {
      sys.ar.assign(p, 0.0);
      sys.ma.assign(q, 0.0);
      for (double& a : sys.ar) a = coeff(rng);
      for (double& c : sys.ma) c = coeff(rng);
    } while (stability_margin(sys) <= 1e-3);
    std::vector<double> dz(500);
    for (double& v : dz) v = normal(rng);
    const std::vector<double> eps = innovation_filter(forward_filter(dz, sys), sys);
    for (int i = 0; i < 500; ++i)
      if (std::abs(eps[i] - dz[i]) > 1e-10) return false;
  }
  return true;
}

// 2. Empirical characteristic function of sampled increments vs char_fn.
bool criterion_2() {
  SamplingConfig cfg;
  cfg.seed = 1002;
  const std::size_t n = 100'000;
  const auto x = sample_increments(n, kBenchmark, cfg);
  for (int i = 1; i <= 20; ++i) {
    const double u = 0.1 * i;
    std::complex<double> acc = 0.0;
    for (double v : x)
      acc += std::complex<double>(std::cos(u * v), std::sin(u * v));
    const std::complex<double> emp = acc / static_cast<double>(n);
    double var_re = 0.0, var_im = 0.0;
    for (double v : x) {
      var_re += std::pow(std::cos(u * v) - emp.real(), 2);
      var_im += std::pow(std::sin(u * v) - emp.imag(), 2);
    }
    const double se_re = std::sqrt(var_re / n / (n - 1.0));
    const double se_im = std::sqrt(var_im / n / (n - 1.0));
    const std::complex<double> model = char_fn(u, 1.0, kBenchmark);
    if (std::abs(emp.real() - model.real()) > 4.0 * se_re) return false;
    if (std::abs(emp.imag() - model.imag()) > 4.0 * se_im) return false;
  }
  return true;
}

// 3. Closed-form second moment of the benchmark.
bool criterion_3() {
  const double m2 = moment(2, kBenchmark, 1.0);
  const double analytic = 0.564 * std::tgamma(1.5) * 2.0;
  return std::abs(m2 - analytic) < 1e-12 * analytic && std::abs(m2 - 1.0) < 5e-4;
}

// 4. Score unbiasedness in theta at a wrong eta.
bool criterion_4() {
  const NoiseModel wrong = NoiseModel::cgmy(0.45, 1.3, 1.1, 0.7);
  const JointParams rho{kSystem, wrong};
  const EcfGrid grid = EcfGrid::default_grid(10);
  const int reps = 500;
  const std::size_t n = 10'000;
  std::vector<double> g(reps);
  double mean = 0.0;
  for (int r = 0; r < reps; ++r) {
    SamplingConfig cfg;
    cfg.seed = derive_seed(1004, static_cast<std::uint64_t>(r));
    const Trajectory traj = forward_filter(sample_increments(n, kBenchmark, cfg), kSystem);
    g[r] = cost_grad(traj, rho, grid)[0];
    mean += g[r];
  }
  mean /= reps;
  double var = 0.0;
  for (double v : g) var += (v - mean) * (v - mean);
  var /= (reps - 1);
  return std::abs(mean) <= 4.0 * std::sqrt(var / reps);
}

// 5. Single-term efficiency curve: minimum near 0.73, ratio -> 1 at small u.
bool criterion_5() {
  const OptimalU opt = optimal_u(kBenchmark);
  if (std::abs(opt.ratio - 0.73) > 0.02) return false;
  return std::abs(efficiency_ratio(0.01, kBenchmark) - 1.0) < 1e-3;
}

// 6. Multi-term grids: some k <= 20 attains s/w^2 = 0.688 +- 0.01.
bool criterion_6() {
  const NoiseModel unit = normalized_to_unit_variance(kBenchmark);
  for (int k = 1; k <= 20; ++k) {
    const EcfGrid grid = EcfGrid::default_grid(k);
    const double w = w_scalar(grid, unit);
    const double s = s_scalar(grid, unit);
    if (std::abs(s / (w * w) - 0.688) <= 0.01) return true;
  }
  return false;
}

// 7. Small-u Taylor expansion of the efficiency ratio.
bool criterion_7() {
  for (double u : {0.01, 0.02, 0.03, 0.04, 0.05}) {
    const double model = 1.0 - (1.0 / 3.0) * (0.5 - 2.0) * (0.5 - 3.0) * u * u;
    if (std::abs(efficiency_ratio(u, kBenchmark) - model) > 10.0 * u * u * u * u)
      return false;
  }
  return true;
}

// 8. Monte Carlo validation of the asymptotic covariance theorem.
bool criterion_8() {
  ExperimentConfig pe_cfg = benchmark_config();
  pe_cfg.estimator = McEstimator::Pe;
  pe_cfg.seed = 801;
  const McReport pe_rep = mc_validate(pe_cfg, 1);
  const double pe_ratio = pe_rep.empirical_cov_scaled(0, 0) / 0.75;
  std::printf("    PE:  N var = %.4f, Sigma_P = 0.75, ratio %.3f\n",
              pe_rep.empirical_cov_scaled(0, 0), pe_ratio);
  if (pe_ratio < 0.85 || pe_ratio > 1.15) return false;

  ExperimentConfig ecf_cfg = benchmark_config();
  ecf_cfg.estimator = McEstimator::EcfTheta;
  ecf_cfg.seed = 802;
  const OptimalU opt = optimal_u(kBenchmark);
  ecf_cfg.grid = EcfGrid::make_identity(Eigen::VectorXd::Constant(1, opt.u));
  const McReport ecf_rep = mc_validate(ecf_cfg, 1);
  const double predicted = ecf_rep.closed_form_cov(0, 0);
  const double ecf_ratio = ecf_rep.empirical_cov_scaled(0, 0) / predicted;
  std::printf("    ECF: N var = %.4f, (s/w^2) Sigma_P = %.4f, ratio %.3f\n",
              ecf_rep.empirical_cov_scaled(0, 0), predicted, ecf_ratio);
  return ecf_ratio >= 0.85 && ecf_ratio <= 1.15;
}

// 9. Block diagonality of R*: the theta-eta cross block is statistically zero.
bool criterion_9() {
  const EcfGrid grid = EcfGrid::default_grid(10);
  const int reps = 300;
  const std::size_t n = 2000;
  const Eigen::VectorXd eta0 = kBenchmark.eta();
  const int de = kBenchmark.eta_dim();
  Eigen::MatrixXd samples(reps, de);
  for (int r = 0; r < reps; ++r) {
    SamplingConfig cfg;
    cfg.seed = derive_seed(1009, static_cast<std::uint64_t>(r));
    const Trajectory traj = forward_filter(sample_increments(n, kBenchmark, cfg), kSystem);
    for (int j = 0; j < de; ++j) {
      const double step = 0.05 * std::max(1.0, std::abs(eta0[j]));
      Eigen::VectorXd up = eta0, dn = eta0;
      up[j] += step;
      dn[j] -= step;
      const double gu =
          cost_grad(traj, JointParams{kSystem, kBenchmark.with_eta(up)}, grid)[0];
      const double gd =
          cost_grad(traj, JointParams{kSystem, kBenchmark.with_eta(dn)}, grid)[0];
      samples(r, j) = (gu - gd) / (2.0 * step) / static_cast<double>(n);
    }
  }
  for (int j = 0; j < de; ++j) {
    const double mean = samples.col(j).mean();
    const double var =
        (samples.col(j).array() - mean).square().sum() / (reps - 1);
    const double se = std::sqrt(var / reps);
    std::printf("    W_theta,eta[%d] = %.2e (3 SE = %.2e)\n", j, mean, 3.0 * se);
    if (std::abs(mean) > 3.0 * se) return false;
  }
  return true;
}

// 10. Combined-estimator eta covariance vs the closed-form sandwich.
bool criterion_10() {
  ExperimentConfig cfg = benchmark_config();
  cfg.estimator = McEstimator::Combined;
  cfg.free_eta = {0, 3};  // estimate (C, Y) with G, M known
  cfg.grid = EcfGrid::default_grid(10);
  cfg.seed = 810;
  const McReport rep = mc_validate(cfg, 1);
  bool ok = true;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      const double scale = std::sqrt(rep.closed_form_cov(i, i) *
                                     rep.closed_form_cov(j, j));
      const double err =
          std::abs(rep.empirical_cov_scaled(i, j) - rep.closed_form_cov(i, j));
      if (i <= j)
        std::printf("    cov[%d,%d]: empirical %.4f vs predicted %.4f\n", i, j,
                    rep.empirical_cov_scaled(i, j), rep.closed_form_cov(i, j));
      if (err > 0.2 * scale) ok = false;
    }
  return ok;
}

// 11. Analytic gradients match central finite differences.
bool criterion_11() {
  RngEngine rng = make_engine(1011);
  std::uniform_real_distribution<double> jitter(-0.1, 0.1);
  std::uniform_real_distribution<double> upick(0.1, 2.0);

  // 25 random admissible points for the ECF cost gradient.
  SamplingConfig scfg;
  scfg.seed = 77;
  const Trajectory traj =
      forward_filter(sample_increments(300, kBenchmark, scfg), kSystem);
  const EcfGrid grid = EcfGrid::default_grid(5);
  for (int rep = 0; rep < 25; ++rep) {
    const JointParams rho{SisoSystem{{-0.5 + jitter(rng)}, {}},
                          NoiseModel::cgmy(0.564 + jitter(rng), 1.0 + jitter(rng),
                                           1.0 + jitter(rng), 0.5 + jitter(rng))};
    const Eigen::VectorXd grad = cost_grad(traj, rho, grid);
    const Eigen::VectorXd eta = rho.eta.eta();
    for (int j = 0; j < 5; ++j) {
      JointParams up = rho, dn = rho;
      double step = 1e-6;
      if (j == 0) {
        up.theta.ar[0] += step;
        dn.theta.ar[0] -= step;
      } else {
        step = 1e-6 * std::max(1.0, std::abs(eta[j - 1]));
        Eigen::VectorXd u_eta = eta, d_eta = eta;
        u_eta[j - 1] += step;
        d_eta[j - 1] -= step;
        up.eta = rho.eta.with_eta(u_eta);
        dn.eta = rho.eta.with_eta(d_eta);
      }
      const double fd = (cost(traj, up, grid) - cost(traj, dn, grid)) / (2 * step);
      if (std::abs(grad[j] - fd) > 1e-5 * std::max(1.0, std::abs(fd)))
        return false;
    }
  }

  // 25 random points for the characteristic-function eta gradient.
  for (int rep = 0; rep < 25; ++rep) {
    const NoiseModel model =
        rep % 2 == 0
            ? NoiseModel::cgmy(0.5 + jitter(rng), 1.2 + jitter(rng),
                               0.9 + jitter(rng), 0.6 + jitter(rng))
            : NoiseModel::vg(jitter(rng), 1.0 + jitter(rng), 0.3 + jitter(rng));
    const double u = upick(rng);
    const Eigen::VectorXcd g = char_fn_eta_grad(u, 1.0, model);
    const Eigen::VectorXd eta = model.eta();
    for (int j = 0; j < model.eta_dim(); ++j) {
      const double step = 1e-5 * std::max(1.0, std::abs(eta[j]));
      Eigen::VectorXd up = eta, dn = eta;
      up[j] += step;
      dn[j] -= step;
      const std::complex<double> fd =
          (char_fn(u, 1.0, model.with_eta(up)) -
           char_fn(u, 1.0, model.with_eta(dn))) /
          (2.0 * step);
      if (std::abs(g[j] - fd) > 1e-5 * std::max(1.0, std::abs(fd))) return false;
    }
  }
  return true;
}

// 12. Byte-identical mc-validate reports across worker counts.
bool criterion_12() {
  ExperimentConfig cfg = benchmark_config();
  cfg.estimator = McEstimator::Pe;
  cfg.n_samples = 1000;
  cfg.n_replications = 20;
  cfg.seed = 812;
  const fs::path base = fs::temp_directory_path() / "levyident_acceptance_12";
  fs::remove_all(base);
  const fs::path d1 = base / "w1", d2 = base / "w4";
  run(cfg, 1, d1.string());
  run(cfg, 4, d2.string());
  const auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
  };
  const std::string a = slurp(d1 / "mc_report.json");
  const std::string b = slurp(d2 / "mc_report.json");
  return !a.empty() && a == b;
}

struct Criterion {
  int number;
  const char* description;
  bool (*fn)();
};

const Criterion kCriteria[] = {
    {1, "filter round trip is exact", criterion_1},
    {2, "sampled increments reproduce the characteristic function", criterion_2},
    {3, "closed-form benchmark variance", criterion_3},
    {4, "theta-score is unbiased for any eta", criterion_4},
    {5, "single-term efficiency minimum near 0.73", criterion_5},
    {6, "multi-term grids reach 0.688", criterion_6},
    {7, "small-u expansion of the efficiency ratio", criterion_7},
    {8, "MC covariances match Sigma_P and (s/w^2) Sigma_P", criterion_8},
    {9, "R* theta-eta cross block is statistically zero", criterion_9},
    {10, "combined-estimator eta covariance matches the sandwich", criterion_10},
    {11, "analytic gradients match finite differences", criterion_11},
    {12, "mc-validate reports are worker-count invariant", criterion_12},
};

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));
  bool all_pass = true;
  for (const Criterion& c : kCriteria) {
    if (!selected.empty() &&
        std::find(selected.begin(), selected.end(), c.number) == selected.end())
      continue;
    bool pass = false;
    try {
      pass = c.fn();
    } catch (const std::exception& e) {
      std::printf("    exception: %s\n", e.what());
    }
    std::printf("Criterion %d: %s - %s\n", c.number, pass ? "PASS" : "FAIL",
                c.description);
    std::fflush(stdout);
    all_pass = all_pass && pass;
  }
  return all_pass ? 0 : 1;
}
