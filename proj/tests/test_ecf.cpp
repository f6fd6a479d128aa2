#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "levyident/ecf.hpp"
#include "levyident/rng.hpp"

using namespace levyident;

namespace {

const NoiseModel kBenchmark = NoiseModel::cgmy(0.564, 1.0, 1.0, 0.5);
const SisoSystem kSystem{{-0.5}, {}};

Trajectory benchmark_trajectory(std::size_t n, std::uint64_t seed) {
  SamplingConfig cfg;
  cfg.seed = seed;
  return forward_filter(sample_increments(n, kBenchmark, cfg), kSystem);
}

}  // namespace

TEST_CASE("grid construction") {
  CHECK_THROWS_AS(EcfGrid::make_identity(Eigen::VectorXd::Zero(1)),
                  std::invalid_argument);
  CHECK_THROWS_AS(EcfGrid::make_identity(Eigen::VectorXd{}), std::invalid_argument);
  Eigen::VectorXd unordered(2);
  unordered << 0.5, 0.2;
  CHECK_THROWS_AS(EcfGrid::make_identity(unordered), std::invalid_argument);
  Eigen::VectorXd u(2);
  u << 0.2, 0.5;
  Eigen::MatrixXd bad = Eigen::MatrixXd::Identity(2, 2);
  bad(0, 1) = 5.0;  // asymmetric
  CHECK_THROWS_AS(EcfGrid::make(u, bad), std::invalid_argument);
  Eigen::MatrixXd indef = -Eigen::MatrixXd::Identity(2, 2);
  CHECK_THROWS_AS(EcfGrid::make(u, indef), std::invalid_argument);

  const EcfGrid grid = EcfGrid::default_grid(5);
  CHECK(grid.k() == 5);
  CHECK(grid.u[0] == doctest::Approx(0.1));
  CHECK(grid.u[4] == doctest::Approx(0.5));
  CHECK((grid.k_inv_sqrt.transpose() * grid.k_inv_sqrt -
         grid.k_weight.inverse())
            .cwiseAbs()
            .maxCoeff() < 1e-12);

  Eigen::MatrixXd spd(2, 2);
  spd << 2.0, 0.3, 0.3, 1.0;
  const EcfGrid wgrid = EcfGrid::make(u, spd);
  CHECK((wgrid.k_inv_sqrt.transpose() * wgrid.k_inv_sqrt - spd.inverse())
            .cwiseAbs()
            .maxCoeff() < 1e-12);
}

TEST_CASE("score function") {
  CHECK(std::abs(score(0.0, 1.7, 1.0, kBenchmark)) < 1e-14);
  for (double u : {0.3, 1.0, 2.0})
    for (double e : {-2.0, 0.0, 1.5})
      CHECK(std::abs(score(u, e, 1.0, kBenchmark)) <= 2.0);

  SUBCASE("mean of the score at truth is statistically zero") {
    SamplingConfig cfg;
    cfg.seed = 5;
    const auto x = sample_increments(100'000, kBenchmark, cfg);
    const double u = 0.7;
    std::complex<double> acc = 0.0;
    for (double v : x) acc += score(u, v, 1.0, kBenchmark);
    acc /= static_cast<double>(x.size());
    // |score| <= 2, so 4 SE is at most 4*2/sqrt(n) per component.
    CHECK(std::abs(acc) < 8.0 / std::sqrt(static_cast<double>(x.size())));
  }
}

TEST_CASE("ecf cost") {
  const Trajectory traj = benchmark_trajectory(2000, 9);
  const JointParams truth{kSystem, kBenchmark};

  SUBCASE("identity weighting equals the direct double sum") {
    const EcfGrid grid = EcfGrid::default_grid(3);
    const std::vector<double> eps = innovation_filter(traj, kSystem);
    double direct = 0.0;
    for (double e : eps)
      for (int l = 0; l < grid.k(); ++l)
        direct += std::norm(score(grid.u[l], e, traj.h, kBenchmark));
    CHECK(cost(traj, truth, grid) == doctest::Approx(direct).epsilon(1e-12));
  }

  SUBCASE("scaling K by 2 halves the cost") {
    Eigen::VectorXd u(2);
    u << 0.4, 0.9;
    const EcfGrid grid = EcfGrid::make_identity(u);
    const EcfGrid grid2 = EcfGrid::make(u, 2.0 * Eigen::MatrixXd::Identity(2, 2));
    CHECK(cost(traj, truth, grid2) ==
          doctest::Approx(0.5 * cost(traj, truth, grid)).epsilon(1e-12));
  }

  SUBCASE("sign-flipped grid gives the same cost for a symmetric law") {
    Eigen::VectorXd u(3), flipped(3);
    u << 0.2, 0.5, 1.1;
    flipped << -1.1, -0.5, -0.2;
    const double a = cost(traj, truth, EcfGrid::make_identity(u));
    const double b = cost(traj, truth, EcfGrid::make_identity(flipped));
    CHECK(a == doctest::Approx(b).epsilon(1e-12));
  }

  SUBCASE("cost per sample converges to the population value at truth") {
    const EcfGrid grid = EcfGrid::default_grid(4);
    // W(rho*) = sum Kinv_{lm} (phi(u_l - u_m) - phi(u_l) phi(-u_m)).
    const Eigen::MatrixXd kinv = grid.k_inv_sqrt.transpose() * grid.k_inv_sqrt;
    std::complex<double> pop = 0.0;
    for (int l = 0; l < grid.k(); ++l)
      for (int m = 0; m < grid.k(); ++m)
        pop += kinv(l, m) * (char_fn(grid.u[l] - grid.u[m], 1.0, kBenchmark) -
                             char_fn(grid.u[l], 1.0, kBenchmark) *
                                 char_fn(-grid.u[m], 1.0, kBenchmark));
    REQUIRE(std::abs(pop.imag()) < 1e-12);
    const int reps = 40;
    const std::size_t n = 2000;
    std::vector<double> vals(reps);
    double mean = 0.0;
    for (int r = 0; r < reps; ++r) {
      const Trajectory t = benchmark_trajectory(n, 100 + r);
      vals[r] = cost(t, truth, grid) / static_cast<double>(n);
      mean += vals[r];
    }
    mean /= reps;
    double var = 0.0;
    for (double v : vals) var += (v - mean) * (v - mean);
    var /= (reps - 1);
    const double se = std::sqrt(var / reps);
    CHECK(std::abs(mean - pop.real()) < 3.0 * se + 1e-9);
  }
}

TEST_CASE("ecf cost gradient matches finite differences") {
  const Trajectory traj = benchmark_trajectory(500, 17);
  const EcfGrid grid = EcfGrid::default_grid(5);
  RngEngine rng = make_engine(12);
  std::uniform_real_distribution<double> jitter(-0.05, 0.05);
  for (int rep = 0; rep < 10; ++rep) {
    JointParams rho{SisoSystem{{-0.5 + jitter(rng)}, {}},
                    NoiseModel::cgmy(0.564 + jitter(rng), 1.0 + jitter(rng),
                                     1.0 + jitter(rng), 0.5 + jitter(rng))};
    const Eigen::VectorXd grad = cost_grad(traj, rho, grid);
    // theta coordinate
    {
      const double step = 1e-6;
      JointParams up = rho, dn = rho;
      up.theta.ar[0] += step;
      dn.theta.ar[0] -= step;
      const double fd = (cost(traj, up, grid) - cost(traj, dn, grid)) / (2 * step);
      CHECK(grad[0] == doctest::Approx(fd).epsilon(1e-5));
    }
    // eta coordinates
    const Eigen::VectorXd eta = rho.eta.eta();
    for (int j = 0; j < 4; ++j) {
      const double step = 1e-6 * std::max(1.0, std::abs(eta[j]));
      Eigen::VectorXd u_eta = eta, d_eta = eta;
      u_eta[j] += step;
      d_eta[j] -= step;
      JointParams up = rho, dn = rho;
      up.eta = rho.eta.with_eta(u_eta);
      dn.eta = rho.eta.with_eta(d_eta);
      const double fd = (cost(traj, up, grid) - cost(traj, dn, grid)) / (2 * step);
      CHECK(grad[1 + j] == doctest::Approx(fd).epsilon(1e-5));
    }
  }
}

TEST_CASE("joint estimation") {
  const Trajectory traj = benchmark_trajectory(10'000, 31);
  const EcfGrid grid = EcfGrid::default_grid(10);
  const JointParams truth{kSystem, kBenchmark};
  EstimateOptions opts;

  SUBCASE("start at truth: converges immediately and stays close") {
    const Estimate est = estimate_joint(traj, truth, grid, opts);
    CHECK(est.converged);
    CHECK(std::abs(est.rho.theta.ar[0] + 0.5) < 0.05);
    CHECK((est.rho.eta.eta() - kBenchmark.eta()).cwiseAbs().maxCoeff() < 0.25);
  }

  SUBCASE("perturbed start reaches the same minimizer") {
    const Estimate base = estimate_joint(traj, truth, grid, opts);
    JointParams shifted = truth;
    shifted.theta.ar[0] += 0.1;
    shifted.eta = kBenchmark.with_eta(kBenchmark.eta().array() + 0.1);
    const Estimate moved = estimate_joint(traj, shifted, grid, opts);
    CHECK(moved.converged);
    CHECK(std::abs(moved.rho.theta.ar[0] - base.rho.theta.ar[0]) < 1e-6);
    CHECK((moved.rho.eta.eta() - base.rho.eta.eta()).cwiseAbs().maxCoeff() < 1e-5);
  }

  SUBCASE("determinism: identical inputs give bit-identical estimates") {
    const Estimate a = estimate_joint(traj, truth, grid, opts);
    const Estimate b = estimate_joint(traj, truth, grid, opts);
    CHECK(a.rho.theta.ar[0] == b.rho.theta.ar[0]);
    CHECK((a.rho.eta.eta() == b.rho.eta.eta()));
    CHECK(a.cost == b.cost);
    CHECK(a.iterations == b.iterations);
  }

  SUBCASE("identifiability guard: 2k < free coordinates") {
    const EcfGrid tiny = EcfGrid::default_grid(2);  // 2k = 4 < 5 = 1 + 4
    CHECK_THROWS_AS(estimate_joint(traj, truth, tiny, opts),
                    std::invalid_argument);
  }
}

TEST_CASE("eta estimation with known theta") {
  EstimateOptions opts;
  const EcfGrid grid = EcfGrid::default_grid(10);

  SUBCASE("identity system reduces to the i.i.d. fit") {
    SamplingConfig cfg;
    cfg.seed = 77;
    const Trajectory traj{sample_increments(20'000, kBenchmark, cfg), 1.0};
    const Estimate est =
        estimate_eta_known_theta(traj, SisoSystem{}, kBenchmark, grid, opts);
    CHECK(est.converged);
    // G and M are weakly identified at this sample size; allow generous
    // absolute error but require the fitted characteristic function to be
    // close to the truth where the data constrain it.
    CHECK((est.rho.eta.eta() - kBenchmark.eta()).cwiseAbs().maxCoeff() < 0.5);
    for (double u : {0.3, 0.7, 1.2})
      CHECK(std::abs(char_fn(u, 1.0, est.rho.eta) - char_fn(u, 1.0, kBenchmark)) <
            0.02);
  }

  SUBCASE("restricting the free coordinates fixes the others") {
    const Trajectory traj = benchmark_trajectory(5'000, 41);
    EstimateOptions restricted;
    restricted.free_eta = {0, 3};  // C and Y
    const Estimate est =
        estimate_eta_known_theta(traj, kSystem, kBenchmark, grid, restricted);
    CHECK(est.converged);
    CHECK(est.rho.eta.eta()[1] == 1.0);  // G untouched
    CHECK(est.rho.eta.eta()[2] == 1.0);  // M untouched
  }
}

TEST_CASE("theta estimation with known eta via a single-term grid") {
  const Trajectory traj = benchmark_trajectory(10'000, 53);
  Eigen::VectorXd u(1);
  u << 0.9;
  const EcfGrid grid = EcfGrid::make_identity(u);
  EstimateOptions opts;
  const Estimate est =
      estimate_theta_known_eta(traj, JointParams{kSystem, kBenchmark}, grid, opts);
  CHECK(est.converged);
  CHECK(std::abs(est.rho.theta.ar[0] + 0.5) < 0.05);
}
