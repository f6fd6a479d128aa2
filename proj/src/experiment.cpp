#include "levyident/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <limits>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "levyident/rng.hpp"

namespace levyident {

namespace {

using json = nlohmann::json;  // std::map keys: stable alphabetical order

McEstimator effective_estimator(const ExperimentConfig& cfg) {
  switch (cfg.mode) {
    case Mode::EstimatePe: return McEstimator::Pe;
    case Mode::EstimateEcf: return McEstimator::EcfJoint;
    case Mode::EstimateCombined: return McEstimator::Combined;
    default: return cfg.estimator;
  }
}

OptimOptions optim_options(const ExperimentConfig& cfg) {
  OptimOptions opts;
  opts.lower = cfg.domain_lower;
  opts.upper = cfg.domain_upper;
  return opts;
}

std::vector<std::string> coord_names(const ExperimentConfig& cfg) {
  const McEstimator est = effective_estimator(cfg);
  std::vector<std::string> names;
  const bool has_theta = est == McEstimator::Pe || est == McEstimator::EcfTheta ||
                         est == McEstimator::EcfJoint;
  if (has_theta) {
    for (int i = 0; i < cfg.system.p(); ++i)
      names.push_back("a" + std::to_string(i + 1));
    for (int j = 0; j < cfg.system.q(); ++j)
      names.push_back("c" + std::to_string(j + 1));
  }
  if (est == McEstimator::EcfJoint || est == McEstimator::EcfEta ||
      est == McEstimator::Combined) {
    const std::vector<std::string> all = cfg.noise.eta_names();
    for (int j : cfg.resolved_free_eta()) names.push_back(all[j]);
  }
  if (est == McEstimator::Pe && cfg.estimate_mean) names.push_back("m");
  return names;
}

Eigen::VectorXd pack_estimate(const ExperimentConfig& cfg, const Estimate& est) {
  const McEstimator which = effective_estimator(cfg);
  std::vector<double> out;
  const bool has_theta = which == McEstimator::Pe ||
                         which == McEstimator::EcfTheta ||
                         which == McEstimator::EcfJoint;
  if (has_theta) {
    const Eigen::VectorXd th = est.rho.theta.theta();
    out.insert(out.end(), th.data(), th.data() + th.size());
  }
  if (which == McEstimator::EcfJoint || which == McEstimator::EcfEta ||
      which == McEstimator::Combined) {
    const Eigen::VectorXd eta = est.rho.eta.eta();
    for (int j : cfg.resolved_free_eta()) out.push_back(eta[j]);
  }
  if (which == McEstimator::Pe && cfg.estimate_mean)
    out.push_back(est.rho.mean_shift);
  return Eigen::Map<const Eigen::VectorXd>(out.data(),
                                           static_cast<Eigen::Index>(out.size()));
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

json params_to_json(const JointParams& rho) {
  json theta;
  theta["ar"] = rho.theta.ar;
  theta["ma"] = rho.theta.ma;
  json eta;
  eta["family"] = rho.eta.family();
  const std::vector<std::string> names = rho.eta.eta_names();
  const Eigen::VectorXd vals = rho.eta.eta();
  for (std::size_t j = 0; j < names.size(); ++j) eta[names[j]] = vals[j];
  json out;
  out["eta"] = eta;
  out["mean_shift"] = rho.mean_shift;
  out["theta"] = theta;
  return out;
}

std::string format_double(double x) {
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

}  // namespace

void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
  std::ostringstream os;
  os << "dy,h=" << format_double(traj.h) << ",n=" << traj.dy.size() << "\n";
  for (double v : traj.dy) os << format_double(v) << "\n";
  write_file_atomic(path, os.str());
}

Trajectory read_trajectory_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read trajectory file: " + path);
  std::string header;
  if (!std::getline(in, header) || header.rfind("dy,h=", 0) != 0)
    throw std::runtime_error("bad trajectory header in " + path);
  Trajectory traj;
  std::size_t n = 0;
  if (std::sscanf(header.c_str(), "dy,h=%lf,n=%zu", &traj.h, &n) != 2)
    throw std::runtime_error("bad trajectory header in " + path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    traj.dy.push_back(std::stod(line));
  }
  if (traj.dy.size() != n)
    throw std::runtime_error("trajectory length mismatch in " + path);
  return traj;
}

Trajectory simulate_trajectory(const ExperimentConfig& cfg, int rep) {
  SamplingConfig sampling = cfg.sampling;
  sampling.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(rep));
  const std::vector<double> dz =
      sample_increments(cfg.n_samples, cfg.noise, sampling);
  if (cfg.system.dim() == 0) return Trajectory{dz, sampling.h};
  return forward_filter(dz, cfg.system, sampling.h);
}

Estimate run_replication(const ExperimentConfig& cfg, int rep) {
  const Trajectory traj = simulate_trajectory(cfg, rep);
  const McEstimator est = effective_estimator(cfg);
  EstimateOptions opts;
  opts.optim = optim_options(cfg);
  opts.free_eta = cfg.resolved_free_eta();
  switch (est) {
    case McEstimator::Pe:
      return cfg.estimate_mean
                 ? estimate_pe_with_mean(traj, cfg.init.theta,
                                         cfg.init.mean_shift, opts.optim)
                 : estimate_pe(traj, cfg.init.theta, opts.optim);
    case McEstimator::EcfTheta: {
      const JointParams init{cfg.init.theta, cfg.noise, cfg.init.mean_shift};
      return estimate_theta_known_eta(traj, init, cfg.grid, opts);
    }
    case McEstimator::EcfJoint:
      return estimate_joint(traj, cfg.init, cfg.grid, opts);
    case McEstimator::EcfEta:
      return estimate_eta_known_theta(traj, cfg.system, cfg.init.eta, cfg.grid,
                                      opts);
    case McEstimator::Combined: {
      CombinedOptions copts;
      copts.ecf = opts;
      copts.estimate_mean = cfg.estimate_mean;
      copts.second_pass = cfg.second_pass;
      copts.second_pass_u = cfg.second_pass_u;
      return combined_pe_ecf(traj, cfg.init, cfg.grid, copts);
    }
  }
  throw std::logic_error("unreachable estimator");
}

Eigen::MatrixXd closed_form_covariance(const ExperimentConfig& cfg) {
  const McEstimator est = effective_estimator(cfg);
  const double t = cfg.sampling.h;
  const auto eta_sandwich = [&]() {
    const EtaBlocks blocks =
        eta_blocks(cfg.grid, cfg.noise, cfg.resolved_free_eta(), t);
    const Eigen::MatrixXd winv = blocks.w_eta_eta.inverse();
    return Eigen::MatrixXd(winv * blocks.cov_v_eta * winv.transpose());
  };
  switch (est) {
    case McEstimator::Pe: {
      const Eigen::MatrixXd base =
          cumulant(2, cfg.noise, t) * sigma_p(cfg.system, cfg.noise);
      if (!cfg.estimate_mean) return base;
      const int d = static_cast<int>(base.rows());
      Eigen::MatrixXd out = Eigen::MatrixXd::Zero(d + 1, d + 1);
      out.topLeftCorner(d, d) = base;
      out(d, d) = cumulant(2, cfg.noise, t);  // N Var(mean of innovations)
      return out;
    }
    case McEstimator::EcfTheta: {
      const double w = w_scalar(cfg.grid, cfg.noise, t);
      const double s = s_scalar(cfg.grid, cfg.noise, t);
      return (s / (w * w)) * sigma_p(cfg.system, cfg.noise);
    }
    case McEstimator::EcfJoint: {
      // R* is block diagonal; the prediction is assembled blockwise with
      // zero cross blocks.
      const double w = w_scalar(cfg.grid, cfg.noise, t);
      const double s = s_scalar(cfg.grid, cfg.noise, t);
      const Eigen::MatrixXd theta_block =
          (s / (w * w)) * sigma_p(cfg.system, cfg.noise);
      const Eigen::MatrixXd eta_block = eta_sandwich();
      const int dt = static_cast<int>(theta_block.rows());
      const int de = static_cast<int>(eta_block.rows());
      Eigen::MatrixXd out = Eigen::MatrixXd::Zero(dt + de, dt + de);
      out.topLeftCorner(dt, dt) = theta_block;
      out.bottomRightCorner(de, de) = eta_block;
      return out;
    }
    case McEstimator::EcfEta:
    case McEstimator::Combined:
      return eta_sandwich();
  }
  throw std::logic_error("unreachable estimator");
}

McReport mc_validate(const ExperimentConfig& cfg, int workers) {
  const int n_rep = cfg.n_replications;
  workers = std::max(1, std::min(workers, n_rep));
  std::vector<Eigen::VectorXd> packed(n_rep);
  std::vector<std::string> reason(n_rep);
  std::vector<char> ok(n_rep, 0);

  std::atomic<int> next{0};
  const auto worker = [&]() {
    for (int r = next.fetch_add(1); r < n_rep; r = next.fetch_add(1)) {
      try {
        const Estimate est = run_replication(cfg, r);
        if (!est.converged) {
          reason[r] = "optimizer: " + to_string(est.status);
          continue;
        }
        packed[r] = pack_estimate(cfg, est);
        ok[r] = 1;
      } catch (const std::exception& e) {
        reason[r] = e.what();
      }
    }
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();
  }

  McReport rep;
  rep.estimator = to_string(effective_estimator(cfg));
  rep.n_samples = cfg.n_samples;
  rep.n_replications = n_rep;
  rep.coord_names = coord_names(cfg);
  for (int r = 0; r < n_rep; ++r) {
    if (ok[r]) {
      rep.replication_index.push_back(r);
      rep.per_replication.push_back(packed[r]);
    } else {
      rep.failures.push_back({r, reason[r]});
    }
  }
  rep.n_success = static_cast<int>(rep.per_replication.size());

  const int n_failed = n_rep - rep.n_success;
  if (n_failed * 20 > n_rep) {  // 5% failure budget
    std::string msg = "failure budget exceeded: " + std::to_string(n_failed) +
                      "/" + std::to_string(n_rep) + " replications failed";
    if (!rep.failures.empty())
      msg += " (first: replication " + std::to_string(rep.failures[0].index) +
             ": " + rep.failures[0].reason + ")";
    throw FailureBudgetExceeded(msg);
  }

  const int d = static_cast<int>(rep.coord_names.size());
  rep.empirical_mean = Eigen::VectorXd::Zero(d);
  for (const Eigen::VectorXd& x : rep.per_replication) rep.empirical_mean += x;
  if (rep.n_success > 0) rep.empirical_mean /= rep.n_success;
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
  if (rep.n_success > 1) {
    for (const Eigen::VectorXd& x : rep.per_replication) {
      const Eigen::VectorXd c = x - rep.empirical_mean;
      cov += c * c.transpose();
    }
    cov /= (rep.n_success - 1);  // unbiased normalization
  }
  rep.empirical_cov_scaled = static_cast<double>(cfg.n_samples) * cov;
  rep.closed_form_cov = closed_form_covariance(cfg);
  rep.ratio_table.resize(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      rep.ratio_table(i, j) = rep.closed_form_cov(i, j) != 0.0
                                  ? rep.empirical_cov_scaled(i, j) /
                                        rep.closed_form_cov(i, j)
                                  : 0.0;
  return rep;
}

EfficiencyReport efficiency_report(const ExperimentConfig& cfg) {
  EfficiencyReport rep;
  const int n_scan = 300;
  const double lo = 0.01, hi = 3.0;
  for (int i = 0; i < n_scan; ++i) {
    EfficiencyRow row;
    row.u = lo + (hi - lo) * i / (n_scan - 1);
    row.g = efficiency_g(row.u, cfg.noise);
    row.ratio = row.g / (4.0 * row.u * row.u);
    rep.scan.push_back(row);
  }
  const OptimalU opt = optimal_u(cfg.noise, lo, hi);
  rep.u_opt = opt.u;
  rep.ratio_min = opt.ratio;
  rep.unimodal = opt.unimodal;

  // Multi-u table on the default grids, unit-variance normalization.
  const NoiseModel unit = normalized_to_unit_variance(cfg.noise);
  rep.best_ratio = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= cfg.efficiency_max_k; ++k) {
    const EcfGrid grid = EcfGrid::default_grid(k);
    const double w = w_scalar(grid, unit);
    const double s = s_scalar(grid, unit);
    const double ratio = s / (w * w);
    rep.k_values.push_back(k);
    rep.k_ratios.push_back(ratio);
    if (ratio < rep.best_ratio) {
      rep.best_ratio = ratio;
      rep.best_k = k;
    }
  }
  return rep;
}

std::string to_json(const McReport& report) {
  json j;
  j["closed_form_cov"] = matrix_to_json(report.closed_form_cov);
  j["coord_names"] = report.coord_names;
  j["empirical_cov_scaled"] = matrix_to_json(report.empirical_cov_scaled);
  j["empirical_mean"] = vector_to_json(report.empirical_mean);
  j["estimator"] = report.estimator;
  json failures = json::array();
  for (const ReplicationFailure& f : report.failures) {
    json jf;
    jf["index"] = f.index;
    jf["reason"] = f.reason;
    failures.push_back(jf);
  }
  j["failures"] = failures;
  j["n_failed"] = report.n_replications - report.n_success;
  j["n_replications"] = report.n_replications;
  j["n_samples"] = report.n_samples;
  j["n_success"] = report.n_success;
  json per_rep = json::array();
  for (std::size_t i = 0; i < report.per_replication.size(); ++i) {
    json jr;
    jr["index"] = report.replication_index[i];
    jr["params"] = vector_to_json(report.per_replication[i]);
    per_rep.push_back(jr);
  }
  j["per_replication"] = per_rep;
  j["ratio_table"] = matrix_to_json(report.ratio_table);
  return j.dump(2) + "\n";
}

std::string to_json(const Estimate& est, const ExperimentConfig& cfg) {
  json j = params_to_json(est.rho);
  j["converged"] = est.converged;
  j["cost"] = est.cost;
  j["estimator"] = to_string(effective_estimator(cfg));
  j["grad_norm"] = est.grad_norm;
  j["iterations"] = est.iterations;
  j["stages"] = est.stages;
  j["status"] = to_string(est.status);
  if (est.has_covariance) j["covariance"] = matrix_to_json(est.covariance);
  return j.dump(2) + "\n";
}

std::string to_json(const EfficiencyReport& report) {
  json j;
  j["best_k"] = report.best_k;
  j["best_ratio"] = report.best_ratio;
  json table = json::array();
  for (std::size_t i = 0; i < report.k_values.size(); ++i) {
    json row;
    row["k"] = report.k_values[i];
    row["ratio"] = report.k_ratios[i];
    table.push_back(row);
  }
  j["multi_u"] = table;
  j["ratio_min"] = report.ratio_min;
  j["u_opt"] = report.u_opt;
  j["unimodal"] = report.unimodal;
  return j.dump(2) + "\n";
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp);
    out << content;
    if (!out.flush()) throw std::runtime_error("write failed: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

std::vector<std::string> run(const ExperimentConfig& cfg, int workers,
                             const std::string& out_dir) {
  const std::filesystem::path dir =
      out_dir.empty() ? std::filesystem::path(cfg.output_dir)
                      : std::filesystem::path(out_dir);
  std::filesystem::create_directories(dir);
  std::vector<std::string> written;
  const auto emit = [&](const std::string& name, const std::string& content) {
    const std::string path = (dir / name).string();
    write_file_atomic(path, content);
    written.push_back(path);
  };

  switch (cfg.mode) {
    case Mode::Simulate: {
      const Trajectory traj = simulate_trajectory(cfg, 0);
      write_trajectory_csv((dir / "trajectory.csv").string(), traj);
      written.push_back((dir / "trajectory.csv").string());
      json meta = params_to_json(
          JointParams{cfg.system, cfg.noise, cfg.init.mean_shift});
      meta["h"] = cfg.sampling.h;
      meta["n_samples"] = cfg.n_samples;
      meta["seed"] = cfg.seed;
      emit("trajectory_meta.json", meta.dump(2) + "\n");
      break;
    }
    case Mode::EstimatePe:
    case Mode::EstimateEcf:
    case Mode::EstimateCombined: {
      const Estimate est = run_replication(cfg, 0);
      emit("estimate.json", to_json(est, cfg));
      break;
    }
    case Mode::Efficiency: {
      const EfficiencyReport rep = efficiency_report(cfg);
      std::ostringstream csv;
      csv << "u,g,ratio\n";
      for (const EfficiencyRow& row : rep.scan)
        csv << format_double(row.u) << ',' << format_double(row.g) << ','
            << format_double(row.ratio) << "\n";
      emit("efficiency_scan.csv", csv.str());
      emit("efficiency.json", to_json(rep));
      break;
    }
    case Mode::McValidate: {
      const McReport rep = mc_validate(cfg, workers);
      emit("mc_report.json", to_json(rep));
      break;
    }
  }
  return written;
}

}  // namespace levyident
