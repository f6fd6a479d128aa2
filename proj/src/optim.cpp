#include "levyident/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace levyident {

std::string to_string(OptimStatus s) {
  switch (s) {
    case OptimStatus::Converged: return "converged";
    case OptimStatus::MaxIterations: return "max-iterations";
    case OptimStatus::LeftDomain: return "left-domain";
    case OptimStatus::SingularNormalMatrix: return "singular-normal-matrix";
  }
  return "unknown";
}

namespace {

Eigen::VectorXd project(const Eigen::VectorXd& x, const OptimOptions& opts,
                        bool* clamped) {
  if (opts.lower.size() == 0) {
    *clamped = false;
    return x;
  }
  Eigen::VectorXd y = x.cwiseMax(opts.lower).cwiseMin(opts.upper);
  *clamped = (y - x).cwiseAbs().maxCoeff() > 0.0;
  return y;
}

bool inside_box(const Eigen::VectorXd& x, const OptimOptions& opts) {
  if (opts.lower.size() == 0) return true;
  return (x.array() >= opts.lower.array()).all() &&
         (x.array() <= opts.upper.array()).all();
}

}  // namespace

OptimResult levenberg_marquardt(const ResidualFn& fn, Eigen::VectorXd x,
                                const OptimOptions& opts) {
  if (opts.lower.size() != opts.upper.size())
    throw std::invalid_argument("optimizer: box bounds dimension mismatch");
  if (!inside_box(x, opts))
    throw std::invalid_argument("optimizer: initial point outside the domain box");

  Eigen::VectorXd r;
  Eigen::MatrixXd jac;
  if (!fn(x, r, jac))
    throw std::invalid_argument("optimizer: initial point inadmissible");

  const int d = static_cast<int>(x.size());
  double cost = r.squaredNorm();
  double lambda = opts.initial_lambda;
  int consecutive_clamped = 0;

  OptimResult res;
  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    const Eigen::VectorXd grad = 2.0 * jac.transpose() * r;
    res.x = x;
    res.cost = cost;
    res.grad_norm = grad.norm();
    res.iterations = iter;
    if (res.grad_norm <= opts.grad_tol * std::max(1.0, std::abs(cost))) {
      res.status = OptimStatus::Converged;
      return res;
    }

    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    if (!jtj.allFinite() || jtj.diagonal().maxCoeff() <= 0.0) {
      res.status = OptimStatus::SingularNormalMatrix;
      return res;
    }

    bool accepted = false;
    for (int attempt = 0; attempt < 25 && !accepted; ++attempt) {
      Eigen::MatrixXd damped = jtj;
      damped.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-12);
      Eigen::LDLT<Eigen::MatrixXd> ldlt(damped);
      if (ldlt.info() != Eigen::Success) {
        res.status = OptimStatus::SingularNormalMatrix;
        return res;
      }
      const Eigen::VectorXd step = ldlt.solve(-0.5 * grad);
      if (!step.allFinite()) {
        res.status = OptimStatus::SingularNormalMatrix;
        return res;
      }
      bool clamped = false;
      const Eigen::VectorXd x_new = project(x + step, opts, &clamped);
      Eigen::VectorXd r_new;
      Eigen::MatrixXd jac_new;
      if (fn(x_new, r_new, jac_new) && r_new.squaredNorm() < cost) {
        x = x_new;
        r = std::move(r_new);
        jac = std::move(jac_new);
        cost = r.squaredNorm();
        lambda = std::max(lambda * 0.2, 1e-12);
        accepted = true;
        consecutive_clamped = clamped ? consecutive_clamped + 1 : 0;
        if (consecutive_clamped > 10) {
          res.status = OptimStatus::LeftDomain;
          res.x = x;
          res.cost = cost;
          res.iterations = iter + 1;
          res.grad_norm = (2.0 * jac.transpose() * r).norm();
          return res;
        }
      } else {
        lambda *= 10.0;
      }
    }
    if (!accepted) {
      // No descent step found; report the current point with its gradient.
      res.status = (res.grad_norm <= 1e2 * opts.grad_tol * std::max(1.0, std::abs(cost)))
                       ? OptimStatus::Converged
                       : OptimStatus::MaxIterations;
      return res;
    }
  }

  res.x = x;
  res.cost = cost;
  res.grad_norm = (2.0 * jac.transpose() * r).norm();
  res.iterations = opts.max_iterations;
  res.status = OptimStatus::MaxIterations;
  return res;
}

}  // namespace levyident
