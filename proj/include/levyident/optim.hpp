#pragma once

#include <functional>
#include <string>

#include <Eigen/Dense>

namespace levyident {

enum class OptimStatus { Converged, MaxIterations, LeftDomain, SingularNormalMatrix };

std::string to_string(OptimStatus s);

struct OptimOptions {
  int max_iterations = 200;
  double grad_tol = 1e-8;  // converged when |grad| <= grad_tol * max(1, |cost|)
  double initial_lambda = 1e-3;
  Eigen::VectorXd lower;  // box for the free coordinates; empty = unbounded
  Eigen::VectorXd upper;
};

struct OptimResult {
  Eigen::VectorXd x;
  double cost = 0.0;       // sum of squared residuals at x
  double grad_norm = 0.0;  // |J^T r| at x
  int iterations = 0;
  OptimStatus status = OptimStatus::MaxIterations;
};

// Fills residuals and Jacobian at x; returns false if x is inadmissible
// (e.g. violates a stability constraint), in which case the step is rejected.
using ResidualFn =
    std::function<bool(const Eigen::VectorXd&, Eigen::VectorXd&, Eigen::MatrixXd&)>;

// Levenberg-Marquardt on sum-of-squares of the stacked residual vector, with
// projection onto the box. Deterministic given inputs. Throws
// std::invalid_argument if x0 is inadmissible or outside the box.
OptimResult levenberg_marquardt(const ResidualFn& fn, Eigen::VectorXd x0,
                                const OptimOptions& opts);

}  // namespace levyident
