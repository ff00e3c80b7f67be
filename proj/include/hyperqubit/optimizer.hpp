#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace hyperqubit {

struct OptimizerConfig {
  int max_cycles = 30;
  int simplex_iterations_per_dim = 60;
  double initial_step = 0.1;
  double rel_tol = 1e-9;
  double step_tol = 1e-7;
  bool quasi_newton = true;
  int quasi_newton_iterations = 400;
  double gradient_tol = 1e-8;
  /// Converged as soon as f <= f_abs_tol, for objectives whose minimum is known to be 0.
  double f_abs_tol = -1.0;
};

struct OptimizerResult {
  Eigen::VectorXd x;
  double f = 0.0;
  long n_evaluations = 0;
  bool converged = false;
  /// Objective value after every accepted step, in order.
  std::vector<double> trace;
};

using Objective = std::function<double(const Eigen::VectorXd&)>;
/// Returns f and fills g with the gradient.
using ObjectiveWithGradient = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;

/// Cycles of Nelder-Mead (GSL nmsimplex2) followed by BFGS (GSL vector_bfgs2) refinement. Converged
/// when a full cycle changes f by less than rel_tol (relative) and moves x by less than step_tol.
/// Without an analytic gradient, central differences are used for the refinement.
OptimizerResult minimize(const Objective& f, const ObjectiveWithGradient* fdf, const Eigen::VectorXd& x0,
                         const OptimizerConfig& config = {});

}  // namespace hyperqubit
