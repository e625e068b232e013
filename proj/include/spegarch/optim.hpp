#pragma once

#include <Eigen/Dense>
#include <functional>

namespace spegarch {

using Objective = std::function<double(const Eigen::VectorXd&)>;

struct OptimResult {
  Eigen::VectorXd x;
  double f = 0.0;
  int iterations = 0;
  int n_evals = 0;
  bool converged = false;
};

// Derivative-free simplex minimizer. Non-finite objective values are treated
// as +infinity, so the search backs away from invalid regions on its own.
struct SimplexOptions {
  int max_evals = 2000;
  double f_tol = 1e-10;  // spread of values across the simplex
  double x_tol = 1e-8;   // spread of points across the simplex, infinity norm
  double step = 0.25;    // initial per-coordinate displacement
};

OptimResult nelder_mead(const Objective& f, const Eigen::VectorXd& x0,
                        const SimplexOptions& opts = {});

// Quasi-Newton polish with finite-difference gradients and a backtracking
// Armijo line search. Meant to refine a point that is already close.
struct QuasiNewtonOptions {
  int max_iter = 200;
  double g_tol = 1e-7;    // gradient infinity norm at the solution
  double f_tol = 1e-13;   // relative improvement per accepted step
  double fd_step = 1e-6;  // relative central-difference step
};

OptimResult bfgs_numeric(const Objective& f, const Eigen::VectorXd& x0,
                         const QuasiNewtonOptions& opts = {});

// Central differences with per-coordinate steps scaled by max(1, |x_i|).
Eigen::VectorXd fd_gradient(const Objective& f, const Eigen::VectorXd& x,
                            double step = 1e-6);
Eigen::MatrixXd fd_hessian(const Objective& f, const Eigen::VectorXd& x,
                           double step = 5e-4);

}  // namespace spegarch
