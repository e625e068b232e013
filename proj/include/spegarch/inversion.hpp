#pragma once

#include <Eigen/Dense>

#include "spegarch/dynamics.hpp"
#include "spegarch/types.hpp"

namespace spegarch {

struct NewtonOptions {
  double tol = 1e-10;  // residual infinity-norm target
  int max_iter = 100;
  // Optional explicit starting point for x = ln eps^2 (size n). When empty the
  // solver starts from the volatility forecast implied by the previous step,
  // which already accounts for everything except the contemporaneous news.
  Eigen::VectorXd start;
};

// Determinant governing local solvability of the innovation recovery at one
// time point: det(I + (1/2) diag(eps_t) rho0 S W1 diag(theta + xi sign)).
// sign_prev is the sign vector the cross-derivative is evaluated at; the
// recovery itself uses the signs of eps_t.
double invertibility_det(const ModelParams& p, const WeightMatrix& w1,
                         const WeightMatrix& w2, const Eigen::VectorXd& eps_t,
                         const Eigen::VectorXd& sign_prev);

struct StepStatus {
  bool converged = false;
  int iterations = 0;
  double residual = 0.0;
};

// Low-level single-step solver on prefactored dynamics. r collects every term
// of the balance equation that does not involve the unknown x = ln eps_t^2:
//   (I - lambda0 W2) x + rho0 W1 g(eps_t(x)) = r
// with eps_t(x) = signs .* exp(x / 2). Damped Newton with the analytic
// Jacobian; when rho0 = 0 the equation is linear and solved directly.
StepStatus solve_innovation_step(const Dynamics& dyn, const Eigen::VectorXd& r,
                                 const Eigen::VectorXd& signs, Eigen::VectorXd& x,
                                 const NewtonOptions& opts);

// Recovers eps_t from the current returns and the previous state.
Eigen::VectorXd invert_step(const Eigen::VectorXd& y_t, const Eigen::VectorXd& y_prev,
                            const Eigen::VectorXd& eps_prev, const Dynamics& dyn,
                            const NewtonOptions& opts = {});
Eigen::VectorXd invert_step(const Eigen::VectorXd& y_t, const Eigen::VectorXd& y_prev,
                            const Eigen::VectorXd& eps_prev, const ModelParams& p,
                            const WeightMatrix& w1, const WeightMatrix& w2,
                            const NewtonOptions& opts = {});

struct InversionDiagnostics {
  Eigen::VectorXi iterations;
  Eigen::VectorXd residual_norms;
  Eigen::VectorXd jacobian_dets;  // invertibility determinant at the recovered point
};

struct InversionResult {
  Panel eps;
  InversionDiagnostics diag;
};

// Runs the recovery over a whole panel, starting from the conventional
// initial state. Throws NumericalError naming the failing time point if a
// step does not converge; returns with zeros is a ValidationError. The
// Dynamics overload reuses a prefactored operator across calls.
InversionResult invert_panel(const Panel& y, const Dynamics& dyn,
                             const InitialConditions& init, const NewtonOptions& opts = {});
InversionResult invert_panel(const Panel& y, const ModelParams& p, const WeightMatrix& w1,
                             const WeightMatrix& w2, const InitialConditions& init,
                             const NewtonOptions& opts = {});

}  // namespace spegarch
