#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "spegarch/dynamics.hpp"
#include "spegarch/inversion.hpp"
#include "spegarch/optim.hpp"
#include "spegarch/types.hpp"

namespace spegarch {

// Free parameters are reported in the canonical order
//   (alpha, rho0, rho1, lambda0, lambda1, theta[, theta_temporal])
// with the last entry present only under the two-theta variant. xi stays
// fixed at one throughout estimation.
Eigen::VectorXd canonical_vector(const ModelParams& p);
Eigen::VectorXd canonical_vector(const ModelParams& p, double theta_temporal);
ModelParams params_from_canonical(const Eigen::VectorXd& v, double xi = 1.0);

// Conditional quasi log-likelihood of the returns panel: the panel is
// inverted once at p, then Gaussian innovation densities are combined with
// the change-of-variables Jacobian, whose determinant splits into the
// volatility product and the news factor. Time points 1..burn are evaluated
// but excluded from the sum.
double log_likelihood(const ModelParams& p, const Panel& y, const WeightMatrix& w1,
                      const WeightMatrix& w2, const InitialConditions& init, int burn,
                      const NewtonOptions& newton = {});
double log_likelihood(const ModelParams& p, const LeverageSpec& lev, const Panel& y,
                      const WeightMatrix& w1, const WeightMatrix& w2,
                      const InitialConditions& init, int burn,
                      const NewtonOptions& newton = {});

struct FitOptions {
  int n_starts = 20;  // random feasible starts screened by objective value
  int n_local = 5;    // best screened starts refined by simplex search
  int n_polish = 2;   // best refined candidates polished by quasi-Newton
  std::uint64_t seed = 1;
  int burn = 5;
  bool two_theta = false;
  int threads = 0;  // 0: ST_EGARCH_THREADS or hardware
  bool std_errors = true;
  // Optional per-coordinate search box in canonical parameter order, applied
  // on top of the stationarity constraints. Both empty (the default) leaves
  // the search unbounded; otherwise each needs one entry per estimated
  // parameter.
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  SimplexOptions simplex{.max_evals = 1000, .f_tol = 1e-8, .x_tol = 1e-6, .step = 0.25};
  QuasiNewtonOptions polish{.max_iter = 80, .g_tol = 1e-5, .f_tol = 1e-12, .fd_step = 1e-6};
  NewtonOptions newton{};
};

struct StartRecord {
  Eigen::VectorXd params;   // canonical order, original scale
  double nll_screen = 0.0;  // objective value at the start
  double nll_final = 0.0;   // after the deepest stage this start reached
  int stage = 0;            // 0 screened only, 1 simplex, 2 polished
};

struct EstimationResult {
  ModelParams params;
  double theta_temporal = 0.0;  // equals params.theta unless two_theta
  Eigen::VectorXd std_errors;   // canonical order; NaN entries when unavailable
  bool se_ok = false;
  double hessian_ridge = 0.0;  // regularization added to reach a usable Hessian
  double loglik = 0.0;
  double aic = 0.0;
  double bic = 0.0;
  bool converged = false;
  bool boundary = false;  // optimum pinned near a constraint edge
  int n_inversions = 0;   // likelihood evaluations, each inverting the panel
  int burn_dropped = 0;
  std::vector<StartRecord> trace;
};

// Quasi-maximum likelihood fit under |theta| < 1 and the stationarity bound
// |lambda0| ||W2||_inf + |lambda1| < 1 - 1e-3 (plain |lambda0| + |lambda1|
// for row-standardized networks), both enforced through a smooth
// reparameterization so the search itself is unconstrained. Multi-start:
// n_starts random feasible points plus a neutral all-zero start are screened,
// the best few refined, the best of those polished. Deterministic for a fixed
// seed, independent of the thread count.
EstimationResult fit_qmle(const Panel& y, const WeightMatrix& w1, const WeightMatrix& w2,
                          const InitialConditions& init, const FitOptions& opts = {});

struct StdErrorReport {
  Eigen::VectorXd se;  // NaN entries when not available
  bool ok = false;
  double ridge = 0.0;
};

// Standard errors from a central-difference Hessian of the supplied negative
// log-likelihood at `at`: square roots of the diagonal of the inverse. An
// ill-conditioned or indefinite Hessian gets an escalating ridge; if no
// usable matrix is reached the report keeps ok = false and NaN entries.
StdErrorReport se_from_hessian(const Objective& negloglik, const Eigen::VectorXd& at);

// The same evaluated for the volatility model at a fitted parameter point.
StdErrorReport hessian_std_errors(const ModelParams& p_hat, const Panel& y,
                                  const WeightMatrix& w1, const WeightMatrix& w2,
                                  const InitialConditions& init, int burn);

}  // namespace spegarch
