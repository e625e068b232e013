#pragma once

#include <Eigen/Dense>

#include "spegarch/types.hpp"

namespace spegarch {

// Variance of g(X) = theta X + xi (|X| - E|X|) for standard normal X:
// theta^2 + xi^2 (1 - 2/pi). The covariance matrix of g applied to an i.i.d.
// normal vector is this value times the identity.
double var_g(double theta, double xi);

// Mean of ln X^2 for standard normal X, -ln 2 - (Euler gamma).
inline constexpr double kMeanLogChi1 = -1.2703628454614782;

// Variance of ln X^2, pi^2 / 2.
inline constexpr double kVarLogChi1 = 4.934802200544679;

// Cov(ln X^2, g(X)) = 2 xi ln 2 sqrt(2/pi); theta does not enter by symmetry.
double cov_logsq_g(double xi);

// E[X^k exp(c g(X))] for standard normal X and k in {0, 1, 2}, the scalar
// building block of the stationary moment products. Evaluated by panel
// quadrature on each side of the |x| kink.
double gaussian_g_expectation(int k, double c, double theta, double xi, int quad_nodes = 64);

// Moments of the driving noise of the solved log-volatility recursion,
// Delta_t = S (alpha 1 + rho0 W1 g(eps_t) + rho1 g(eps_{t-1})) with
// S = (I - lambda0 W2)^{-1}.
struct DeltaNoise {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

DeltaNoise delta_moments(const ModelParams& p, const WeightMatrix& w1,
                         const WeightMatrix& w2);

// Moments of nu_t = ln Y_t^2 - lambda1 S ln Y_{t-1}^2, the observable noise of
// the squared-log representation. Requires strict stationarity. cov1 is
// E[(nu_t - mu)(nu_{t-1} - mu)']; covariances at lags beyond one vanish.
struct NuMoments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov0;
  Eigen::MatrixXd cov1;
};

NuMoments nu_moments(const ModelParams& p, const WeightMatrix& w1, const WeightMatrix& w2);

// Convergence record of an infinite-product evaluation: how many lag factors
// were used and the log of the last one (the stopping criterion compared it
// against the tolerance).
struct TruncationInfo {
  int factors = 0;
  double last_log_factor = 0.0;
};

// Stationary return moments in the pure-leverage case xi = 0, where every
// factor of the infinite product has a closed Gaussian form. i and j are
// 0-based node indices; cross_ij degenerates to second_i when i == j.
struct ClosedMoments {
  double mean_i = 0.0;
  double second_i = 0.0;
  double cross_ij = 0.0;
  TruncationInfo trunc;
};

ClosedMoments closed_moments_theta_only(const ModelParams& p, const WeightMatrix& w1,
                                        const WeightMatrix& w2, int i, int j,
                                        double trunc_tol = 1e-12);

enum class MomentOrder { First, Second };

struct QuadMoment {
  double value = 0.0;
  TruncationInfo trunc;
};

// Stationary E(Y_i) or E(Y_i^2) for general xi. Factors over lags and nodes
// into one-dimensional Gaussian expectations of x^k exp(c g(x)), integrated by
// fixed-order panel quadrature after splitting at the |x| kink. quad_nodes is
// the node count per unit-length panel segment.
QuadMoment general_moments_quadrature(const ModelParams& p, const WeightMatrix& w1,
                                      const WeightMatrix& w2, int i, MomentOrder order,
                                      double trunc_tol = 1e-10, int quad_nodes = 64);

}  // namespace spegarch
