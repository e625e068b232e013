#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "spegarch/types.hpp"

namespace spegarch {

// News impact curve g(e) = theta e + xi (|e| - abs_mean), elementwise.
Eigen::VectorXd g_transform(const Eigen::VectorXd& eps, double theta, double xi,
                            double abs_mean);

struct StationarityReport {
  double rho_spec_A = 0.0;  // spectral radius of lambda1 (I - lambda0 W2)^{-1}
  double rho_spec_B = 0.0;  // spectral radius of lambda0 W2
  bool sufficient_ok = false;  // |lambda1| + |lambda0| ||W2||_inf < 1
  bool strict_ok = false;      // both spectral radii below 1
};

// Checks the log-volatility recursion for a stationary solution. The
// sufficient condition implies the strict one; with a row-standardized W2 it
// reduces to |lambda0| + |lambda1| < 1.
StationarityReport check_stationarity(const ModelParams& p, const WeightMatrix& w2);

struct SimulationResult {
  Panel y;    // returns
  Panel eps;  // innovations that generated them
  Panel h;    // conditional variances
};

// Simulates the process for burn_in + t_len steps from the given initial state
// and returns the last t_len. Innovations are standard normal draws from the
// seed. Requires strictly stationary parameters.
SimulationResult simulate(const ModelParams& p, const WeightMatrix& w1, const WeightMatrix& w2,
                          int t_len, int burn_in, const InitialConditions& init,
                          std::uint64_t seed);

// Deterministic core of simulate: runs the recursion on caller-supplied
// innovations (one column per step) and returns every step.
SimulationResult simulate_from_innovations(const ModelParams& p, const WeightMatrix& w1,
                                           const WeightMatrix& w2,
                                           const Eigen::MatrixXd& innovations,
                                           const InitialConditions& init);

}  // namespace spegarch
