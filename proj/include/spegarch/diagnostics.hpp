#pragma once

#include <Eigen/Dense>

#include "spegarch/types.hpp"

namespace spegarch {

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

// Portmanteau test for serial correlation up to max_lag: the usual
// small-sample-weighted sum of squared autocorrelations referred to a
// chi-square with max_lag degrees of freedom.
TestResult ljung_box(const Eigen::VectorXd& series, int max_lag = 10);

// Cross-sectional spatial autocorrelation test. The statistic is the
// weighted cross-product ratio scaled by n / (sum of weights); inference
// uses the exact randomization moments and a two-sided normal approximation.
// Needs at least 4 observations for the variance formula.
TestResult morans_i(const Eigen::VectorXd& x, const WeightMatrix& w);

// Residual adequacy battery: serial tests per node on the raw and squared
// series, spatial tests per time point on the raw and squared cross
// sections, and the fraction of each family significant at `alpha`.
struct PanelDiagnostics {
  Eigen::VectorXd lb_raw;        // p-values, one per node
  Eigen::VectorXd lb_squared;    // p-values, one per node
  Eigen::VectorXd moran_raw;     // p-values, one per time point
  Eigen::VectorXd moran_squared; // p-values, one per time point
  double frac_lb_raw = 0.0;
  double frac_lb_squared = 0.0;
  double frac_moran_raw = 0.0;
  double frac_moran_squared = 0.0;
  double alpha = 0.05;
  int max_lag = 10;
};

PanelDiagnostics panel_diagnostics(const Panel& residuals, const WeightMatrix& w,
                                   int max_lag = 10, double alpha = 0.05);

}  // namespace spegarch
