#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace spegarch {

// Parameters of the spatiotemporal exponential GARCH process
//
//   Y_t = diag(h_t)^{1/2} eps_t
//   ln h_t = alpha 1 + rho0 W1 g(eps_t) + rho1 g(eps_{t-1})
//            + lambda0 W2 ln h_t + lambda1 ln h_{t-1}
//
// with the news impact curve g(e) = theta e + xi (|e| - E|e|).
struct ModelParams {
  double alpha = 0.0;    // volatility level
  double rho0 = 0.0;     // contemporaneous spatial news impact
  double rho1 = 0.0;     // own lagged news impact
  double lambda0 = 0.0;  // contemporaneous spatial volatility spillover
  double lambda1 = 0.0;  // own volatility persistence
  double theta = 0.0;    // leverage (sign asymmetry)
  double xi = 1.0;       // magnitude loading; fixed to 1 for estimation
};

// Returns the violated constraints (empty means valid): all fields finite,
// xi > 0 and |theta| < xi. The latter two identify the innovation scale; they
// are required for estimation but deliberately not enforced by simulation,
// where xi = 0 variants are legitimate.
std::vector<std::string> validate_params(const ModelParams& p);

enum class PanelKind { Returns, Innovations, Volatility, LogVolatility, Residuals };

std::string to_string(PanelKind kind);

// Rectangular node-by-time block of observations. Values are stored as an
// n x t_len matrix: row = node, column = time point. All entries must be
// finite; Volatility panels must be strictly positive.
class Panel {
 public:
  Panel(Eigen::MatrixXd values, PanelKind kind);

  int n() const { return static_cast<int>(values_.rows()); }
  int t_len() const { return static_cast<int>(values_.cols()); }
  PanelKind kind() const { return kind_; }

  double operator()(int node, int t) const { return values_(node, t); }
  const Eigen::MatrixXd& values() const { return values_; }
  Eigen::VectorXd col(int t) const { return values_.col(t); }

 private:
  Eigen::MatrixXd values_;
  PanelKind kind_;
};

// Spatial weight matrix: square, nonnegative, zero diagonal. The flag records
// whether rows have been standardized to sum to one; it is checked against the
// entries (within 1e-12) on construction. Rows of isolated nodes may be all
// zero even when standardized.
class WeightMatrix {
 public:
  WeightMatrix(Eigen::MatrixXd w, bool row_standardized);

  int n() const { return static_cast<int>(w_.rows()); }
  const Eigen::MatrixXd& matrix() const { return w_; }
  bool row_standardized() const { return row_standardized_; }

  // Largest absolute row sum, the operator infinity norm.
  double row_sum_norm() const { return w_.cwiseAbs().rowwise().sum().maxCoeff(); }

 private:
  Eigen::MatrixXd w_;
  bool row_standardized_;
};

// Divides every row with positive sum by that sum; all-zero rows stay zero.
WeightMatrix row_standardize(const WeightMatrix& w);

// Starting state of the recursion: Y_0 and eps_0 per node. eps_0 must have no
// zero entries since ln eps_0^2 enters the inversion.
struct InitialConditions {
  Eigen::VectorXd y0;
  Eigen::VectorXd eps0;
};

// The conventional near-zero start: every entry of Y_0 and eps_0 set to 1e-4,
// which makes the implied initial log volatility exactly zero.
InitialConditions default_initial(int n);

void validate_initial(const InitialConditions& init, int n);

}  // namespace spegarch
