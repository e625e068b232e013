#pragma once

#include <Eigen/Dense>

#include "spegarch/types.hpp"

namespace spegarch {

// E|X| for a standard normal, sqrt(2/pi).
inline constexpr double kNormalAbsMean = 0.7978845608028654;

// Leverage configuration of the news impact curve. The baseline model uses one
// theta everywhere; the extended variant distinguishes the contemporaneous
// (spatial) term from the lagged (temporal) one.
struct LeverageSpec {
  double theta_spatial = 0.0;
  double theta_temporal = 0.0;
  double xi = 1.0;
};

// Precomputed operators for one parameter point on a fixed pair of networks.
// Factors I - lambda0 W2 once and derives everything the recursion, the
// innovation inversion and the likelihood Jacobian share.
class Dynamics {
 public:
  Dynamics(const ModelParams& p, const WeightMatrix& w1, const WeightMatrix& w2);
  Dynamics(const ModelParams& p, const LeverageSpec& lev, const WeightMatrix& w1,
           const WeightMatrix& w2);

  int n() const { return n_; }
  const ModelParams& params() const { return p_; }
  const LeverageSpec& leverage() const { return lev_; }
  const Eigen::MatrixXd& w1() const { return w1_; }
  const Eigen::MatrixXd& w2() const { return w2_; }

  // rho0 (I - lambda0 W2)^{-1} W1, the response of ln h_t to g(eps_t).
  const Eigen::MatrixXd& news_response() const { return b_; }

  // Solves (I - lambda0 W2) x = rhs.
  template <typename Derived>
  auto solve(const Eigen::MatrixBase<Derived>& rhs) const {
    return lu_.solve(rhs).eval();
  }

  // Solves (I - lambda0 W2)' x = rhs.
  template <typename Derived>
  auto solve_transposed(const Eigen::MatrixBase<Derived>& rhs) const {
    return lu_.transpose().solve(rhs).eval();
  }

  Eigen::VectorXd g_spatial(const Eigen::VectorXd& eps) const {
    return g_with(lev_.theta_spatial, eps);
  }
  Eigen::VectorXd g_temporal(const Eigen::VectorXd& eps) const {
    return g_with(lev_.theta_temporal, eps);
  }

  // One step of the solved volatility recursion.
  Eigen::VectorXd lnh_step(const Eigen::VectorXd& lnh_prev, const Eigen::VectorXd& eps_t,
                           const Eigen::VectorXd& eps_prev) const;

  // Stationary mean of ln h_t, ((1 - lambda1) I - lambda0 W2)^{-1} alpha 1.
  // Empty when that matrix is numerically singular.
  const Eigen::VectorXd& mean_logvol() const { return mean_logvol_; }

  // Signed determinant of I + (1/2) diag(eps) news_response() diag(theta_s +
  // xi sgn), the innovation-dependent factor of the observation Jacobian. sgn
  // entries must be +-1.
  double news_jacobian_det(const Eigen::VectorXd& eps, const Eigen::VectorXd& sgn) const;

  // ln |det| of the same matrix; -inf when the determinant vanishes.
  double log_abs_det_news(const Eigen::VectorXd& eps, const Eigen::VectorXd& sgn) const;

 private:
  Eigen::VectorXd g_with(double theta, const Eigen::VectorXd& eps) const;

  ModelParams p_;
  LeverageSpec lev_;
  int n_;
  Eigen::MatrixXd w1_;
  Eigen::MatrixXd w2_;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;  // of I - lambda0 W2
  Eigen::MatrixXd b_;
  Eigen::VectorXd mean_logvol_;
};

}  // namespace spegarch
