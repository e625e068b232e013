#include "spegarch/dynamics.hpp"

#include <cmath>
#include <limits>

#include "spegarch/errors.hpp"

namespace spegarch {

Dynamics::Dynamics(const ModelParams& p, const WeightMatrix& w1, const WeightMatrix& w2)
    : Dynamics(p, LeverageSpec{p.theta, p.theta, p.xi}, w1, w2) {}

Dynamics::Dynamics(const ModelParams& p, const LeverageSpec& lev, const WeightMatrix& w1,
                   const WeightMatrix& w2)
    : p_(p), lev_(lev), n_(w1.n()), w1_(w1.matrix()), w2_(w2.matrix()) {
  if (w1.n() != w2.n())
    throw ValidationError("weight matrices must have matching dimensions");
  for (double v : {p_.alpha, p_.rho0, p_.rho1, p_.lambda0, p_.lambda1, lev_.theta_spatial,
                   lev_.theta_temporal, lev_.xi}) {
    if (!std::isfinite(v)) throw ValidationError("model parameters must be finite");
  }
  const Eigen::MatrixXd a0 =
      Eigen::MatrixXd::Identity(n_, n_) - p_.lambda0 * w2_;
  lu_.compute(a0);
  if (lu_.rcond() < 1e-14)
    throw NumericalError("I - lambda0 W2 is numerically singular");
  b_ = p_.rho0 * lu_.solve(w1_);

  const Eigen::MatrixXd long_run =
      (1.0 - p_.lambda1) * Eigen::MatrixXd::Identity(n_, n_) - p_.lambda0 * w2_;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_long(long_run);
  if (lu_long.rcond() > 1e-12) {
    Eigen::VectorXd m = lu_long.solve(Eigen::VectorXd::Constant(n_, p_.alpha));
    if (m.allFinite()) mean_logvol_ = std::move(m);
  }
}

Eigen::VectorXd Dynamics::g_with(double theta, const Eigen::VectorXd& eps) const {
  return theta * eps + lev_.xi * (eps.cwiseAbs().array() - kNormalAbsMean).matrix();
}

Eigen::VectorXd Dynamics::lnh_step(const Eigen::VectorXd& lnh_prev, const Eigen::VectorXd& eps_t,
                                   const Eigen::VectorXd& eps_prev) const {
  Eigen::VectorXd rhs = Eigen::VectorXd::Constant(n_, p_.alpha);
  rhs.noalias() += p_.rho0 * (w1_ * g_spatial(eps_t));
  rhs += p_.rho1 * g_temporal(eps_prev);
  rhs += p_.lambda1 * lnh_prev;
  return lu_.solve(rhs);
}

double Dynamics::news_jacobian_det(const Eigen::VectorXd& eps,
                                   const Eigen::VectorXd& sgn) const {
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(n_, n_);
  const Eigen::VectorXd col_scale =
      (lev_.theta_spatial + lev_.xi * sgn.array()).matrix();
  m.noalias() += 0.5 * eps.asDiagonal() * b_ * col_scale.asDiagonal();
  return m.partialPivLu().determinant();
}

double Dynamics::log_abs_det_news(const Eigen::VectorXd& eps, const Eigen::VectorXd& sgn) const {
  const double det = news_jacobian_det(eps, sgn);
  if (det == 0.0 || !std::isfinite(det)) return -std::numeric_limits<double>::infinity();
  return std::log(std::abs(det));
}

}  // namespace spegarch
