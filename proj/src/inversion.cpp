#include "spegarch/inversion.hpp"

#include <cmath>
#include <string>

#include "spegarch/errors.hpp"

namespace spegarch {

namespace {

constexpr double kLogSqCap = 500.0;  // keeps exp(x/2) comfortably inside range

Eigen::VectorXd clamped(Eigen::VectorXd x) {
  return x.cwiseMax(-kLogSqCap).cwiseMin(kLogSqCap);
}

// residual of the balance equation at x
Eigen::VectorXd residual(const Dynamics& dyn, const Eigen::VectorXd& r,
                         const Eigen::VectorXd& half_exp_scale, const Eigen::VectorXd& x,
                         double xi_mean) {
  const Eigen::VectorXd ex = (0.5 * x.array()).exp().matrix();
  // g(eps(x)) = (theta s + xi) exp(x/2) - xi E|eps|
  const Eigen::VectorXd g =
      (2.0 * half_exp_scale.array() * ex.array() - xi_mean).matrix();
  Eigen::VectorXd res = x - dyn.params().lambda0 * (dyn.w2() * x);
  res.noalias() += dyn.params().rho0 * (dyn.w1() * g);
  return res - r;
}

}  // namespace

double invertibility_det(const ModelParams& p, const WeightMatrix& w1,
                         const WeightMatrix& w2, const Eigen::VectorXd& eps_t,
                         const Eigen::VectorXd& sign_prev) {
  if (eps_t.size() != w1.n() || sign_prev.size() != w1.n())
    throw ValidationError("vector lengths must match the number of nodes");
  const Dynamics dyn(p, w1, w2);
  return dyn.news_jacobian_det(eps_t, sign_prev);
}

StepStatus solve_innovation_step(const Dynamics& dyn, const Eigen::VectorXd& r,
                                 const Eigen::VectorXd& signs, Eigen::VectorXd& x,
                                 const NewtonOptions& opts) {
  const int n = dyn.n();
  const ModelParams& p = dyn.params();
  const double xi = dyn.leverage().xi;
  const double xi_mean = xi * kNormalAbsMean;
  // per-node scale (theta s_i + xi) / 2 of d g / d x
  const Eigen::VectorXd half_exp_scale =
      0.5 * (dyn.leverage().theta_spatial * signs.array() + xi).matrix();

  StepStatus status;
  if (p.rho0 == 0.0) {
    x = clamped(dyn.solve(r));
    status.converged = true;
    status.residual = residual(dyn, r, half_exp_scale, x, xi_mean).cwiseAbs().maxCoeff();
    return status;
  }

  x = opts.start.size() == n ? clamped(opts.start) : clamped(dyn.solve(r));
  Eigen::VectorXd res = residual(dyn, r, half_exp_scale, x, xi_mean);
  double res_norm = res.cwiseAbs().maxCoeff();

  const Eigen::MatrixXd a0 =
      Eigen::MatrixXd::Identity(n, n) - p.lambda0 * dyn.w2();
  Eigen::MatrixXd jac(n, n);
  for (int iter = 1; iter <= opts.max_iter; ++iter) {
    if (res_norm <= opts.tol) {
      status.converged = true;
      break;
    }
    const Eigen::VectorXd dg =
        (half_exp_scale.array() * (0.5 * x.array()).exp()).matrix();
    jac = a0;
    jac.noalias() += p.rho0 * dyn.w1() * dg.asDiagonal();
    Eigen::VectorXd step = jac.partialPivLu().solve(-res);
    if (!step.allFinite()) break;
    const double step_norm = step.cwiseAbs().maxCoeff();
    if (step_norm > 50.0) step *= 50.0 / step_norm;

    // backtrack until the residual shrinks
    double scale = 1.0;
    bool accepted = false;
    for (int half = 0; half < 40; ++half) {
      const Eigen::VectorXd x_try = clamped(x + scale * step);
      const Eigen::VectorXd res_try = residual(dyn, r, half_exp_scale, x_try, xi_mean);
      const double norm_try = res_try.cwiseAbs().maxCoeff();
      if (std::isfinite(norm_try) && (norm_try < res_norm || norm_try <= opts.tol)) {
        x = x_try;
        res = res_try;
        res_norm = norm_try;
        accepted = true;
        break;
      }
      scale *= 0.5;
    }
    status.iterations = iter;
    if (!accepted) break;
  }
  if (res_norm <= opts.tol) status.converged = true;
  status.residual = res_norm;
  return status;
}

namespace {

Eigen::VectorXd log_square(const Eigen::VectorXd& v, const char* what) {
  if ((v.array() == 0.0).any())
    throw ValidationError(std::string(what) + " contains zeros; log squares undefined");
  return v.array().square().log().matrix();
}

// terms of r known before time t: -alpha - rho1 g(eps_prev) - lambda1 (ln y_prev^2 - x_prev)
Eigen::VectorXd lagged_rhs(const Dynamics& dyn, const Eigen::VectorXd& eps_prev,
                           const Eigen::VectorXd& lny_prev, const Eigen::VectorXd& x_prev) {
  const ModelParams& p = dyn.params();
  return (-p.alpha - p.rho1 * dyn.g_temporal(eps_prev).array() -
          p.lambda1 * (lny_prev - x_prev).array())
      .matrix();
}

}  // namespace

Eigen::VectorXd invert_step(const Eigen::VectorXd& y_t, const Eigen::VectorXd& y_prev,
                            const Eigen::VectorXd& eps_prev, const Dynamics& dyn,
                            const NewtonOptions& opts) {
  const int n = dyn.n();
  const ModelParams& p = dyn.params();
  if (y_t.size() != n || y_prev.size() != n || eps_prev.size() != n)
    throw ValidationError("vector lengths must match the number of nodes");
  const Eigen::VectorXd lny = log_square(y_t, "y_t");
  const Eigen::VectorXd lny_prev = log_square(y_prev, "y_prev");
  const Eigen::VectorXd x_prev = log_square(eps_prev, "eps_prev");

  Eigen::VectorXd r = lny - p.lambda0 * (dyn.w2() * lny);
  r += lagged_rhs(dyn, eps_prev, lny_prev, x_prev);

  const Eigen::VectorXd signs = y_t.array().sign().matrix();
  Eigen::VectorXd x;
  const StepStatus status = solve_innovation_step(dyn, r, signs, x, opts);
  if (!status.converged)
    throw NumericalError("innovation recovery did not converge (residual " +
                         std::to_string(status.residual) + ")");
  return (signs.array() * (0.5 * x.array()).exp()).matrix();
}

Eigen::VectorXd invert_step(const Eigen::VectorXd& y_t, const Eigen::VectorXd& y_prev,
                            const Eigen::VectorXd& eps_prev, const ModelParams& p,
                            const WeightMatrix& w1, const WeightMatrix& w2,
                            const NewtonOptions& opts) {
  return invert_step(y_t, y_prev, eps_prev, Dynamics(p, w1, w2), opts);
}

InversionResult invert_panel(const Panel& y, const Dynamics& dyn,
                             const InitialConditions& init, const NewtonOptions& opts) {
  const int n = dyn.n();
  const ModelParams& p = dyn.params();
  if (y.n() != n) throw ValidationError("panel width must match the networks");
  validate_initial(init, n);
  const int t_len = y.t_len();

  InversionDiagnostics diag;
  diag.iterations.resize(t_len);
  diag.residual_norms.resize(t_len);
  diag.jacobian_dets.resize(t_len);
  Eigen::MatrixXd eps(n, t_len);

  Eigen::VectorXd lny_prev = log_square(init.y0, "y0");
  Eigen::VectorXd x_prev = log_square(init.eps0, "eps0");
  Eigen::VectorXd eps_prev = init.eps0;
  for (int t = 0; t < t_len; ++t) {
    const Eigen::VectorXd y_t = y.col(t);
    const Eigen::VectorXd lny =
        log_square(y_t, ("returns at time point " + std::to_string(t + 1)).c_str());
    Eigen::VectorXd r = lny - p.lambda0 * (dyn.w2() * lny);
    r += lagged_rhs(dyn, eps_prev, lny_prev, x_prev);

    const Eigen::VectorXd signs = y_t.array().sign().matrix();
    Eigen::VectorXd x;
    const StepStatus status = solve_innovation_step(dyn, r, signs, x, opts);
    if (!status.converged)
      throw NumericalError("innovation recovery stalled at time point " +
                           std::to_string(t + 1) + " (residual " +
                           std::to_string(status.residual) + ")");
    const Eigen::VectorXd eps_t = (signs.array() * (0.5 * x.array()).exp()).matrix();
    eps.col(t) = eps_t;
    diag.iterations(t) = status.iterations;
    diag.residual_norms(t) = status.residual;
    diag.jacobian_dets(t) = dyn.news_jacobian_det(eps_t, signs);

    lny_prev = lny;
    x_prev = x;
    eps_prev = eps_t;
  }
  return InversionResult{Panel(std::move(eps), PanelKind::Innovations), std::move(diag)};
}

InversionResult invert_panel(const Panel& y, const ModelParams& p, const WeightMatrix& w1,
                             const WeightMatrix& w2, const InitialConditions& init,
                             const NewtonOptions& opts) {
  return invert_panel(y, Dynamics(p, w1, w2), init, opts);
}

}  // namespace spegarch
