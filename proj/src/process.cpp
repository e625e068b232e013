#include "spegarch/process.hpp"

#include <cmath>
#include <complex>

#include "spegarch/dynamics.hpp"
#include "spegarch/errors.hpp"
#include "spegarch/rng.hpp"

namespace spegarch {

Eigen::VectorXd g_transform(const Eigen::VectorXd& eps, double theta, double xi,
                            double abs_mean) {
  return theta * eps + xi * (eps.cwiseAbs().array() - abs_mean).matrix();
}

StationarityReport check_stationarity(const ModelParams& p, const WeightMatrix& w2) {
  for (double v : {p.lambda0, p.lambda1}) {
    if (!std::isfinite(v)) throw ValidationError("lambda parameters must be finite");
  }
  StationarityReport report;
  report.sufficient_ok =
      std::abs(p.lambda1) + std::abs(p.lambda0) * w2.row_sum_norm() < 1.0;

  Eigen::EigenSolver<Eigen::MatrixXd> es(w2.matrix(), false);
  if (es.info() != Eigen::Success)
    throw NumericalError("eigenvalue computation for W2 failed");
  const auto mu = es.eigenvalues();

  double rho_b = 0.0;
  double inv_gap = 0.0;  // max |1 / (1 - lambda0 mu)|
  for (Eigen::Index k = 0; k < mu.size(); ++k) {
    const std::complex<double> scaled = p.lambda0 * mu(k);
    rho_b = std::max(rho_b, std::abs(scaled));
    const double gap = std::abs(1.0 - scaled);
    if (gap < 1e-12)
      throw NumericalError("I - lambda0 W2 is singular; no stationary solution");
    inv_gap = std::max(inv_gap, 1.0 / gap);
  }
  report.rho_spec_B = rho_b;
  report.rho_spec_A = std::abs(p.lambda1) * inv_gap;
  report.strict_ok = report.rho_spec_A < 1.0 && report.rho_spec_B < 1.0;
  return report;
}

namespace {

SimulationResult run_recursion(const Dynamics& dyn, const Eigen::MatrixXd& innovations,
                               const InitialConditions& init, int discard) {
  const int n = dyn.n();
  const int steps = static_cast<int>(innovations.cols());
  const int keep = steps - discard;

  Eigen::MatrixXd lnh(n, keep), eps_out(n, keep);
  Eigen::VectorXd lnh_prev =
      (init.y0.array().square() / init.eps0.array().square()).log().matrix();
  Eigen::VectorXd eps_prev = init.eps0;
  for (int t = 0; t < steps; ++t) {
    const Eigen::VectorXd eps_t = innovations.col(t);
    Eigen::VectorXd lnh_t = dyn.lnh_step(lnh_prev, eps_t, eps_prev);
    if (!lnh_t.allFinite())
      throw NumericalError("log volatility overflowed at step " + std::to_string(t + 1));
    if (t >= discard) {
      lnh.col(t - discard) = lnh_t;
      eps_out.col(t - discard) = eps_t;
    }
    lnh_prev = std::move(lnh_t);
    eps_prev = eps_t;
  }

  Eigen::MatrixXd h = lnh.array().exp().matrix();
  if (!h.allFinite() || (h.array() <= 0.0).any())
    throw NumericalError("conditional variance overflowed");
  Eigen::MatrixXd y = h.array().sqrt() * eps_out.array();
  return SimulationResult{Panel(std::move(y), PanelKind::Returns),
                          Panel(std::move(eps_out), PanelKind::Innovations),
                          Panel(std::move(h), PanelKind::Volatility)};
}

}  // namespace

SimulationResult simulate(const ModelParams& p, const WeightMatrix& w1, const WeightMatrix& w2,
                          int t_len, int burn_in, const InitialConditions& init,
                          std::uint64_t seed) {
  if (t_len < 1) throw ValidationError("t_len must be positive");
  if (burn_in < 0) throw ValidationError("burn_in must be nonnegative");
  validate_initial(init, w1.n());
  if (!check_stationarity(p, w2).strict_ok)
    throw NumericalError("parameters violate the strict stationarity condition");

  const Dynamics dyn(p, w1, w2);
  const int steps = burn_in + t_len;
  RngStream rng(seed);
  Eigen::MatrixXd innovations(dyn.n(), steps);
  for (int t = 0; t < steps; ++t)
    for (int i = 0; i < dyn.n(); ++i) innovations(i, t) = rng.normal();
  return run_recursion(dyn, innovations, init, burn_in);
}

SimulationResult simulate_from_innovations(const ModelParams& p, const WeightMatrix& w1,
                                           const WeightMatrix& w2,
                                           const Eigen::MatrixXd& innovations,
                                           const InitialConditions& init) {
  if (innovations.cols() < 1) throw ValidationError("need at least one innovation column");
  if (innovations.rows() != w1.n())
    throw ValidationError("innovation rows must match the number of nodes");
  if (!innovations.allFinite()) throw ValidationError("innovations must be finite");
  validate_initial(init, w1.n());
  if (!check_stationarity(p, w2).strict_ok)
    throw NumericalError("parameters violate the strict stationarity condition");
  const Dynamics dyn(p, w1, w2);
  return run_recursion(dyn, innovations, init, 0);
}

}  // namespace spegarch
