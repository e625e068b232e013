#include "spegarch/moments.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <utility>
#include <vector>

#include "spegarch/dynamics.hpp"
#include "spegarch/errors.hpp"
#include "spegarch/process.hpp"

namespace spegarch {

double var_g(double theta, double xi) {
  return theta * theta + xi * xi * (1.0 - 2.0 / M_PI);
}

double cov_logsq_g(double xi) { return 2.0 * xi * std::log(2.0) * kNormalAbsMean; }

namespace {

void require_node(int i, int n) {
  if (i < 0 || i >= n)
    throw ValidationError("node index " + std::to_string(i) + " outside [0, " +
                          std::to_string(n) + ")");
}

void require_strictly_stationary(const ModelParams& p, const WeightMatrix& w2) {
  if (!check_stationarity(p, w2).strict_ok)
    throw NumericalError("stationary moments require strictly stationary parameters");
}

// Long-run mean of ln h, ((1 - lambda1) I - lambda0 W2)^{-1} alpha 1.
Eigen::VectorXd long_run_logvol(const ModelParams& p, const WeightMatrix& w2) {
  const int n = w2.n();
  const Eigen::MatrixXd m =
      (1.0 - p.lambda1) * Eigen::MatrixXd::Identity(n, n) - p.lambda0 * w2.matrix();
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(m);
  if (lu.rcond() < 1e-14)
    throw NumericalError("(1 - lambda1) I - lambda0 W2 is numerically singular");
  return lu.solve(Eigen::VectorXd::Constant(n, p.alpha));
}

// Gauss-Legendre rule on [-1, 1], cached per order.
const std::pair<std::vector<double>, std::vector<double>>& legendre_rule(int order) {
  static std::mutex mutex;
  static std::map<int, std::pair<std::vector<double>, std::vector<double>>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(order);
  if (it != cache.end()) return it->second;

  std::vector<double> x(order), w(order);
  const int half = (order + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double z = std::cos(M_PI * (i + 0.75) / (order + 0.5));
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p1 = 1.0, p2 = 0.0;
      for (int j = 1; j <= order; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
      }
      pp = order * (z * p1 - p2) / (z * z - 1.0);
      const double dz = p1 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    x[i] = -z;
    x[order - 1 - i] = z;
    w[i] = w[order - 1 - i] = 2.0 / ((1.0 - z * z) * pp * pp);
  }
  return cache.emplace(order, std::make_pair(std::move(x), std::move(w))).first->second;
}

// integral of x^k exp(b x) phi(x) over [0, inf), by panels of width 2
double half_line_moment(int k, double b, int nodes_per_panel) {
  const double upper = std::max(b, 0.0) + 12.0 + k;
  const auto& [gx, gw] = legendre_rule(nodes_per_panel);
  const double inv_sqrt_2pi = 0.3989422804014327;
  double total = 0.0;
  for (double lo = 0.0; lo < upper; lo += 2.0) {
    const double hi = std::min(lo + 2.0, upper);
    const double mid = 0.5 * (lo + hi), rad = 0.5 * (hi - lo);
    double acc = 0.0;
    for (std::size_t q = 0; q < gx.size(); ++q) {
      const double x = mid + rad * gx[q];
      double f = std::exp(b * x - 0.5 * x * x) * inv_sqrt_2pi;
      for (int m = 0; m < k; ++m) f *= x;
      acc += gw[q] * f;
    }
    total += rad * acc;
  }
  return total;
}

}  // namespace

double gaussian_g_expectation(int k, double c, double theta, double xi, int quad_nodes) {
  if (k < 0 || k > 2) throw ValidationError("moment order k must be 0, 1 or 2");
  if (quad_nodes < 20) throw ValidationError("quad_nodes must be at least 20");
  if (c == 0.0) return k == 1 ? 0.0 : 1.0;
  const double b_pos = c * (theta + xi);   // slope of c g(x) for x >= 0
  const double b_neg = c * (xi - theta);   // slope after reflecting x < 0
  const double shift = std::exp(-c * xi * kNormalAbsMean);
  const double pos = half_line_moment(k, b_pos, quad_nodes);
  const double neg = half_line_moment(k, b_neg, quad_nodes);
  const double value = shift * (k == 1 ? pos - neg : pos + neg);
  if (!std::isfinite(value))
    throw NumericalError("Gaussian expectation overflowed; coefficients too large");
  return value;
}

DeltaNoise delta_moments(const ModelParams& p, const WeightMatrix& w1,
                         const WeightMatrix& w2) {
  const Dynamics dyn(p, w1, w2);
  const int n = dyn.n();
  const Eigen::MatrixXd s = dyn.solve(Eigen::MatrixXd::Identity(n, n));
  const Eigen::MatrixXd sw1 = dyn.solve(w1.matrix());
  const double kappa = var_g(p.theta, p.xi);
  DeltaNoise out;
  out.mean = dyn.solve(Eigen::VectorXd::Constant(n, p.alpha));
  out.cov = kappa * (p.rho0 * p.rho0 * sw1 * sw1.transpose() +
                     p.rho1 * p.rho1 * s * s.transpose());
  return out;
}

NuMoments nu_moments(const ModelParams& p, const WeightMatrix& w1, const WeightMatrix& w2) {
  require_strictly_stationary(p, w2);
  const Dynamics dyn(p, w1, w2);
  const int n = dyn.n();
  const Eigen::MatrixXd s = dyn.solve(Eigen::MatrixXd::Identity(n, n));
  const Eigen::MatrixXd sw1 = dyn.solve(w1.matrix());
  const double kappa = var_g(p.theta, p.xi);
  const double cg = cov_logsq_g(p.xi);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);

  NuMoments out;
  out.mean = dyn.solve(Eigen::VectorXd::Constant(n, p.alpha)) +
             kMeanLogChi1 * (ones - p.lambda1 * (s * ones));
  out.cov0 = p.rho0 * p.rho0 * kappa * sw1 * sw1.transpose() +
             kVarLogChi1 * Eigen::MatrixXd::Identity(n, n) +
             p.rho0 * cg * (sw1 + sw1.transpose()) +
             (p.rho1 * p.rho1 * kappa + p.lambda1 * p.lambda1 * kVarLogChi1 -
              2.0 * p.rho1 * p.lambda1 * cg) *
                 s * s.transpose();
  out.cov1 = (p.rho0 * p.rho1 * kappa - p.lambda1 * p.rho0 * cg) * s * sw1.transpose() +
             (p.rho1 * cg - p.lambda1 * kVarLogChi1) * s;
  return out;
}

namespace {

// Shared series walker for the stationary moment products. For a target row
// vector e' it visits the lag coefficient rows coeff * lambda1^{v-1} e' S^v C
// until log_factor(row) drops below tol, accumulating the log factors.
template <typename LogFactor>
TruncationInfo accumulate_lags(const Dynamics& dyn, const Eigen::MatrixXd& c_mat,
                               Eigen::VectorXd e, double coeff, double tol,
                               double& log_total, const LogFactor& log_factor) {
  constexpr int kMaxFactors = 500;
  TruncationInfo info;
  double lam_pow = 1.0;  // lambda1^{v-1}
  for (int v = 1; v <= kMaxFactors; ++v) {
    e = dyn.solve_transposed(e);  // now (S'^v) e
    const Eigen::VectorXd row = c_mat.transpose() * e;  // (e' S^v C)'
    const double lf = log_factor(coeff * lam_pow, row);
    if (!std::isfinite(lf))
      throw NumericalError("stationary moment product diverged at lag " + std::to_string(v));
    log_total += lf;
    info.factors = v;
    info.last_log_factor = lf;
    if (lf < tol) return info;
    lam_pow *= dyn.params().lambda1;
  }
  throw NumericalError("stationary moment product did not converge within 500 lag factors");
}

}  // namespace

ClosedMoments closed_moments_theta_only(const ModelParams& p, const WeightMatrix& w1,
                                        const WeightMatrix& w2, int i, int j,
                                        double trunc_tol) {
  if (p.xi != 0.0)
    throw ValidationError("closed-form moments require xi = 0");
  if (trunc_tol <= 0.0) throw ValidationError("trunc_tol must be positive");
  require_strictly_stationary(p, w2);
  const Dynamics dyn(p, w1, w2);
  const int n = dyn.n();
  require_node(i, n);
  require_node(j, n);

  const Eigen::VectorXd cinf = long_run_logvol(p, w2);
  const Eigen::MatrixXd sw1 = dyn.solve(w1.matrix());
  const Eigen::MatrixXd c_mat =
      p.rho0 * p.lambda1 * sw1 + p.rho1 * Eigen::MatrixXd::Identity(n, n);

  // every factor is a Gaussian expectation of exp(a' eps) possibly times
  // polynomial terms; with g linear the logs are quadratic forms in the rows
  const auto gauss_log = [](double coeff, const Eigen::VectorXd& row) {
    return 0.5 * coeff * coeff * row.squaredNorm();
  };

  ClosedMoments out;

  // first moment: exponent e_i' F / 2
  {
    const Eigen::VectorXd ri = sw1.row(i).transpose();
    const double a_scale = 0.5 * p.rho0 * p.theta;
    double log_total = 0.5 * cinf(i) + gauss_log(a_scale, ri);
    const TruncationInfo info = accumulate_lags(dyn, c_mat, Eigen::VectorXd::Unit(n, i),
                                                0.5 * p.theta, trunc_tol, log_total, gauss_log);
    out.mean_i = a_scale * ri(i) * std::exp(log_total);
    out.trunc = info;
  }

  // second moment: exponent e_i' F
  {
    const Eigen::VectorXd ri = sw1.row(i).transpose();
    const double a_scale = p.rho0 * p.theta;
    double log_total = cinf(i) + gauss_log(a_scale, ri);
    const TruncationInfo info = accumulate_lags(dyn, c_mat, Eigen::VectorXd::Unit(n, i),
                                                p.theta, trunc_tol, log_total, gauss_log);
    out.second_i = (1.0 + a_scale * ri(i) * a_scale * ri(i)) * std::exp(log_total);
    if (info.factors > out.trunc.factors) out.trunc = info;
  }

  // cross moment: exponent (e_i + e_j)' F / 2
  if (i == j) {
    out.cross_ij = out.second_i;
  } else {
    const Eigen::VectorXd r = (sw1.row(i) + sw1.row(j)).transpose();
    const double a_scale = 0.5 * p.rho0 * p.theta;
    double log_total = 0.5 * (cinf(i) + cinf(j)) + gauss_log(a_scale, r);
    Eigen::VectorXd e = Eigen::VectorXd::Unit(n, i);
    e(j) = 1.0;
    const TruncationInfo info =
        accumulate_lags(dyn, c_mat, e, 0.5 * p.theta, trunc_tol, log_total, gauss_log);
    out.cross_ij = a_scale * r(i) * a_scale * r(j) * std::exp(log_total);
    if (info.factors > out.trunc.factors) out.trunc = info;
  }

  if (!std::isfinite(out.mean_i) || !std::isfinite(out.second_i) ||
      !std::isfinite(out.cross_ij))
    throw NumericalError("closed-form moments overflowed");
  return out;
}

QuadMoment general_moments_quadrature(const ModelParams& p, const WeightMatrix& w1,
                                      const WeightMatrix& w2, int i, MomentOrder order,
                                      double trunc_tol, int quad_nodes) {
  if (trunc_tol <= 0.0) throw ValidationError("trunc_tol must be positive");
  if (quad_nodes < 20) throw ValidationError("quad_nodes must be at least 20");
  require_strictly_stationary(p, w2);
  const Dynamics dyn(p, w1, w2);
  const int n = dyn.n();
  require_node(i, n);

  const Eigen::VectorXd cinf = long_run_logvol(p, w2);
  const Eigen::MatrixXd sw1 = dyn.solve(w1.matrix());
  const Eigen::MatrixXd c_mat =
      p.rho0 * p.lambda1 * sw1 + p.rho1 * Eigen::MatrixXd::Identity(n, n);

  const double scale = order == MomentOrder::First ? 0.5 : 1.0;
  const int own_order = order == MomentOrder::First ? 1 : 2;

  const auto log_m0_product = [&](double coeff, const Eigen::VectorXd& row) {
    double acc = 0.0;
    for (int k = 0; k < row.size(); ++k)
      acc += std::log(gaussian_g_expectation(0, coeff * row(k), p.theta, p.xi, quad_nodes));
    return acc;
  };

  // contemporaneous factor: own node carries eps_i^k inside the expectation
  const Eigen::VectorXd ri = sw1.row(i).transpose();
  double log_total = scale * cinf(i);
  double own_factor = 1.0;
  for (int k = 0; k < n; ++k) {
    const double c = scale * p.rho0 * ri(k);
    if (k == i) {
      own_factor = gaussian_g_expectation(own_order, c, p.theta, p.xi, quad_nodes);
    } else {
      log_total += std::log(gaussian_g_expectation(0, c, p.theta, p.xi, quad_nodes));
    }
  }

  QuadMoment out;
  out.trunc = accumulate_lags(dyn, c_mat, Eigen::VectorXd::Unit(n, i), scale, trunc_tol,
                              log_total, log_m0_product);
  out.value = own_factor * std::exp(log_total);
  if (!std::isfinite(out.value)) throw NumericalError("quadrature moment overflowed");
  return out;
}

}  // namespace spegarch
