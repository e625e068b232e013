#include "spegarch/meanmodel.hpp"

#include <cmath>
#include <limits>

#include "spegarch/errors.hpp"

namespace spegarch {

namespace {

constexpr double kRhoBound = 0.995;
constexpr double kGridStep = 0.005;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Everything the profile needs, reduced so each rho costs O(n) work: the
// inner regression has fixed design [y_lag, W2 y_lag] while only the target
// (I - rho W1) y_t moves with rho, and the log-determinant comes from the
// eigenvalues of W1.
struct ProfileData {
  int n = 0;
  int t_eff = 0;  // time points entering the fit, T - 1
  Eigen::Matrix2d gram;
  Eigen::Vector2d xa;  // X' vec(y_t)
  Eigen::Vector2d xb;  // X' vec(W1 y_t)
  double aa = 0.0, ab = 0.0, bb = 0.0;
  Eigen::VectorXd eig_re, eig_im;  // spectrum of W1

  Eigen::Vector2d coeffs(double rho) const {
    return gram.ldlt().solve(xa - rho * xb);
  }

  double ssr(double rho, const Eigen::Vector2d& beta) const {
    const double zz = aa - 2.0 * rho * ab + rho * rho * bb;
    return zz - beta.dot(xa - rho * xb);
  }

  double log_abs_det(double rho) const {
    double sum = 0.0;
    for (int i = 0; i < eig_re.size(); ++i) {
      const double re = 1.0 - rho * eig_re(i);
      const double im = rho * eig_im(i);
      const double m2 = re * re + im * im;
      if (m2 < 1e-280) return kNegInf;
      sum += 0.5 * std::log(m2);
    }
    return sum;
  }

  double loglik(double rho) const {
    const double ld = log_abs_det(rho);
    if (ld == kNegInf) return kNegInf;
    const double m = static_cast<double>(n) * t_eff;
    const double s = ssr(rho, coeffs(rho));
    if (!(s > 0.0)) return kNegInf;
    return -0.5 * m * std::log(s / m) + t_eff * ld;
  }
};

ProfileData prepare(const Panel& y, const WeightMatrix& w1, const WeightMatrix& w2) {
  const int n = y.n();
  const int t_len = y.t_len();
  if (w1.n() != n || w2.n() != n)
    throw ValidationError("panel width must match the networks");
  if (t_len < 10) throw ValidationError("mean filter needs at least 10 time points");

  ProfileData d;
  d.n = n;
  d.t_eff = t_len - 1;
  const auto& v = y.values();
  const Eigen::MatrixXd y_now = v.rightCols(d.t_eff);
  const Eigen::MatrixXd y_lag = v.leftCols(d.t_eff);
  const Eigen::MatrixXd x1 = y_lag;
  const Eigen::MatrixXd x2 = w2.matrix() * y_lag;
  const Eigen::MatrixXd w1y = w1.matrix() * y_now;

  d.gram(0, 0) = x1.cwiseProduct(x1).sum();
  d.gram(0, 1) = d.gram(1, 0) = x1.cwiseProduct(x2).sum();
  d.gram(1, 1) = x2.cwiseProduct(x2).sum();
  const double det = d.gram(0, 0) * d.gram(1, 1) - d.gram(0, 1) * d.gram(0, 1);
  if (!(det > 1e-12 * std::max(1.0, d.gram(0, 0) * d.gram(1, 1))))
    throw ValidationError("singular regression design in the mean filter");

  d.xa << x1.cwiseProduct(y_now).sum(), x2.cwiseProduct(y_now).sum();
  d.xb << x1.cwiseProduct(w1y).sum(), x2.cwiseProduct(w1y).sum();
  d.aa = y_now.cwiseProduct(y_now).sum();
  d.ab = y_now.cwiseProduct(w1y).sum();
  d.bb = w1y.cwiseProduct(w1y).sum();

  const Eigen::EigenSolver<Eigen::MatrixXd> es(w1.matrix(), false);
  if (es.info() != Eigen::Success)
    throw NumericalError("eigenvalue computation failed for the interaction matrix");
  d.eig_re = es.eigenvalues().real();
  d.eig_im = es.eigenvalues().imag();
  return d;
}

}  // namespace

double sdpd_profile_loglik(const Panel& y, const WeightMatrix& w1,
                           const WeightMatrix& w2, double rho) {
  if (!(std::abs(rho) < kRhoBound))
    throw ValidationError("rho outside the profiled interval");
  return prepare(y, w1, w2).loglik(rho);
}

SdpdFit fit_sdpd(const Panel& y, const WeightMatrix& w1, const WeightMatrix& w2) {
  const ProfileData d = prepare(y, w1, w2);

  double best_rho = 0.0;
  double best_ll = kNegInf;
  for (double rho = -kRhoBound + kGridStep; rho < kRhoBound - kGridStep / 2;
       rho += kGridStep) {
    const double ll = d.loglik(rho);
    if (ll > best_ll) {
      best_ll = ll;
      best_rho = rho;
    }
  }
  if (best_ll == kNegInf)
    throw NumericalError("profile likelihood undefined over the whole grid");

  // golden-section sharpening inside the bracketing grid cells
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double lo = std::max(best_rho - kGridStep, -kRhoBound + 1e-9);
  double hi = std::min(best_rho + kGridStep, kRhoBound - 1e-9);
  double c = hi - gr * (hi - lo);
  double e = lo + gr * (hi - lo);
  double fc = d.loglik(c);
  double fe = d.loglik(e);
  while (hi - lo > 1e-10) {
    if (fc > fe) {
      hi = e;
      e = c;
      fe = fc;
      c = hi - gr * (hi - lo);
      fc = d.loglik(c);
    } else {
      lo = c;
      c = e;
      fc = fe;
      e = lo + gr * (hi - lo);
      fe = d.loglik(e);
    }
  }
  const double refined = 0.5 * (lo + hi);
  const double refined_ll = d.loglik(refined);
  if (refined_ll > best_ll) {
    best_rho = refined;
    best_ll = refined_ll;
  }

  const Eigen::Vector2d beta = d.coeffs(best_rho);
  const auto& v = y.values();
  const int t_eff = d.t_eff;
  const Eigen::MatrixXd y_now = v.rightCols(t_eff);
  const Eigen::MatrixXd y_lag = v.leftCols(t_eff);
  Eigen::MatrixXd u = y_now - best_rho * (w1.matrix() * y_now);
  u.noalias() -= beta(0) * y_lag;
  u.noalias() -= beta(1) * (w2.matrix() * y_lag);

  return SdpdFit{best_rho, beta(0), beta(1), Panel(std::move(u), PanelKind::Residuals),
                 best_ll};
}

}  // namespace spegarch
