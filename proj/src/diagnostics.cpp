#include "spegarch/diagnostics.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>

#include "spegarch/errors.hpp"

namespace spegarch {

namespace {

double two_sided_normal_p(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

}  // namespace

TestResult ljung_box(const Eigen::VectorXd& series, int max_lag) {
  const int t_len = static_cast<int>(series.size());
  if (max_lag < 1) throw ValidationError("max_lag must be at least 1");
  if (t_len <= max_lag)
    throw ValidationError("series must be longer than the number of lags");

  const Eigen::ArrayXd z = series.array() - series.mean();
  const double denom = z.square().sum();
  if (!(denom > 0.0)) throw ValidationError("constant series has no autocorrelation");

  double q = 0.0;
  for (int k = 1; k <= max_lag; ++k) {
    const double rk =
        (z.head(t_len - k) * z.tail(t_len - k)).sum() / denom;
    q += rk * rk / (t_len - k);
  }
  q *= t_len * (t_len + 2.0);

  const boost::math::chi_squared dist(max_lag);
  return TestResult{q, boost::math::cdf(boost::math::complement(dist, q))};
}

TestResult morans_i(const Eigen::VectorXd& x, const WeightMatrix& w) {
  const int n = static_cast<int>(x.size());
  if (w.n() != n) throw ValidationError("vector length must match the weights");
  if (n < 4)
    throw ValidationError("randomization variance needs at least 4 observations");

  const Eigen::MatrixXd& m = w.matrix();
  const double s0 = m.sum();
  if (!(s0 > 0.0)) throw ValidationError("weights are all zero");

  const Eigen::VectorXd z = x.array() - x.mean();
  const double zz = z.squaredNorm();
  if (!(zz > 0.0)) throw ValidationError("constant input has no spatial pattern");

  const double stat = (n / s0) * z.dot(m * z) / zz;

  const double e_i = -1.0 / (n - 1.0);
  const double s1 = 0.5 * (m + m.transpose()).array().square().sum();
  const double s2 =
      (m.rowwise().sum() + m.colwise().sum().transpose()).array().square().sum();
  const double b2 = n * z.array().pow(4).sum() / (zz * zz);
  const double nn = static_cast<double>(n);
  const double var =
      (nn * ((nn * nn - 3.0 * nn + 3.0) * s1 - nn * s2 + 3.0 * s0 * s0) -
       b2 * ((nn * nn - nn) * s1 - 2.0 * nn * s2 + 6.0 * s0 * s0)) /
          ((nn - 1.0) * (nn - 2.0) * (nn - 3.0) * s0 * s0) -
      e_i * e_i;
  if (!(var > 0.0)) throw NumericalError("degenerate variance in the spatial test");

  return TestResult{stat, two_sided_normal_p((stat - e_i) / std::sqrt(var))};
}

PanelDiagnostics panel_diagnostics(const Panel& residuals, const WeightMatrix& w,
                                   int max_lag, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must be in (0, 1)");
  const int n = residuals.n();
  const int t_len = residuals.t_len();

  PanelDiagnostics rep;
  rep.alpha = alpha;
  rep.max_lag = max_lag;
  rep.lb_raw.resize(n);
  rep.lb_squared.resize(n);
  rep.moran_raw.resize(t_len);
  rep.moran_squared.resize(t_len);

  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd row = residuals.values().row(i).transpose();
    rep.lb_raw(i) = ljung_box(row, max_lag).p_value;
    rep.lb_squared(i) = ljung_box(row.array().square().matrix(), max_lag).p_value;
  }
  for (int t = 0; t < t_len; ++t) {
    const Eigen::VectorXd col = residuals.col(t);
    rep.moran_raw(t) = morans_i(col, w).p_value;
    rep.moran_squared(t) = morans_i(col.array().square().matrix(), w).p_value;
  }

  const auto frac = [alpha](const Eigen::VectorXd& p) {
    return (p.array() < alpha).count() / static_cast<double>(p.size());
  };
  rep.frac_lb_raw = frac(rep.lb_raw);
  rep.frac_lb_squared = frac(rep.lb_squared);
  rep.frac_moran_raw = frac(rep.moran_raw);
  rep.frac_moran_squared = frac(rep.moran_squared);
  return rep;
}

}  // namespace spegarch
