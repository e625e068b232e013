#include "spegarch/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "spegarch/errors.hpp"

namespace spegarch {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double guarded(const Objective& f, const Eigen::VectorXd& x, int& n_evals) {
  ++n_evals;
  const double v = f(x);
  return std::isfinite(v) ? v : kInf;
}

}  // namespace

OptimResult nelder_mead(const Objective& f, const Eigen::VectorXd& x0,
                        const SimplexOptions& opts) {
  const int n = static_cast<int>(x0.size());
  if (n == 0) throw ValidationError("cannot optimize over an empty vector");

  OptimResult out;
  std::vector<Eigen::VectorXd> pts(n + 1, x0);
  std::vector<double> vals(n + 1);
  for (int i = 1; i <= n; ++i) pts[i](i - 1) += opts.step;
  for (int i = 0; i <= n; ++i) vals[i] = guarded(f, pts[i], out.n_evals);

  std::vector<int> order(n + 1);
  std::iota(order.begin(), order.end(), 0);
  auto sort_order = [&] {
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return vals[a] < vals[b]; });
  };

  while (out.n_evals < opts.max_evals) {
    sort_order();
    const int best = order[0], worst = order[n], second = order[n - 1];

    double spread_x = 0.0;
    for (int i = 1; i <= n; ++i)
      spread_x = std::max(spread_x,
                          (pts[order[i]] - pts[best]).cwiseAbs().maxCoeff());
    const bool f_done =
        std::isfinite(vals[worst]) && vals[worst] - vals[best] <= opts.f_tol;
    if (f_done && spread_x <= opts.x_tol) {
      out.converged = true;
      break;
    }

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) centroid += pts[order[i]];
    centroid /= n;

    const Eigen::VectorXd refl = centroid + (centroid - pts[worst]);
    const double f_refl = guarded(f, refl, out.n_evals);
    if (f_refl < vals[best]) {
      const Eigen::VectorXd expa = centroid + 2.0 * (centroid - pts[worst]);
      const double f_expa = guarded(f, expa, out.n_evals);
      if (f_expa < f_refl) {
        pts[worst] = expa;
        vals[worst] = f_expa;
      } else {
        pts[worst] = refl;
        vals[worst] = f_refl;
      }
    } else if (f_refl < vals[second]) {
      pts[worst] = refl;
      vals[worst] = f_refl;
    } else {
      const bool outside = f_refl < vals[worst];
      Eigen::VectorXd contr = centroid;
      if (outside)
        contr += 0.5 * (refl - centroid);
      else
        contr -= 0.5 * (centroid - pts[worst]);
      const double f_contr = guarded(f, contr, out.n_evals);
      if (f_contr < std::min(f_refl, vals[worst])) {
        pts[worst] = contr;
        vals[worst] = f_contr;
      } else {
        for (int i = 1; i <= n; ++i) {
          pts[order[i]] = pts[best] + 0.5 * (pts[order[i]] - pts[best]);
          vals[order[i]] = guarded(f, pts[order[i]], out.n_evals);
        }
      }
    }
    ++out.iterations;
  }

  sort_order();
  out.x = pts[order[0]];
  out.f = vals[order[0]];
  return out;
}

Eigen::VectorXd fd_gradient(const Objective& f, const Eigen::VectorXd& x,
                            double step) {
  const int n = static_cast<int>(x.size());
  Eigen::VectorXd g(n);
  Eigen::VectorXd xp = x;
  for (int i = 0; i < n; ++i) {
    const double h = step * std::max(1.0, std::abs(x(i)));
    xp(i) = x(i) + h;
    const double up = f(xp);
    xp(i) = x(i) - h;
    const double dn = f(xp);
    xp(i) = x(i);
    g(i) = (up - dn) / (2.0 * h);
  }
  return g;
}

Eigen::MatrixXd fd_hessian(const Objective& f, const Eigen::VectorXd& x,
                           double step) {
  const int n = static_cast<int>(x.size());
  Eigen::VectorXd h(n);
  for (int i = 0; i < n; ++i) h(i) = step * std::max(1.0, std::abs(x(i)));

  const double f0 = f(x);
  Eigen::MatrixXd hess(n, n);
  Eigen::VectorXd xp = x;
  for (int i = 0; i < n; ++i) {
    xp(i) = x(i) + h(i);
    const double up = f(xp);
    xp(i) = x(i) - h(i);
    const double dn = f(xp);
    xp(i) = x(i);
    hess(i, i) = (up - 2.0 * f0 + dn) / (h(i) * h(i));
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      auto at = [&](double si, double sj) {
        xp(i) = x(i) + si * h(i);
        xp(j) = x(j) + sj * h(j);
        const double v = f(xp);
        xp(i) = x(i);
        xp(j) = x(j);
        return v;
      };
      const double v = (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) /
                       (4.0 * h(i) * h(j));
      hess(i, j) = v;
      hess(j, i) = v;
    }
  }
  return hess;
}

OptimResult bfgs_numeric(const Objective& f, const Eigen::VectorXd& x0,
                         const QuasiNewtonOptions& opts) {
  const int n = static_cast<int>(x0.size());
  if (n == 0) throw ValidationError("cannot optimize over an empty vector");

  OptimResult out;
  Eigen::VectorXd x = x0;
  double fx = guarded(f, x, out.n_evals);
  if (!std::isfinite(fx))
    throw NumericalError("objective is not finite at the starting point");

  auto grad = [&](const Eigen::VectorXd& at) {
    out.n_evals += 2 * n;
    return fd_gradient(f, at, opts.fd_step);
  };

  Eigen::VectorXd g = grad(x);
  Eigen::MatrixXd h_inv = Eigen::MatrixXd::Identity(n, n);

  for (int iter = 1; iter <= opts.max_iter; ++iter) {
    out.iterations = iter;
    if (!g.allFinite()) break;
    if (g.cwiseAbs().maxCoeff() <= opts.g_tol) {
      out.converged = true;
      break;
    }

    Eigen::VectorXd dir = -(h_inv * g);
    double slope = g.dot(dir);
    if (!std::isfinite(slope) || slope >= 0.0) {
      dir = -g;  // curvature estimate went bad: fall back to steepest descent
      slope = g.dot(dir);
      h_inv.setIdentity();
    }

    double alpha = 1.0;
    double f_new = kInf;
    Eigen::VectorXd x_new;
    bool accepted = false;
    for (int bt = 0; bt < 50; ++bt) {
      x_new = x + alpha * dir;
      f_new = guarded(f, x_new, out.n_evals);
      if (f_new <= fx + 1e-4 * alpha * slope) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      out.converged = g.cwiseAbs().maxCoeff() <= 1e2 * opts.g_tol;
      break;
    }

    const Eigen::VectorXd g_new = grad(x_new);
    const Eigen::VectorXd s = x_new - x;
    const Eigen::VectorXd y = g_new - g;
    const double sy = s.dot(y);
    if (std::isfinite(sy) && sy > 1e-12 * s.norm() * y.norm()) {
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd left =
          Eigen::MatrixXd::Identity(n, n) - rho * s * y.transpose();
      h_inv = left * h_inv * left.transpose();
      h_inv.noalias() += rho * s * s.transpose();
    }

    const double drop = fx - f_new;
    x = x_new;
    fx = f_new;
    g = g_new;
    if (drop <= opts.f_tol * (std::abs(fx) + 1e-12)) {
      out.converged = true;
      break;
    }
  }

  out.x = x;
  out.f = fx;
  return out;
}

}  // namespace spegarch
