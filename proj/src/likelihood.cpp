#include "spegarch/likelihood.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "spegarch/errors.hpp"
#include "spegarch/parallel.hpp"
#include "spegarch/rng.hpp"

namespace spegarch {

namespace {

constexpr double kLambdaMargin = 1e-3;
constexpr double kFailValue = 1e100;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

Eigen::VectorXd canonical_vector(const ModelParams& p) {
  Eigen::VectorXd v(6);
  v << p.alpha, p.rho0, p.rho1, p.lambda0, p.lambda1, p.theta;
  return v;
}

Eigen::VectorXd canonical_vector(const ModelParams& p, double theta_temporal) {
  Eigen::VectorXd v(7);
  v << p.alpha, p.rho0, p.rho1, p.lambda0, p.lambda1, p.theta, theta_temporal;
  return v;
}

ModelParams params_from_canonical(const Eigen::VectorXd& v, double xi) {
  if (v.size() < 6) throw ValidationError("canonical parameter vector needs 6 entries");
  return ModelParams{v(0), v(1), v(2), v(3), v(4), v(5), xi};
}

double log_likelihood(const ModelParams& p, const LeverageSpec& lev, const Panel& y,
                      const WeightMatrix& w1, const WeightMatrix& w2,
                      const InitialConditions& init, int burn,
                      const NewtonOptions& newton) {
  if (burn < 0) throw ValidationError("burn must be nonnegative");
  if (burn >= y.t_len()) throw ValidationError("burn discards the whole panel");
  const Dynamics dyn(p, lev, w1, w2);
  const auto inv = invert_panel(y, dyn, init, newton);

  const int n = y.n();
  const int t_len = y.t_len();
  const double gauss_const = -0.5 * n * std::log(2.0 * M_PI);
  double ll = 0.0;
  for (int t = burn; t < t_len; ++t) {
    const double det = inv.diag.jacobian_dets(t);
    if (std::abs(det) < 1e-300)
      throw NumericalError("observation Jacobian degenerate at time point " +
                           std::to_string(t + 1));
    const Eigen::ArrayXd eps = inv.eps.col(t).array();
    // ln h = ln y^2 - ln eps^2, the volatility factor of the Jacobian
    const Eigen::ArrayXd lnh = y.col(t).array().square().log() - eps.square().log();
    ll += gauss_const - 0.5 * eps.square().sum() - 0.5 * lnh.sum() -
          std::log(std::abs(det));
  }
  return ll;
}

double log_likelihood(const ModelParams& p, const Panel& y, const WeightMatrix& w1,
                      const WeightMatrix& w2, const InitialConditions& init, int burn,
                      const NewtonOptions& newton) {
  return log_likelihood(p, LeverageSpec{p.theta, p.theta, p.xi}, y, w1, w2, init,
                        burn, newton);
}

namespace {

double atanh_clamped(double u) {
  return std::atanh(std::clamp(u, -1.0 + 1e-12, 1.0 - 1e-12));
}

// Smooth bijection between all of R^k and the interior of the constraint
// set. The lambda pair is parameterized through its scaled sum and
// difference, each squashed into (-radius, radius), which is exactly
// |lambda0| ||W2||_inf + |lambda1| < radius.
struct ParamMap {
  bool two_theta = false;
  double w2norm = 1.0;
  double radius = 1.0 - kLambdaMargin;

  int dim() const { return two_theta ? 7 : 6; }

  void to_model(const Eigen::VectorXd& v, ModelParams& p, LeverageSpec& lev) const {
    p.alpha = v(0);
    p.rho0 = v(1);
    p.rho1 = v(2);
    const double sum = radius * std::tanh(v(3));
    const double dif = radius * std::tanh(v(4));
    p.lambda0 = 0.5 * (sum + dif) / w2norm;
    p.lambda1 = 0.5 * (sum - dif);
    p.theta = std::tanh(v(5));
    p.xi = 1.0;
    lev.theta_spatial = p.theta;
    lev.theta_temporal = two_theta ? std::tanh(v(6)) : p.theta;
    lev.xi = 1.0;
  }

  Eigen::VectorXd from_model(const ModelParams& p, double theta_temporal) const {
    Eigen::VectorXd v(dim());
    const double a = p.lambda0 * w2norm;
    v(0) = p.alpha;
    v(1) = p.rho0;
    v(2) = p.rho1;
    v(3) = atanh_clamped((a + p.lambda1) / radius);
    v(4) = atanh_clamped((a - p.lambda1) / radius);
    v(5) = atanh_clamped(p.theta);
    if (two_theta) v(6) = atanh_clamped(theta_temporal);
    return v;
  }
};

struct Candidate {
  int index = -1;
  double value = kFailValue;
};

Candidate best_of(const std::vector<double>& values) {
  Candidate best;
  for (int i = 0; i < static_cast<int>(values.size()); ++i) {
    if (best.index < 0 || values[i] < best.value) {
      best.index = i;
      best.value = values[i];
    }
  }
  return best;
}

}  // namespace

StdErrorReport se_from_hessian(const Objective& negloglik, const Eigen::VectorXd& at) {
  const int k = static_cast<int>(at.size());
  StdErrorReport rep;
  rep.se = Eigen::VectorXd::Constant(k, kNaN);

  Eigen::MatrixXd h = fd_hessian(negloglik, at);
  if (!h.allFinite()) return rep;
  h = 0.5 * (h + h.transpose()).eval();

  // the ridge may bridge mild indefiniteness or ill-conditioning, but never
  // substitute for curvature: it is scaled and capped by the top eigenvalue
  const double top = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(h)
                         .eigenvalues()
                         .maxCoeff();
  if (!(top > 0.0)) return rep;

  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(k, k);
  double ridge = 0.0;
  while (ridge <= 1e-2 * top) {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h + ridge * eye);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    if (lo > 0.0 && hi <= 1e12 * lo) {
      const Eigen::VectorXd diag =
          (es.eigenvectors() * es.eigenvalues().cwiseInverse().asDiagonal() *
           es.eigenvectors().transpose())
              .diagonal();
      rep.ridge = ridge;
      if ((diag.array() > 0.0).all()) {
        rep.se = diag.cwiseSqrt();
        rep.ok = true;
      }
      return rep;
    }
    ridge = ridge == 0.0 ? 1e-12 * top : 10.0 * ridge;
  }
  rep.ridge = ridge;
  return rep;
}

StdErrorReport hessian_std_errors(const ModelParams& p_hat, const Panel& y,
                                  const WeightMatrix& w1, const WeightMatrix& w2,
                                  const InitialConditions& init, int burn) {
  auto nll = [&](const Eigen::VectorXd& c) -> double {
    ModelParams p{c(0), c(1), c(2), c(3), c(4), c(5), p_hat.xi};
    try {
      return -log_likelihood(p, y, w1, w2, init, burn);
    } catch (const ValidationError&) {
      return kFailValue;
    } catch (const NumericalError&) {
      return kFailValue;
    }
  };
  return se_from_hessian(nll, canonical_vector(p_hat));
}

EstimationResult fit_qmle(const Panel& y, const WeightMatrix& w1, const WeightMatrix& w2,
                          const InitialConditions& init, const FitOptions& opts) {
  if (opts.n_starts < 1) throw ValidationError("need at least one start");
  if (opts.burn < 0) throw ValidationError("burn must be nonnegative");
  if (opts.burn >= y.t_len()) throw ValidationError("burn discards the whole panel");
  const int threads = resolve_threads(opts.threads);

  ParamMap map;
  map.two_theta = opts.two_theta;
  map.w2norm = std::max(1.0, w2.row_sum_norm());
  const int k = map.dim();

  const bool boxed = opts.lower.size() > 0 || opts.upper.size() > 0;
  if (boxed) {
    if (opts.lower.size() != k || opts.upper.size() != k)
      throw ValidationError("search bounds need one entry per estimated parameter");
    if (!(opts.lower.array() < opts.upper.array()).all())
      throw ValidationError("each lower search bound must lie below its upper bound");
  }
  auto in_box = [&](const ModelParams& p, double theta_temporal) -> bool {
    const Eigen::VectorXd c =
        opts.two_theta ? canonical_vector(p, theta_temporal) : canonical_vector(p);
    return (c.array() >= opts.lower.array()).all() &&
           (c.array() <= opts.upper.array()).all();
  };

  std::atomic<int> evals{0};
  auto objective = [&](const Eigen::VectorXd& v) -> double {
    evals.fetch_add(1, std::memory_order_relaxed);
    ModelParams p;
    LeverageSpec lev;
    map.to_model(v, p, lev);
    if (boxed && !in_box(p, lev.theta_temporal)) return kFailValue;
    try {
      return -log_likelihood(p, lev, y, w1, w2, init, opts.burn, opts.newton);
    } catch (const ValidationError&) {
      return kFailValue;
    } catch (const NumericalError&) {
      return kFailValue;
    }
  };

  // all starts are drawn up front so the result is seed-deterministic
  RngStream rng(opts.seed, 0x51a7);
  const int n_points = opts.n_starts + 1;
  std::vector<Eigen::VectorXd> starts(n_points);
  starts[0] = Eigen::VectorXd::Zero(k);  // neutral: everything off
  for (int i = 1; i < n_points; ++i) {
    ModelParams p;
    p.alpha = rng.uniform(-1.0, 1.0);
    p.rho0 = rng.uniform(-0.6, 0.6);
    p.rho1 = rng.uniform(-0.6, 0.6);
    p.lambda0 = rng.uniform(-0.45, 0.45) / map.w2norm;
    p.lambda1 = rng.uniform(-0.45, 0.45);
    p.theta = rng.uniform(-0.8, 0.8);
    double theta_temporal = opts.two_theta ? rng.uniform(-0.8, 0.8) : p.theta;
    if (boxed) {
      Eigen::VectorXd c =
          opts.two_theta ? canonical_vector(p, theta_temporal) : canonical_vector(p);
      c = c.cwiseMax(opts.lower).cwiseMin(opts.upper);
      p = params_from_canonical(c.head(6), p.xi);
      theta_temporal = opts.two_theta ? c(6) : p.theta;
    }
    starts[i] = map.from_model(p, theta_temporal);
  }

  std::vector<double> screen(n_points);
  parallel_for(n_points, threads, [&](int i) { screen[i] = objective(starts[i]); });

  std::vector<int> order(n_points);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return screen[a] < screen[b]; });

  const int n_local = std::min(std::max(opts.n_local, 1), n_points);
  std::vector<OptimResult> local(n_local);
  parallel_for(n_local, threads, [&](int j) {
    local[j] = nelder_mead(objective, starts[order[j]], opts.simplex);
  });

  std::vector<int> lorder(n_local);
  std::iota(lorder.begin(), lorder.end(), 0);
  std::stable_sort(lorder.begin(), lorder.end(),
                   [&](int a, int b) { return local[a].f < local[b].f; });

  const int n_polish = std::min(std::max(opts.n_polish, 1), n_local);
  std::vector<OptimResult> polished(n_polish);
  parallel_for(n_polish, threads, [&](int m) {
    polished[m] = bfgs_numeric(objective, local[lorder[m]].x, opts.polish);
  });

  std::vector<double> final_values(n_polish);
  for (int m = 0; m < n_polish; ++m) final_values[m] = polished[m].f;
  const Candidate winner = best_of(final_values);
  if (winner.value >= kFailValue)
    throw NumericalError("no start produced a finite likelihood");
  const OptimResult& top = polished[winner.index];

  EstimationResult res;
  LeverageSpec lev_hat;
  map.to_model(top.x, res.params, lev_hat);
  res.theta_temporal = lev_hat.theta_temporal;
  res.loglik = -top.f;
  res.converged = top.converged;
  res.burn_dropped = opts.burn;

  const double n_eff = static_cast<double>(y.n()) * (y.t_len() - opts.burn);
  res.aic = -2.0 * res.loglik + 2.0 * k;
  res.bic = -2.0 * res.loglik + k * std::log(n_eff);

  const double a = res.params.lambda0 * map.w2norm;
  const double edge = std::max(std::abs(a + res.params.lambda1),
                               std::abs(a - res.params.lambda1));
  res.boundary = edge > 0.995 * map.radius || std::abs(res.params.theta) > 0.995 ||
                 std::abs(res.theta_temporal) > 0.995;
  if (boxed && !res.boundary) {
    const Eigen::VectorXd c_hat = opts.two_theta
                                      ? canonical_vector(res.params, res.theta_temporal)
                                      : canonical_vector(res.params);
    for (int d = 0; d < k; ++d) {
      if ((std::isfinite(opts.lower(d)) && c_hat(d) - opts.lower(d) <= 1e-4) ||
          (std::isfinite(opts.upper(d)) && opts.upper(d) - c_hat(d) <= 1e-4)) {
        res.boundary = true;
        break;
      }
    }
  }

  res.trace.reserve(n_points);
  for (int pos = 0; pos < n_points; ++pos) {
    const int i = order[pos];
    StartRecord rec;
    ModelParams sp;
    LeverageSpec slev;
    map.to_model(starts[i], sp, slev);
    rec.params = opts.two_theta ? canonical_vector(sp, slev.theta_temporal)
                                : canonical_vector(sp);
    rec.nll_screen = screen[i];
    rec.nll_final = screen[i];
    rec.stage = 0;
    if (pos < n_local) {
      rec.stage = 1;
      rec.nll_final = local[pos].f;
      for (int m = 0; m < n_polish; ++m) {
        if (lorder[m] == pos) {
          rec.stage = 2;
          rec.nll_final = polished[m].f;
        }
      }
    }
    res.trace.push_back(std::move(rec));
  }

  if (opts.std_errors) {
    auto nll_free = [&](const Eigen::VectorXd& c) -> double {
      evals.fetch_add(1, std::memory_order_relaxed);
      ModelParams p{c(0), c(1), c(2), c(3), c(4), c(5), 1.0};
      LeverageSpec lev{c(5), opts.two_theta ? c(6) : c(5), 1.0};
      try {
        return -log_likelihood(p, lev, y, w1, w2, init, opts.burn, opts.newton);
      } catch (const ValidationError&) {
        return kFailValue;
      } catch (const NumericalError&) {
        return kFailValue;
      }
    };
    const Eigen::VectorXd at =
        opts.two_theta ? canonical_vector(res.params, res.theta_temporal)
                       : canonical_vector(res.params);
    const StdErrorReport rep = se_from_hessian(nll_free, at);
    res.std_errors = rep.se;
    res.se_ok = rep.ok;
    res.hessian_ridge = rep.ridge;
  } else {
    res.std_errors = Eigen::VectorXd::Constant(k, kNaN);
  }

  res.n_inversions = evals.load();
  return res;
}

}  // namespace spegarch
