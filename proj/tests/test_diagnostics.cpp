#include <cmath>

#include "doctest.h"
#include "spegarch/diagnostics.hpp"
#include "spegarch/errors.hpp"
#include "spegarch/likelihood.hpp"
#include "spegarch/networks.hpp"
#include "spegarch/process.hpp"
#include "spegarch/rng.hpp"

using namespace spegarch;

TEST_SUITE("diagnostics") {

TEST_CASE("portmanteau statistic matches a direct computation") {
  Eigen::VectorXd x(8);
  x << 1.2, -0.4, 0.9, 2.1, -1.7, 0.3, -0.8, 1.5;
  const double mean = x.mean();
  const Eigen::ArrayXd z = x.array() - mean;
  const double denom = z.square().sum();
  double q_ref = 0.0;
  for (int k = 1; k <= 2; ++k) {
    double num = 0.0;
    for (int t = 0; t + k < 8; ++t) num += z(t) * z(t + k);
    const double rk = num / denom;
    q_ref += rk * rk / (8 - k);
  }
  q_ref *= 8.0 * 10.0;

  const auto res = ljung_box(x, 2);
  CHECK(res.statistic == doctest::Approx(q_ref).epsilon(1e-10));
  // chi-square with 2 degrees of freedom has a closed-form upper tail
  CHECK(res.p_value == doctest::Approx(std::exp(-q_ref / 2.0)).epsilon(1e-10));
}

TEST_CASE("portmanteau test is affine invariant and detects persistence") {
  RngStream rng(2024);
  Eigen::VectorXd ar(500);
  double prev = 0.0;
  for (int t = 0; t < 500; ++t) {
    prev = 0.5 * prev + rng.normal();
    ar(t) = prev;
  }
  const auto base = ljung_box(ar, 10);
  CHECK(base.p_value < 0.01);

  const auto shifted = ljung_box((3.0 * ar.array() - 7.0).matrix(), 10);
  CHECK(shifted.statistic == doctest::Approx(base.statistic).epsilon(1e-10));
}

TEST_CASE("portmanteau test holds its size on independent draws") {
  int rejections = 0;
  const int reps = 500;
  for (int r = 0; r < reps; ++r) {
    RngStream rng(31000 + r);
    Eigen::VectorXd x(400);
    for (int t = 0; t < 400; ++t) x(t) = rng.normal();
    if (ljung_box(x, 10).p_value < 0.05) ++rejections;
  }
  const double rate = rejections / static_cast<double>(reps);
  CHECK(rate > 0.03);
  CHECK(rate < 0.07);
}

TEST_CASE("checkerboard pattern is strongly negatively autocorrelated") {
  const auto w = grid_contiguity(4, 4, Contiguity::Rook, true);
  Eigen::VectorXd x(16);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) x(4 * r + c) = ((r + c) % 2 == 0) ? 1.0 : -1.0;

  const auto res = morans_i(x, w);
  // every rook neighbor has the opposite sign, the most negative case
  CHECK(res.statistic == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(res.statistic < -1.0 / 15.0);
  CHECK(res.p_value < 0.001);
}

TEST_CASE("spatial statistic is invariant to shifts scales and weight scaling") {
  const auto std_w = grid_contiguity(4, 4, Contiguity::Queen, false);
  RngStream rng(7);
  Eigen::VectorXd x(16);
  for (int i = 0; i < 16; ++i) x(i) = rng.normal();

  const auto base = morans_i(x, std_w);
  const auto moved = morans_i((2.5 * x.array() + 11.0).matrix(), std_w);
  CHECK(moved.statistic == doctest::Approx(base.statistic).epsilon(1e-12));
  CHECK(moved.p_value == doctest::Approx(base.p_value).epsilon(1e-12));

  const WeightMatrix scaled(4.0 * std_w.matrix(), false);
  const auto rescaled = morans_i(x, scaled);
  CHECK(rescaled.statistic == doctest::Approx(base.statistic).epsilon(1e-12));
  CHECK(rescaled.p_value == doctest::Approx(base.p_value).epsilon(1e-12));
}

TEST_CASE("spatial test holds its size on independent draws") {
  const auto w = grid_contiguity(5, 5, Contiguity::Queen, true);
  int rejections = 0;
  const int reps = 800;
  for (int r = 0; r < reps; ++r) {
    RngStream rng(52000 + r);
    Eigen::VectorXd x(25);
    for (int i = 0; i < 25; ++i) x(i) = rng.normal();
    if (morans_i(x, w).p_value < 0.05) ++rejections;
  }
  const double rate = rejections / static_cast<double>(reps);
  CHECK(rate > 0.03);
  CHECK(rate < 0.07);
}

TEST_CASE("degenerate inputs are refused") {
  CHECK_THROWS_AS(ljung_box(Eigen::VectorXd::Constant(50, 3.0), 10), ValidationError);
  CHECK_THROWS_AS(ljung_box(Eigen::VectorXd::Zero(5), 10), ValidationError);

  const auto w = grid_contiguity(4, 4, Contiguity::Rook, true);
  CHECK_THROWS_AS(morans_i(Eigen::VectorXd::Constant(16, 1.0), w), ValidationError);
  const WeightMatrix none(Eigen::MatrixXd::Zero(16, 16), false);
  RngStream rng(1);
  Eigen::VectorXd x(16);
  for (int i = 0; i < 16; ++i) x(i) = rng.normal();
  CHECK_THROWS_AS(morans_i(x, none), ValidationError);
}

TEST_CASE("iid panels produce small significant fractions") {
  const auto w = grid_contiguity(5, 5, Contiguity::Queen, true);
  const Panel resid = seeded_normal_panel(25, 300, 606, PanelKind::Residuals);
  const auto rep = panel_diagnostics(resid, w);

  CHECK(rep.frac_lb_raw <= 0.12);
  CHECK(rep.frac_lb_squared <= 0.12);
  CHECK(rep.frac_moran_raw <= 0.12);
  CHECK(rep.frac_moran_squared <= 0.12);
  CHECK(rep.lb_raw.size() == 25);
  CHECK(rep.moran_raw.size() == 300);

  const auto again = panel_diagnostics(resid, w);
  CHECK((again.lb_raw.array() == rep.lb_raw.array()).all());
  CHECK((again.moran_squared.array() == rep.moran_squared.array()).all());
}

TEST_CASE("recovered innovations of a fitted model pass the battery") {
  const auto w1 = grid_contiguity(5, 5, Contiguity::Queen, true);
  const auto w2 = grid_contiguity(5, 5, Contiguity::Rook, true);
  const ModelParams p{0.5, 0.25, 0.3, 0.35, 0.4, 0.4, 1.0};
  const auto init = default_initial(25);
  const auto sim = simulate(p, w1, w2, 200, 100, init, 987654);

  FitOptions opts;
  opts.n_starts = 4;
  opts.n_local = 1;
  opts.n_polish = 1;
  opts.seed = 5;
  opts.std_errors = false;
  opts.simplex.max_evals = 300;
  opts.polish.max_iter = 25;
  const auto fit = fit_qmle(sim.y, w1, w2, init, opts);

  const auto inv = invert_panel(sim.y, fit.params, w1, w2, init);
  const auto rep = panel_diagnostics(inv.eps, w1);
  CHECK(rep.frac_lb_raw <= 0.12);
  CHECK(rep.frac_lb_squared <= 0.12);
  CHECK(rep.frac_moran_raw <= 0.12);
  CHECK(rep.frac_moran_raw >= 0.005);
  CHECK(rep.frac_moran_squared <= 0.12);
}

}  // TEST_SUITE
