#include <cmath>

#include "doctest.h"
#include "spegarch/errors.hpp"
#include "spegarch/mc.hpp"

using namespace spegarch;

namespace {

FitOptions quick_fit() {
  FitOptions fo;
  fo.n_starts = 3;
  fo.n_local = 1;
  fo.n_polish = 1;
  fo.std_errors = false;
  fo.simplex.max_evals = 200;
  fo.polish.max_iter = 20;
  return fo;
}

}  // namespace

TEST_SUITE("mc") {

TEST_CASE("study design constants") {
  const ModelParams a = model_a_params();
  CHECK(a.alpha == 0.5);
  CHECK(a.rho0 == 0.5);
  CHECK(a.rho1 == 0.35);
  CHECK(a.lambda0 == 0.2);
  CHECK(a.lambda1 == 0.3);
  CHECK(a.theta == 0.4);
  CHECK(a.xi == 1.0);

  const ModelParams b = model_b_params();
  CHECK(b.rho0 == 0.2);
  CHECK(b.lambda0 == 0.25);
  CHECK(b.alpha == a.alpha);
  CHECK(b.rho1 == a.rho1);
  CHECK(b.lambda1 == a.lambda1);
  CHECK(b.theta == a.theta);
}

TEST_CASE("aggregates match brute force and reruns bit for bit") {
  McConfig cfg;
  cfg.rows = 3;
  cfg.cols = 3;
  cfg.t_len = 60;
  cfg.replications = 3;
  cfg.seed = 99;
  cfg.fit = quick_fit();

  const auto table = run_bias_rmse(cfg);
  CHECK(table.failures == 0);
  REQUIRE(table.estimates.rows() == 3);
  REQUIRE(table.rows.size() == 6);
  CHECK(table.rows[0].parameter == "alpha");
  CHECK(table.rows[5].parameter == "theta");
  CHECK(table.rep_seconds.size() == 3);
  CHECK(table.replication_ids == std::vector<int>{0, 1, 2});

  const Eigen::VectorXd truth = canonical_vector(cfg.params);
  for (int j = 0; j < 6; ++j) {
    double bias = 0.0, mse = 0.0;
    for (int r = 0; r < 3; ++r) {
      const double err = table.estimates(r, j) - truth(j);
      bias += err / 3.0;
      mse += err * err / 3.0;
    }
    CHECK(table.rows[j].bias == doctest::Approx(bias).epsilon(1e-12));
    CHECK(table.rows[j].rmse == doctest::Approx(std::sqrt(mse)).epsilon(1e-12));
  }

  const auto again = run_bias_rmse(cfg);
  CHECK((again.estimates.array() == table.estimates.array()).all());
  for (int j = 0; j < 6; ++j) {
    CHECK(again.rows[j].bias == table.rows[j].bias);
    CHECK(again.rows[j].rmse == table.rows[j].rmse);
  }
}

TEST_CASE("thread count does not change the table") {
  McConfig cfg;
  cfg.rows = 3;
  cfg.cols = 3;
  cfg.t_len = 50;
  cfg.replications = 4;
  cfg.seed = 17;
  cfg.fit = quick_fit();

  cfg.threads = 1;
  const auto serial = run_bias_rmse(cfg);
  cfg.threads = 4;
  const auto pooled = run_bias_rmse(cfg);
  CHECK((serial.estimates.array() == pooled.estimates.array()).all());
  for (int j = 0; j < 6; ++j) {
    CHECK(serial.rows[j].bias == pooled.rows[j].bias);
    CHECK(serial.rows[j].rmse == pooled.rows[j].rmse);
  }
}

TEST_CASE("recovery is exact at the truth and worsens off center") {
  const ModelParams p{0.5, 0.25, 0.3, 0.35, 0.4, 0.4, 1.0};
  const std::vector<double> offsets{-0.1, 0.0, 0.1};
  const auto study = run_invertibility_study(p, 5, 5, 50, offsets, 2, 314, 0);

  CHECK(study.failures == 0);
  REQUIRE(study.pairs.size() == 15);
  REQUIRE(study.ssd.size() == 15);
  CHECK(study.maxd.size() == 50);
  CHECK(study.maxd.maxCoeff() < 1e-12);

  for (int pi = 0; pi < 15; ++pi) {
    const Eigen::MatrixXd& surf = study.ssd[pi];
    const double center = surf(1, 1);
    CHECK(center < 1e-10);
    for (int ia = 0; ia < 3; ++ia)
      for (int ib = 0; ib < 3; ++ib)
        if (ia != 1 || ib != 1) CHECK(center < surf(ia, ib));
  }

  const auto again = run_invertibility_study(p, 5, 5, 50, offsets, 2, 314, 3);
  CHECK((again.maxd.array() == study.maxd.array()).all());
  for (int pi = 0; pi < 15; ++pi)
    CHECK((again.ssd[pi].array() == study.ssd[pi].array()).all());
}

TEST_CASE("excess replication failures abort the study") {
  McConfig cfg;
  cfg.rows = 3;
  cfg.cols = 3;
  cfg.t_len = 40;
  cfg.replications = 2;
  cfg.fit = quick_fit();
  cfg.params.alpha = 500.0;  // stationary but the volatility overflows
  CHECK_THROWS_AS(run_bias_rmse(cfg), NumericalError);

  McConfig bad;
  bad.replications = 0;
  CHECK_THROWS_AS(run_bias_rmse(bad), ValidationError);
  CHECK_THROWS_AS(
      run_invertibility_study(model_a_params(), 3, 3, 40, {}, 1, 1, 0),
      ValidationError);
}

}  // TEST_SUITE
