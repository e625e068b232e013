#include <cmath>

#include "doctest.h"
#include "spegarch/errors.hpp"
#include "spegarch/meanmodel.hpp"
#include "spegarch/networks.hpp"
#include "spegarch/rng.hpp"

using namespace spegarch;

namespace {

Eigen::MatrixXd gen_sdpd(int n, int t_len, double rho, double gamma, double lambda,
                         const WeightMatrix& w1, const WeightMatrix& w2,
                         std::uint64_t seed) {
  RngStream rng(seed);
  const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n) - rho * w1.matrix();
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  Eigen::VectorXd y_prev = Eigen::VectorXd::Zero(n);
  const int burn = 100;
  Eigen::MatrixXd out(n, t_len);
  for (int t = 0; t < burn + t_len; ++t) {
    Eigen::VectorXd u(n);
    for (int i = 0; i < n; ++i) u(i) = rng.normal();
    const Eigen::VectorXd y =
        lu.solve(gamma * y_prev + lambda * (w2.matrix() * y_prev) + u);
    if (t >= burn) out.col(t - burn) = y;
    y_prev = y;
  }
  return out;
}

double pooled_lag1_autocorr(const Eigen::MatrixXd& u) {
  const int t_len = static_cast<int>(u.cols());
  double num = 0.0, den = 0.0;
  for (int i = 0; i < u.rows(); ++i) {
    const double mean = u.row(i).mean();
    for (int t = 0; t + 1 < t_len; ++t)
      num += (u(i, t) - mean) * (u(i, t + 1) - mean);
    for (int t = 0; t < t_len; ++t) den += (u(i, t) - mean) * (u(i, t) - mean);
  }
  return num / den;
}

}  // namespace

TEST_SUITE("meanmodel") {

TEST_CASE("pure noise estimates sit near zero") {
  const auto w1 = grid_contiguity(4, 4, Contiguity::Queen, true);
  const auto w2 = grid_contiguity(4, 4, Contiguity::Rook, true);
  const Eigen::MatrixXd y = gen_sdpd(16, 1000, 0.0, 0.0, 0.0, w1, w2, 404);
  const auto fit = fit_sdpd(Panel(y, PanelKind::Returns), w1, w2);
  CHECK(std::abs(fit.rho) < 0.05);
  CHECK(std::abs(fit.gamma) < 0.05);
  CHECK(std::abs(fit.lambda) < 0.05);
}

TEST_CASE("generating coefficients are recovered") {
  const auto w1 = grid_contiguity(4, 4, Contiguity::Queen, true);
  const auto w2 = grid_contiguity(4, 4, Contiguity::Rook, true);
  const Eigen::MatrixXd y = gen_sdpd(16, 1000, 0.3, 0.2, 0.1, w1, w2, 808);
  const auto fit = fit_sdpd(Panel(y, PanelKind::Returns), w1, w2);
  CHECK(std::abs(fit.rho - 0.3) < 0.05);
  CHECK(std::abs(fit.gamma - 0.2) < 0.05);
  CHECK(std::abs(fit.lambda - 0.1) < 0.05);
}

TEST_CASE("residuals reconstruct the filtered equation exactly") {
  const auto w1 = grid_contiguity(3, 3, Contiguity::Queen, true);
  const auto w2 = grid_contiguity(3, 3, Contiguity::Rook, true);
  const Eigen::MatrixXd y = gen_sdpd(9, 60, 0.25, 0.15, 0.05, w1, w2, 11);
  const Panel panel(y, PanelKind::Returns);
  const auto fit = fit_sdpd(panel, w1, w2);

  REQUIRE(fit.residuals.t_len() == 59);
  REQUIRE(fit.residuals.n() == 9);
  CHECK(fit.residuals.kind() == PanelKind::Residuals);
  for (int t = 1; t < 60; ++t) {
    const Eigen::VectorXd expect = y.col(t) - fit.rho * (w1.matrix() * y.col(t)) -
                                   fit.gamma * y.col(t - 1) -
                                   fit.lambda * (w2.matrix() * y.col(t - 1));
    CHECK((fit.residuals.col(t - 1) - expect).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("returned rho maximizes the profile over the grid") {
  const auto w1 = grid_contiguity(3, 3, Contiguity::Queen, true);
  const auto w2 = grid_contiguity(3, 3, Contiguity::Rook, true);
  const Eigen::MatrixXd y = gen_sdpd(9, 200, -0.4, 0.1, 0.2, w1, w2, 99);
  const Panel panel(y, PanelKind::Returns);
  const auto fit = fit_sdpd(panel, w1, w2);

  CHECK(fit.profile_loglik ==
        doctest::Approx(sdpd_profile_loglik(panel, w1, w2, fit.rho)).epsilon(1e-12));
  for (double rho = -0.99; rho < 0.9901; rho += 0.005)
    CHECK(sdpd_profile_loglik(panel, w1, w2, rho) <= fit.profile_loglik + 1e-9);
}

TEST_CASE("residuals of the recovered model are white at lag one") {
  const auto w1 = grid_contiguity(4, 4, Contiguity::Queen, true);
  const auto w2 = grid_contiguity(4, 4, Contiguity::Rook, true);
  const Eigen::MatrixXd y = gen_sdpd(16, 1000, 0.3, 0.2, 0.1, w1, w2, 1234);
  const auto fit = fit_sdpd(Panel(y, PanelKind::Returns), w1, w2);
  CHECK(std::abs(pooled_lag1_autocorr(fit.residuals.values())) < 0.05);
}

TEST_CASE("degenerate inputs are rejected") {
  const auto w1 = grid_contiguity(3, 3, Contiguity::Queen, true);
  const auto w2 = grid_contiguity(3, 3, Contiguity::Rook, true);
  const Panel brief(Eigen::MatrixXd::Ones(9, 9), PanelKind::Returns);
  CHECK_THROWS_AS(fit_sdpd(brief, w1, w2), ValidationError);
  const Panel flat(Eigen::MatrixXd::Zero(9, 40), PanelKind::Returns);
  CHECK_THROWS_AS(fit_sdpd(flat, w1, w2), ValidationError);
  const Panel ok(gen_sdpd(9, 40, 0.0, 0.0, 0.0, w1, w2, 5), PanelKind::Returns);
  CHECK_THROWS_AS(sdpd_profile_loglik(ok, w1, w2, 0.9999), ValidationError);
}

}  // TEST_SUITE
