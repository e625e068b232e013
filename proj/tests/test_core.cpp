#include <cmath>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "doctest.h"
#include "spegarch/csv.hpp"
#include "spegarch/errors.hpp"
#include "spegarch/parallel.hpp"
#include "spegarch/rng.hpp"
#include "spegarch/types.hpp"
#include "support/helpers.hpp"

using namespace spegarch;

TEST_SUITE("core") {

TEST_CASE("parameter validation flags the identification constraints") {
  ModelParams p{0.5, 0.5, 0.35, 0.2, 0.3, 0.4, 1.0};
  CHECK(validate_params(p).empty());

  p.theta = 1.0;
  auto v = validate_params(p);
  REQUIRE(v.size() == 1);
  CHECK(v[0].find("theta") != std::string::npos);

  p.theta = 0.4;
  p.xi = 0.0;
  CHECK(validate_params(p).size() == 2);  // xi > 0 and |theta| < xi both fail

  p = ModelParams{};
  p.alpha = std::nan("");
  CHECK(!validate_params(p).empty());
}

TEST_CASE("panel construction rejects bad values") {
  Eigen::MatrixXd m = Eigen::MatrixXd::Ones(3, 4);
  Panel panel(m, PanelKind::Returns);
  CHECK(panel.n() == 3);
  CHECK(panel.t_len() == 4);

  m(1, 2) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(Panel(m, PanelKind::Returns), ValidationError);

  m(1, 2) = 0.0;
  CHECK_THROWS_AS(Panel(m, PanelKind::Volatility), ValidationError);
  m(1, 2) = 1.0;
  CHECK_NOTHROW(Panel(m, PanelKind::Volatility));
}

TEST_CASE("weight matrix invariants") {
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(3, 3);
  w(0, 1) = 1.0;
  w(1, 0) = 1.0;
  w(1, 2) = 1.0;
  w(2, 1) = 1.0;
  CHECK_NOTHROW(WeightMatrix(w, false));

  SUBCASE("negative entry") {
    w(0, 1) = -1.0;
    CHECK_THROWS_AS(WeightMatrix(w, false), ValidationError);
  }
  SUBCASE("nonzero diagonal") {
    w(2, 2) = 0.5;
    CHECK_THROWS_AS(WeightMatrix(w, false), ValidationError);
  }
  SUBCASE("row-standardized flag is checked") {
    CHECK_THROWS_AS(WeightMatrix(w, true), ValidationError);
    auto std_w = row_standardize(WeightMatrix(w, false));
    CHECK(std_w.row_standardized());
    CHECK(std_w.matrix().row(1).sum() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(std_w.matrix()(1, 0) == doctest::Approx(0.5));
  }
  SUBCASE("all-zero row survives standardization") {
    Eigen::MatrixXd iso = Eigen::MatrixXd::Zero(3, 3);
    iso(0, 1) = 2.0;
    auto std_w = row_standardize(WeightMatrix(iso, false));
    CHECK(std_w.matrix().row(2).sum() == 0.0);
    CHECK(std_w.matrix()(0, 1) == 1.0);
  }
}

TEST_CASE("default initial state implies zero initial log volatility") {
  auto init = default_initial(4);
  CHECK(init.y0.size() == 4);
  const Eigen::VectorXd lnh0 =
      (init.y0.array().square() / init.eps0.array().square()).log().matrix();
  CHECK(lnh0.cwiseAbs().maxCoeff() == 0.0);

  init.eps0(2) = 0.0;
  CHECK_THROWS_AS(validate_initial(init, 4), ValidationError);
  CHECK_THROWS_AS(validate_initial(default_initial(3), 4), ValidationError);
}

TEST_CASE("rng streams are reproducible and decorrelated") {
  RngStream a(42), b(42), c(43), d(42, 1);
  bool same_ab = true, same_ac = true, same_ad = true;
  double first_a = 0.0;
  for (int i = 0; i < 200; ++i) {
    const double va = a.normal();
    if (i == 0) first_a = va;
    same_ab = same_ab && va == b.normal();
    same_ac = same_ac && va == c.normal();
    same_ad = same_ad && va == d.normal();
  }
  CHECK(same_ab);
  CHECK(!same_ac);
  CHECK(!same_ad);
  CHECK(std::isfinite(first_a));

  RngStream m(7);
  double sum = 0.0, sumsq = 0.0;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    const double x = m.normal();
    sum += x;
    sumsq += x * x;
  }
  CHECK(std::abs(sum / draws) < 0.02);
  CHECK(std::abs(sumsq / draws - 1.0) < 0.03);
}

TEST_CASE("seeded normal panel extends along time for a fixed seed") {
  const Panel short_panel = seeded_normal_panel(3, 5, 99);
  const Panel long_panel = seeded_normal_panel(3, 10, 99);
  CHECK((long_panel.values().leftCols(5) - short_panel.values()).cwiseAbs().maxCoeff() == 0.0);
  const Panel other = seeded_normal_panel(3, 5, 100);
  CHECK((other.values() - short_panel.values()).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("panel csv round trip is exact") {
  const Panel panel = seeded_normal_panel(4, 7, 1234, PanelKind::Returns);
  const auto path = test_support::temp_path("roundtrip.csv");
  write_panel_csv(panel, path);
  const Panel back = read_panel_csv(path, PanelKind::Returns);
  REQUIRE(back.n() == 4);
  REQUIRE(back.t_len() == 7);
  CHECK((back.values() - panel.values()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("weights csv round trip recovers the standardization flag") {
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(3, 3);
  w(0, 1) = 1.0;
  w(1, 0) = 0.25;
  w(1, 2) = 0.75;
  w(2, 0) = 1.0;
  const WeightMatrix wm(w, true);
  const auto path = test_support::temp_path("weights.csv");
  write_weights_csv(wm, path);
  const WeightMatrix back = read_weights_csv(path);
  CHECK(back.row_standardized());
  CHECK((back.matrix() - w).cwiseAbs().maxCoeff() == 0.0);

  Eigen::MatrixXd raw = 2.0 * w;
  write_weights_csv(WeightMatrix(raw, false), path);
  CHECK(!read_weights_csv(path).row_standardized());
}

TEST_CASE("malformed csv is rejected with the offending location") {
  const auto path = test_support::temp_path("bad.csv");
  {
    std::ofstream out(path);
    out << "node_1,node_2\n1.0,2.0\n3.0\n";
  }
  CHECK_THROWS_AS(read_panel_csv(path, PanelKind::Returns), IoError);
  {
    std::ofstream out(path);
    out << "node_1,node_2\n1.0,2.0\n3.0,abc\n";
  }
  CHECK_THROWS_WITH_AS(read_panel_csv(path, PanelKind::Returns),
                       doctest::Contains("line 3"), IoError);
  CHECK_THROWS_AS(read_panel_csv(test_support::temp_path("missing.csv"), PanelKind::Returns),
                  IoError);
}

TEST_CASE("edge list enumerates nonzero weights with 1-based indices") {
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(2, 2);
  w(0, 1) = 0.5;
  const auto path = test_support::temp_path("edges.csv");
  write_edge_list_csv(WeightMatrix(w, false), path);
  std::ifstream in(path);
  std::string header, line, rest;
  std::getline(in, header);
  std::getline(in, line);
  CHECK(header == "i,j,weight");
  CHECK(line == "1,2,0.5");
  CHECK(!std::getline(in, rest));
}

TEST_CASE("parallel_for covers every index once and propagates exceptions") {
  std::vector<int> hits(101, 0);
  parallel_for(101, 4, [&](int i) { hits[i] += 1; });
  bool all_once = true;
  for (int h : hits) all_once = all_once && h == 1;
  CHECK(all_once);
  CHECK_THROWS_AS(
      parallel_for(8, 2, [](int i) { if (i == 3) throw NumericalError("boom"); }),
      NumericalError);
  CHECK(resolve_threads(5) == 5);
  CHECK(resolve_threads(0) >= 1);
}

}  // TEST_SUITE
