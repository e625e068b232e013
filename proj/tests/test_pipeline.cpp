#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include "spegarch/csv.hpp"
#include "spegarch/errors.hpp"
#include "spegarch/json_io.hpp"
#include "spegarch/networks.hpp"
#include "spegarch/pipeline.hpp"
#include "spegarch/process.hpp"
#include "support/helpers.hpp"

using namespace spegarch;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::path(test_support::temp_path("pipeline")) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Returns panel with two zero cells punched in, written as CSV.
std::string returns_with_zeros(const fs::path& dir) {
  ModelParams p;
  p.alpha = 0.5;
  p.rho0 = 0.3;
  p.rho1 = 0.3;
  p.lambda0 = 0.2;
  p.lambda1 = 0.3;
  p.theta = 0.4;
  const WeightMatrix w1 = grid_contiguity(3, 3, Contiguity::Queen);
  const WeightMatrix w2 = grid_contiguity(3, 3, Contiguity::Rook);
  const SimulationResult sim = simulate(p, w1, w2, 90, 50, default_initial(9), 20260816);
  Eigen::MatrixXd values = sim.y.values();
  values(2, 10) = 0.0;
  values(7, 55) = 0.0;
  const std::string path = (dir / "returns.csv").string();
  write_panel_csv(Panel(values, PanelKind::Returns), path);
  return path;
}

nlohmann::json tiny_fit_json() {
  return {{"n_starts", 3},
          {"n_local", 1},
          {"n_polish", 1},
          {"std_errors", false},
          {"seed", 17},
          {"simplex", {{"max_evals", 150}}},
          {"polish", {{"max_iter", 15}}}};
}

nlohmann::json demo_config(const std::string& returns_path, const std::string& out_dir) {
  return {{"returns_csv", returns_path},
          {"zero_seed", 11},
          {"out_dir", out_dir},
          {"networks",
           {{{"name", "queen-rook"},
             {"w1", {{"type", "grid"}, {"rows", 3}, {"cols", 3}, {"contiguity", "queen"}}},
             {"w2", {{"type", "grid"}, {"rows", 3}, {"cols", 3}, {"contiguity", "rook"}}}},
            {{"name", "knn3"},
             {"w1", {{"type", "knn"}, {"k", 3}}},
             {"w2", {{"type", "knn"}, {"k", 3}, {"metric", "correlation"}}}}}},
          {"fit", tiny_fit_json()},
          {"max_lag", 6}};
}

int run_cli(const std::string& cli, const std::string& args) {
  const std::string cmd = "\"" + cli + "\" " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("model parameters and fit options survive the json round trip") {
  ModelParams p;
  p.alpha = 0.31;
  p.rho0 = -0.22;
  p.rho1 = 0.17;
  p.lambda0 = 0.09;
  p.lambda1 = -0.41;
  p.theta = 0.5;
  p.xi = 0.75;
  const ModelParams back = params_from_json(params_to_json(p));
  CHECK(back.alpha == p.alpha);
  CHECK(back.rho0 == p.rho0);
  CHECK(back.rho1 == p.rho1);
  CHECK(back.lambda0 == p.lambda0);
  CHECK(back.lambda1 == p.lambda1);
  CHECK(back.theta == p.theta);
  CHECK(back.xi == p.xi);

  FitOptions o;
  o.n_starts = 7;
  o.n_local = 3;
  o.n_polish = 2;
  o.seed = 424242;
  o.burn = 8;
  o.two_theta = true;
  o.std_errors = false;
  o.simplex.max_evals = 321;
  o.simplex.step = 0.5;
  o.polish.max_iter = 44;
  o.polish.g_tol = 1e-4;
  o.newton.tol = 1e-9;
  o.newton.max_iter = 64;
  const FitOptions fo = fit_options_from_json(fit_options_to_json(o));
  CHECK(fo.n_starts == 7);
  CHECK(fo.n_local == 3);
  CHECK(fo.n_polish == 2);
  CHECK(fo.seed == 424242);
  CHECK(fo.burn == 8);
  CHECK(fo.two_theta);
  CHECK_FALSE(fo.std_errors);
  CHECK(fo.simplex.max_evals == 321);
  CHECK(fo.simplex.step == 0.5);
  CHECK(fo.polish.max_iter == 44);
  CHECK(fo.polish.g_tol == 1e-4);
  CHECK(fo.newton.tol == 1e-9);
  CHECK(fo.newton.max_iter == 64);

  SUBCASE("partial objects keep the remaining defaults") {
    const FitOptions partial = fit_options_from_json(nlohmann::json{{"n_starts", 4}});
    CHECK(partial.n_starts == 4);
    CHECK(partial.n_local == FitOptions{}.n_local);
    CHECK(partial.burn == FitOptions{}.burn);
  }
  SUBCASE("unknown keys are named in the error") {
    CHECK_THROWS_WITH_AS(params_from_json(nlohmann::json{{"thetaa", 0.1}}),
                         doctest::Contains("thetaa"), ValidationError);
    CHECK_THROWS_WITH_AS(
        fit_options_from_json(nlohmann::json{{"simplex", {{"maxevals", 2}}}}),
        doctest::Contains("maxevals"), ValidationError);
  }
  SUBCASE("wrong types are rejected") {
    CHECK_THROWS_AS(params_from_json(nlohmann::json{{"alpha", "large"}}), ValidationError);
    CHECK_THROWS_AS(fit_options_from_json(nlohmann::json{{"n_starts", 2.5}}),
                    ValidationError);
    CHECK_THROWS_AS(fit_options_from_json(nlohmann::json{{"seed", -3}}), ValidationError);
    CHECK_THROWS_AS(params_from_json(nlohmann::json::array()), ValidationError);
  }
}

TEST_CASE("mc config json maps every field") {
  const nlohmann::json j = {
      {"params", {{"alpha", 0.5}, {"rho0", 0.2}, {"theta", 0.4}}},
      {"rows", 3},
      {"cols", 5},
      {"t_len", 75},
      {"burn_in", 40},
      {"replications", 12},
      {"seed", 909},
      {"threads", 2},
      {"fit", {{"n_starts", 6}, {"simplex", {{"max_evals", 111}}}}}};
  const McConfig c = mc_config_from_json(j);
  CHECK(c.params.alpha == 0.5);
  CHECK(c.params.rho0 == 0.2);
  CHECK(c.params.theta == 0.4);
  CHECK(c.params.rho1 == model_a_params().rho1);  // untouched fields keep the design default
  CHECK(c.rows == 3);
  CHECK(c.cols == 5);
  CHECK(c.t_len == 75);
  CHECK(c.burn_in == 40);
  CHECK(c.replications == 12);
  CHECK(c.seed == 909);
  CHECK(c.threads == 2);
  CHECK(c.fit.n_starts == 6);
  CHECK(c.fit.simplex.max_evals == 111);

  const McConfig round = mc_config_from_json(mc_config_to_json(c));
  CHECK(round.params.rho1 == c.params.rho1);
  CHECK(round.fit.simplex.max_evals == 111);
}

TEST_CASE("ingestion replaces zeros deterministically and reports the count") {
  const fs::path dir = fresh_dir("ingest");
  Eigen::MatrixXd values(3, 6);
  values << 0.4, -0.2, 0.9, 0.1, -0.5, 0.3,
            0.7, 0.0, -0.8, 0.2, 0.6, -0.1,
            -0.3, 0.5, 0.2, 0.0, -0.9, 0.8;
  const std::string path = (dir / "zeros.csv").string();
  write_panel_csv(Panel(values, PanelKind::Returns), path);

  const IngestResult got = ingest_returns(path, ZeroPolicy::ReplaceNormal, 0.01, 7);
  CHECK(got.replaced == 2);
  CHECK(got.panel.n() == 3);
  CHECK(got.panel.t_len() == 6);
  for (int i = 0; i < 3; ++i) {
    for (int t = 0; t < 6; ++t) {
      if (values(i, t) != 0.0) {
        CHECK(got.panel(i, t) == values(i, t));
      } else {
        CHECK(got.panel(i, t) != 0.0);
        CHECK(std::abs(got.panel(i, t)) < 0.05);
      }
    }
  }
  const IngestResult again = ingest_returns(path, ZeroPolicy::ReplaceNormal, 0.01, 7);
  CHECK(again.panel.values() == got.panel.values());
  const IngestResult other = ingest_returns(path, ZeroPolicy::ReplaceNormal, 0.01, 8);
  CHECK(other.panel(1, 1) != got.panel(1, 1));

  SUBCASE("reject policy names the first zero position") {
    CHECK_THROWS_WITH_AS(ingest_returns(path, ZeroPolicy::Reject),
                         doctest::Contains("time point 2, node 2"), ValidationError);
  }
  SUBCASE("zero-free files pass through byte for byte") {
    Eigen::MatrixXd clean = values;
    clean(1, 1) = 0.123;
    clean(2, 3) = -0.321;
    const std::string clean_path = (dir / "clean.csv").string();
    write_panel_csv(Panel(clean, PanelKind::Returns), clean_path);
    const IngestResult r = ingest_returns(clean_path);
    CHECK(r.replaced == 0);
    const std::string copy_path = (dir / "copy.csv").string();
    write_panel_csv(r.panel, copy_path);
    CHECK(slurp(copy_path) == slurp(clean_path));
  }
  SUBCASE("non-finite cells are refused with their position") {
    std::ofstream out(dir / "bad.csv");
    out << "node_1,node_2\n0.1,0.2\nnan,0.4\n";
    out.close();
    CHECK_THROWS_WITH_AS(ingest_returns((dir / "bad.csv").string()),
                         doctest::Contains("time point 2, node 1"), ValidationError);
  }
  SUBCASE("bad sd is refused") {
    CHECK_THROWS_AS(ingest_returns(path, ZeroPolicy::ReplaceNormal, 0.0), ValidationError);
  }
}

TEST_CASE("estimation results serialize with null entries for missing errors") {
  EstimationResult r;
  r.params.alpha = 0.4;
  r.params.theta = 0.2;
  r.theta_temporal = 0.2;
  r.std_errors = Eigen::VectorXd::Constant(6, std::numeric_limits<double>::quiet_NaN());
  r.std_errors[0] = 0.11;
  r.se_ok = false;
  r.loglik = -321.5;
  r.aic = 655.0;
  r.bic = 660.0;
  r.converged = true;
  r.n_inversions = 42;
  r.burn_dropped = 5;
  StartRecord rec;
  rec.params = Eigen::VectorXd::Zero(6);
  rec.nll_screen = 500.0;
  rec.nll_final = 400.0;
  rec.stage = 2;
  r.trace.push_back(rec);

  const nlohmann::json j = estimation_to_json(r);
  CHECK(j["params"]["alpha"].get<double>() == 0.4);
  CHECK(j["std_errors"].size() == 6);
  CHECK(j["std_errors"][0].get<double>() == 0.11);
  CHECK(j["std_errors"][3].is_null());
  CHECK(j["parameter_order"].size() == 6);
  CHECK(j["parameter_order"][5].get<std::string>() == "theta");
  CHECK(j["trace"].size() == 1);
  CHECK(j["trace"][0]["stage"].get<int>() == 2);
  CHECK_FALSE(j["se_ok"].get<bool>());
  // round-trippable shortest-decimal text, parseable as-is
  const nlohmann::json re = nlohmann::json::parse(j.dump(2));
  CHECK(re["loglik"].get<double>() == -321.5);
}

TEST_CASE("pipeline run emits the documented artifact set") {
  const fs::path dir = fresh_dir("run_artifacts");
  const std::string returns_path = returns_with_zeros(dir);
  const std::string run_dir = (dir / "runA").string();
  const std::string config_path = (dir / "config.json").string();
  write_json_file(demo_config(returns_path, run_dir), config_path);

  const PipelineResult res = pipeline_run(config_path);
  CHECK(res.run_dir == run_dir);
  CHECK(res.zero_replacements == 2);
  CHECK((res.best_network == "queen-rook" || res.best_network == "knn3"));

  for (const std::string& rel : res.artifacts) {
    CHECK(fs::exists(fs::path(run_dir) / rel));
  }
  for (const char* name : {"queen-rook", "knn3"}) {
    for (const char* file : {"w1.csv", "w2.csv", "meanfit.json", "residuals.csv",
                             "estimate.json", "innovations.csv", "diagnostics.json",
                             "lb_pvalues.csv", "moran_pvalues.csv"}) {
      CHECK(fs::exists(fs::path(run_dir) / name / file));
    }
  }

  const nlohmann::json manifest = read_json_file(res.manifest_path);
  CHECK(manifest["tool"].get<std::string>() == "spegarch");
  CHECK(manifest["version"].get<std::string>() == kVersion);
  CHECK(manifest["config_hash"].get<std::string>() ==
        "fnv1a:" + hex64(hash_file(config_path)));
  CHECK(manifest["input_hash"].get<std::string>() ==
        "fnv1a:" + hex64(hash_file(returns_path)));
  CHECK(manifest["zero_replacements"].get<int>() == 2);
  CHECK(manifest["networks"].size() == 2);
  CHECK_FALSE(manifest["config"].contains("out_dir"));
  CHECK(manifest["config"]["fit"]["threads"].get<int>() == 0);
  CHECK_FALSE(manifest.contains("total_seconds"));

  // comparison table: one row per network, exactly one best flag per column
  std::ifstream cmp(fs::path(run_dir) / "comparison.csv");
  std::string line;
  std::getline(cmp, line);
  CHECK(line == "network,loglik,aic,bic,best_aic,best_bic");
  int rows = 0;
  int best_aic_flags = 0;
  while (std::getline(cmp, line)) {
    if (line.empty()) continue;
    ++rows;
    if (line.substr(line.size() - 3, 1) == "1") ++best_aic_flags;
  }
  CHECK(rows == 2);
  CHECK(best_aic_flags == 1);

  const nlohmann::json est =
      read_json_file((fs::path(run_dir) / res.best_network / "estimate.json").string());
  CHECK(std::isfinite(est["aic"].get<double>()));
  CHECK(est["burn_dropped"].get<int>() == 5);

  // ingested panel: zeros gone, everything else untouched
  const Panel ing = read_panel_csv((fs::path(run_dir) / "ingested.csv").string(),
                                   PanelKind::Returns);
  CHECK(ing.n() == 9);
  CHECK(ing.t_len() == 90);
  CHECK(ing(2, 10) != 0.0);
  CHECK(std::abs(ing(2, 10)) < 0.05);

  // innovations panel drops the burn-in prefix
  const Panel innov = read_panel_csv(
      (fs::path(run_dir) / res.best_network / "innovations.csv").string(),
      PanelKind::Innovations);
  CHECK(innov.t_len() == 89 - 5);

  const nlohmann::json diag = read_json_file(
      (fs::path(run_dir) / res.best_network / "diagnostics.json").string());
  CHECK(diag["max_lag"].get<int>() == 6);
  CHECK(diag["frac_lb_raw"].get<double>() >= 0.0);
  CHECK(diag["frac_lb_raw"].get<double>() <= 1.0);
  CHECK(diag["moran_raw"].size() == 84);
}

TEST_CASE("pipeline reruns are byte identical") {
  const fs::path dir = fresh_dir("run_repeat");
  const std::string returns_path = returns_with_zeros(dir);
  const std::string config_path = (dir / "config.json").string();
  write_json_file(demo_config(returns_path, (dir / "runA").string()), config_path);

  const PipelineResult a = pipeline_run(config_path);
  const PipelineResult b = pipeline_run(config_path, (dir / "runB").string());
  CHECK(slurp(a.manifest_path) == slurp(b.manifest_path));
  REQUIRE(a.artifacts == b.artifacts);
  for (const std::string& rel : a.artifacts) {
    CAPTURE(rel);
    CHECK(slurp((fs::path(a.run_dir) / rel).string()) ==
          slurp((fs::path(b.run_dir) / rel).string()));
  }
}

TEST_CASE("pipeline validates references before writing") {
  const fs::path dir = fresh_dir("run_validate");
  const std::string run_dir = (dir / "never").string();

  SUBCASE("missing returns file") {
    const std::string config_path = (dir / "missing.json").string();
    write_json_file(demo_config((dir / "absent.csv").string(), run_dir), config_path);
    CHECK_THROWS_WITH_AS(pipeline_run(config_path), doctest::Contains("absent.csv"),
                         IoError);
    CHECK_FALSE(fs::exists(run_dir));
  }
  SUBCASE("missing weight file") {
    nlohmann::json cfg = demo_config(returns_with_zeros(dir), run_dir);
    cfg["networks"][0]["w1"] = {{"type", "file"}, {"path", (dir / "no_w.csv").string()}};
    const std::string config_path = (dir / "missing_w.json").string();
    write_json_file(cfg, config_path);
    CHECK_THROWS_WITH_AS(pipeline_run(config_path), doctest::Contains("no_w.csv"), IoError);
    CHECK_FALSE(fs::exists(run_dir));
  }
  SUBCASE("config typos fail before anything runs") {
    nlohmann::json cfg = demo_config(returns_with_zeros(dir), run_dir);
    cfg["zero_policy"] = "replcae";
    const std::string config_path = (dir / "typo.json").string();
    write_json_file(cfg, config_path);
    CHECK_THROWS_WITH_AS(pipeline_run(config_path), doctest::Contains("replcae"),
                         ValidationError);
    CHECK_FALSE(fs::exists(run_dir));
  }
  SUBCASE("duplicate network names are refused") {
    nlohmann::json cfg = demo_config(returns_with_zeros(dir), run_dir);
    cfg["networks"][1]["name"] = "queen-rook";
    const std::string config_path = (dir / "dup.json").string();
    write_json_file(cfg, config_path);
    CHECK_THROWS_WITH_AS(pipeline_run(config_path), doctest::Contains("queen-rook"),
                         ValidationError);
  }
  SUBCASE("empty network list is refused") {
    nlohmann::json cfg = demo_config(returns_with_zeros(dir), run_dir);
    cfg["networks"] = nlohmann::json::array();
    const std::string config_path = (dir / "empty.json").string();
    write_json_file(cfg, config_path);
    CHECK_THROWS_AS(pipeline_run(config_path), ValidationError);
  }
}

TEST_CASE("command line drives the full workflow") {
  const char* cli_env = std::getenv("SPEGARCH_CLI");
  if (cli_env == nullptr || !fs::exists(cli_env)) {
    MESSAGE("SPEGARCH_CLI not set; command line checks skipped");
    return;
  }
  const std::string cli = cli_env;
  const fs::path dir = fresh_dir("cli");
  const auto at = [&dir](const char* name) { return (dir / name).string(); };

  CHECK(run_cli(cli, "--version") == 0);
  CHECK(run_cli(cli, "network grid --rows 3 --cols 3 --contiguity queen --out " +
                         at("w1.csv")) == 0);
  CHECK(run_cli(cli, "network grid --rows 3 --cols 3 --contiguity rook --out " +
                         at("w2.csv")) == 0);
  CHECK(run_cli(cli, "simulate --w1 " + at("w1.csv") + " --w2 " + at("w2.csv") +
                         " --alpha 0.5 --rho0 0.3 --rho1 0.3 --lambda0 0.2 --lambda1 0.3"
                         " --theta 0.4 --t-len 90 --seed 3 --out " +
                         at("y.csv")) == 0);
  const std::string y_bytes = slurp(at("y.csv"));

  CHECK(run_cli(cli, "invert --y " + at("y.csv") + " --w1 " + at("w1.csv") + " --w2 " +
                         at("w2.csv") +
                         " --alpha 0.5 --rho0 0.3 --rho1 0.3 --lambda0 0.2 --lambda1 0.3"
                         " --theta 0.4 --out " +
                         at("eps.csv") + " --diag-out " + at("inv.json")) == 0);
  CHECK(read_panel_csv(at("eps.csv"), PanelKind::Innovations).t_len() == 90);

  CHECK(run_cli(cli, "estimate --y " + at("y.csv") + " --w1 " + at("w1.csv") + " --w2 " +
                         at("w2.csv") +
                         " --n-starts 3 --n-local 1 --n-polish 1 --no-std-errors --out " +
                         at("est.json")) == 0);
  const nlohmann::json est = read_json_file(at("est.json"));
  CHECK(est.contains("converged"));
  CHECK(std::isfinite(est["loglik"].get<double>()));

  CHECK(run_cli(cli, "meanfilter --y " + at("y.csv") + " --w1 " + at("w1.csv") + " --w2 " +
                         at("w2.csv") + " --out " + at("mf.json") + " --residuals-out " +
                         at("res.csv")) == 0);
  CHECK(run_cli(cli, "diagnose --residuals " + at("res.csv") + " --w " + at("w1.csv") +
                         " --max-lag 6 --out " + at("dg.json") + " --lb-out " +
                         at("lb.csv") + " --moran-out " + at("mo.csv")) == 0);
  CHECK(read_json_file(at("dg.json")).contains("frac_moran_squared"));

  // config + flag override: the config's t_len loses to the flag
  write_json_file({{"w1", at("w1.csv")},
                   {"w2", at("w2.csv")},
                   {"params", {{"alpha", 0.5}, {"rho0", 0.3}, {"rho1", 0.3},
                               {"lambda0", 0.2}, {"lambda1", 0.3}, {"theta", 0.4}}},
                   {"t_len", 40},
                   {"seed", 3},
                   {"out", at("y_cfg.csv")}},
                  at("sim.json"));
  CHECK(run_cli(cli, "simulate --config " + at("sim.json") + " --t-len 90") == 0);
  CHECK(read_panel_csv(at("y_cfg.csv"), PanelKind::Returns).t_len() == 90);

  write_json_file({{"params", {{"alpha", 0.5}, {"rho0", 0.3}, {"rho1", 0.3},
                               {"lambda0", 0.2}, {"lambda1", 0.3}, {"theta", 0.4}}},
                   {"rows", 3},
                   {"cols", 3},
                   {"t_len", 50},
                   {"replications", 2},
                   {"seed", 5},
                   {"fit", tiny_fit_json()}},
                  at("mc.json"));
  CHECK(run_cli(cli, "mc --config " + at("mc.json") + " --out-dir " + at("mcrun")) == 0);
  CHECK(fs::exists(dir / "mcrun" / "aggregate.csv"));
  CHECK(fs::exists(dir / "mcrun" / "estimates.csv"));
  CHECK(fs::exists(dir / "mcrun" / "summary.json"));

  write_json_file(demo_config(at("y.csv"), at("plrun")), at("pl.json"));
  CHECK(run_cli(cli, "pipeline --config " + at("pl.json")) == 0);
  CHECK(fs::exists(dir / "plrun" / "manifest.json"));

  // inputs are never mutated
  CHECK(slurp(at("y.csv")) == y_bytes);

  // exit codes: validation 2, numerical 3, io 4
  CHECK(run_cli(cli, "estimate --y " + at("y.csv") + " --w1 " + at("w1.csv") + " --w2 " +
                         at("w2.csv") + " --burn -1 --out " + at("bad.json")) == 2);
  CHECK(run_cli(cli, "simulate --w1 " + at("w1.csv") + " --w2 " + at("w2.csv") +
                         " --lambda0 0.6 --lambda1 0.5 --t-len 10 --out " +
                         at("bad.csv")) == 3);
  CHECK(run_cli(cli, "estimate --y " + at("gone.csv") + " --w1 " + at("w1.csv") +
                         " --w2 " + at("w2.csv") + " --out " + at("bad.json")) == 4);
  CHECK(run_cli(cli, "no-such-command") == 2);
  CHECK(run_cli(cli, "estimate --frobnicate") == 2);
}

}  // TEST_SUITE
