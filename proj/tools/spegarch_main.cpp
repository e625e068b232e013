#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "spegarch/csv.hpp"
#include "spegarch/diagnostics.hpp"
#include "spegarch/errors.hpp"
#include "spegarch/inversion.hpp"
#include "spegarch/json_io.hpp"
#include "spegarch/likelihood.hpp"
#include "spegarch/mc.hpp"
#include "spegarch/meanmodel.hpp"
#include "spegarch/moments.hpp"
#include "spegarch/networks.hpp"
#include "spegarch/pipeline.hpp"
#include "spegarch/process.hpp"
#include "spegarch/rng.hpp"

namespace {

using namespace spegarch;
namespace fs = std::filesystem;

// Merges a JSON config under the rule "flags override config fields": a value
// from the config is applied only when the matching flag was not passed on
// the command line. Consumed keys are tracked so typos in the config fail.
struct Merge {
  CLI::App* cmd;
  std::optional<JsonObjectReader> reader;

  Merge(CLI::App* c, const std::string& config_path, const char* what) : cmd(c) {
    if (!config_path.empty()) reader.emplace(read_json_file(config_path), what);
  }

  void num(const char* flag, const char* key, double& v) {
    if (!reader) return;
    const double got = reader->number(key, v);
    if (cmd->count(flag) == 0) v = got;
  }
  void integer(const char* flag, const char* key, int& v) {
    if (!reader) return;
    const int got = reader->integer(key, v);
    if (cmd->count(flag) == 0) v = got;
  }
  void u64(const char* flag, const char* key, std::uint64_t& v) {
    if (!reader) return;
    const std::uint64_t got = reader->unsigned64(key, v);
    if (cmd->count(flag) == 0) v = got;
  }
  void str(const char* flag, const char* key, std::string& v) {
    if (!reader) return;
    const std::string got = reader->text(key, v);
    if (cmd->count(flag) == 0) v = got;
  }
  nlohmann::json child(const char* key) {
    return reader ? reader->child(key) : nlohmann::json::object();
  }
  void finish() {
    if (reader) reader->finish();
  }
};

ModelParams merge_params(Merge& m, const ModelParams& flags) {
  ModelParams p = flags;
  if (!m.reader) return p;
  const ModelParams got =
      params_from_json(m.child("params"), flags, m.reader->context() + std::string(".params"));
  struct Field {
    const char* flag;
    double ModelParams::* member;
  };
  constexpr Field kFields[] = {
      {"--alpha", &ModelParams::alpha},     {"--rho0", &ModelParams::rho0},
      {"--rho1", &ModelParams::rho1},       {"--lambda0", &ModelParams::lambda0},
      {"--lambda1", &ModelParams::lambda1}, {"--theta", &ModelParams::theta},
      {"--xi", &ModelParams::xi}};
  for (const auto& f : kFields) {
    if (m.cmd->count(f.flag) == 0) p.*(f.member) = got.*(f.member);
  }
  return p;
}

void add_param_flags(CLI::App* cmd, ModelParams& p) {
  cmd->add_option("--alpha", p.alpha, "volatility level");
  cmd->add_option("--rho0", p.rho0, "contemporaneous spatial news impact");
  cmd->add_option("--rho1", p.rho1, "own lagged news impact");
  cmd->add_option("--lambda0", p.lambda0, "contemporaneous volatility spillover");
  cmd->add_option("--lambda1", p.lambda1, "own volatility persistence");
  cmd->add_option("--theta", p.theta, "leverage");
  cmd->add_option("--xi", p.xi, "magnitude loading (fixed to 1 in estimation)");
}

const std::string& need(const std::string& v, const char* flag, const char* key) {
  if (v.empty()) {
    throw ValidationError(std::string("missing ") + flag + " (or config field '" + key + "')");
  }
  return v;
}

InitialConditions scaled_initial(int n, double y0, double eps0) {
  InitialConditions init = default_initial(n);
  init.y0.setConstant(y0);
  init.eps0.setConstant(eps0);
  validate_initial(init, n);
  return init;
}

void write_timings(const fs::path& dir, double total,
                   const std::vector<double>& rep_seconds) {
  nlohmann::json t = {{"total_seconds", total}};
  if (!rep_seconds.empty()) t["replication_seconds"] = rep_seconds;
  write_json_file(t, (dir / "timings.json").string());
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string config, w1, w2, out, eps_out, h_out;
  ModelParams params;
  int t_len = 0;
  int burn_in = 50;
  std::uint64_t seed = 1;
  double y0 = 1e-4;
  double eps0 = 1e-4;
};

int run_simulate(CLI::App* cmd, SimulateArgs& a) {
  Merge m(cmd, a.config, "simulate config");
  m.str("--w1", "w1", a.w1);
  m.str("--w2", "w2", a.w2);
  m.str("--out", "out", a.out);
  m.str("--eps-out", "eps_out", a.eps_out);
  m.str("--h-out", "h_out", a.h_out);
  m.integer("--t-len", "t_len", a.t_len);
  m.integer("--burn-in", "burn_in", a.burn_in);
  m.u64("--seed", "seed", a.seed);
  m.num("--y0", "y0", a.y0);
  m.num("--eps0", "eps0", a.eps0);
  a.params = merge_params(m, a.params);
  m.finish();

  if (a.t_len < 1) throw ValidationError("t_len must be positive");
  const std::string out_path = need(a.out, "--out", "out");
  const WeightMatrix w1 = read_weights_csv(need(a.w1, "--w1", "w1"));
  const WeightMatrix w2 = read_weights_csv(need(a.w2, "--w2", "w2"));
  const InitialConditions init = scaled_initial(w1.n(), a.y0, a.eps0);
  const SimulationResult sim =
      simulate(a.params, w1, w2, a.t_len, a.burn_in, init, a.seed);
  write_panel_csv(sim.y, out_path);
  if (!a.eps_out.empty()) write_panel_csv(sim.eps, a.eps_out);
  if (!a.h_out.empty()) write_panel_csv(sim.h, a.h_out);

  const StationarityReport st = check_stationarity(a.params, w2);
  std::cout << "simulated " << sim.y.n() << " nodes x " << sim.y.t_len()
            << " time points (burn-in " << a.burn_in << ", seed " << a.seed << ") -> "
            << a.out << "\n"
            << "stationarity: rho_A " << format_double(st.rho_spec_A) << ", rho_B "
            << format_double(st.rho_spec_B) << "\n";
  return 0;
}

// ------------------------------------------------------------------ invert

struct InvertArgs {
  std::string config, y, w1, w2, out, diag_out;
  ModelParams params;
  double theta_temporal = std::numeric_limits<double>::quiet_NaN();
  double y0 = 1e-4;
  double eps0 = 1e-4;
  double tol = 1e-10;
  int max_iter = 100;
};

int run_invert(CLI::App* cmd, InvertArgs& a) {
  Merge m(cmd, a.config, "invert config");
  m.str("--y", "y", a.y);
  m.str("--w1", "w1", a.w1);
  m.str("--w2", "w2", a.w2);
  m.str("--out", "out", a.out);
  m.str("--diag-out", "diag_out", a.diag_out);
  m.num("--theta-temporal", "theta_temporal", a.theta_temporal);
  m.num("--y0", "y0", a.y0);
  m.num("--eps0", "eps0", a.eps0);
  m.num("--tol", "tol", a.tol);
  m.integer("--max-iter", "max_iter", a.max_iter);
  a.params = merge_params(m, a.params);
  m.finish();

  const std::string out_path = need(a.out, "--out", "out");
  const Panel y = read_panel_csv(need(a.y, "--y", "y"), PanelKind::Returns);
  const WeightMatrix w1 = read_weights_csv(need(a.w1, "--w1", "w1"));
  const WeightMatrix w2 = read_weights_csv(need(a.w2, "--w2", "w2"));
  const InitialConditions init = scaled_initial(y.n(), a.y0, a.eps0);
  NewtonOptions opts;
  opts.tol = a.tol;
  opts.max_iter = a.max_iter;

  const double tt = std::isnan(a.theta_temporal) ? a.params.theta : a.theta_temporal;
  const Dynamics dyn(a.params, LeverageSpec{a.params.theta, tt, a.params.xi}, w1, w2);
  const InversionResult inv = invert_panel(y, dyn, init, opts);
  write_panel_csv(inv.eps, out_path);
  if (!a.diag_out.empty()) {
    auto iters = nlohmann::json::array();
    for (Eigen::Index t = 0; t < inv.diag.iterations.size(); ++t) {
      iters.push_back(inv.diag.iterations[t]);
    }
    write_json_file({{"iterations", iters},
                     {"residual_norms", vector_to_json(inv.diag.residual_norms)},
                     {"jacobian_dets", vector_to_json(inv.diag.jacobian_dets)}},
                    a.diag_out);
  }
  std::cout << "recovered innovations for " << y.n() << " nodes x " << y.t_len()
            << " time points -> " << a.out << "\n"
            << "newton iterations max " << inv.diag.iterations.maxCoeff()
            << ", smallest |jacobian det| "
            << format_double(inv.diag.jacobian_dets.cwiseAbs().minCoeff()) << "\n";
  return 0;
}

// ---------------------------------------------------------------- estimate

struct EstimateArgs {
  std::string config, y, w1, w2, out;
  double y0 = 1e-4;
  double eps0 = 1e-4;
  FitOptions fit;
  bool two_theta = false;
  bool no_std_errors = false;
};

int run_estimate(CLI::App* cmd, EstimateArgs& a, int threads) {
  Merge m(cmd, a.config, "estimate config");
  m.str("--y", "y", a.y);
  m.str("--w1", "w1", a.w1);
  m.str("--w2", "w2", a.w2);
  m.str("--out", "out", a.out);
  m.num("--y0", "y0", a.y0);
  m.num("--eps0", "eps0", a.eps0);
  FitOptions opts = fit_options_from_json(m.child("fit"), FitOptions{}, "estimate config.fit");
  m.finish();
  if (cmd->count("--n-starts")) opts.n_starts = a.fit.n_starts;
  if (cmd->count("--n-local")) opts.n_local = a.fit.n_local;
  if (cmd->count("--n-polish")) opts.n_polish = a.fit.n_polish;
  if (cmd->count("--seed")) opts.seed = a.fit.seed;
  if (cmd->count("--burn")) opts.burn = a.fit.burn;
  if (cmd->count("--two-theta")) opts.two_theta = true;
  if (cmd->count("--no-std-errors")) opts.std_errors = false;
  if (threads > 0) opts.threads = threads;

  const std::string out_path = need(a.out, "--out", "out");
  const Panel y = read_panel_csv(need(a.y, "--y", "y"), PanelKind::Returns);
  const WeightMatrix w1 = read_weights_csv(need(a.w1, "--w1", "w1"));
  const WeightMatrix w2 = read_weights_csv(need(a.w2, "--w2", "w2"));
  const InitialConditions init = scaled_initial(y.n(), a.y0, a.eps0);
  const EstimationResult est = fit_qmle(y, w1, w2, init, opts);
  write_json_file(estimation_to_json(est), out_path);

  const Eigen::VectorXd v = opts.two_theta
                                ? canonical_vector(est.params, est.theta_temporal)
                                : canonical_vector(est.params);
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const char* name = i < 6 ? kParamNames[static_cast<std::size_t>(i)] : "theta_temporal";
    std::cout << name << ' ' << format_double(v[i]);
    if (est.se_ok && std::isfinite(est.std_errors[i])) {
      std::cout << " (se " << format_double(est.std_errors[i]) << ")";
    }
    std::cout << '\n';
  }
  std::cout << "loglik " << format_double(est.loglik) << ", aic " << format_double(est.aic)
            << ", bic " << format_double(est.bic) << "\n"
            << (est.converged ? "converged" : "not converged")
            << (est.boundary ? ", near a constraint boundary" : "") << " -> " << a.out << "\n";
  return 0;
}

// ----------------------------------------------------------------- moments

struct MomentsArgs {
  std::string config, w1, w2, out;
  ModelParams params;
  int node = 0;   // 1-based, 0 means none
  int node2 = 0;  // 1-based partner for the cross moment
};

int run_moments(CLI::App* cmd, MomentsArgs& a) {
  Merge m(cmd, a.config, "moments config");
  m.str("--w1", "w1", a.w1);
  m.str("--w2", "w2", a.w2);
  m.str("--out", "out", a.out);
  m.integer("--node", "node", a.node);
  m.integer("--node2", "node2", a.node2);
  a.params = merge_params(m, a.params);
  m.finish();

  const WeightMatrix w1 = read_weights_csv(need(a.w1, "--w1", "w1"));
  const WeightMatrix w2 = read_weights_csv(need(a.w2, "--w2", "w2"));
  const StationarityReport st = check_stationarity(a.params, w2);
  nlohmann::json doc = {{"stationarity", stationarity_to_json(st)}};

  if (!st.strict_ok) {
    doc["nu"] = nullptr;
    doc["note"] = "parameters are not strictly stationary; stationary moments do not exist";
  } else {
    const NuMoments nu = nu_moments(a.params, w1, w2);
    doc["nu"] = {{"mean", vector_to_json(nu.mean)},
                 {"cov0", matrix_to_json(nu.cov0)},
                 {"cov1", matrix_to_json(nu.cov1)}};
    if (a.node != 0) {
      if (a.node < 1 || a.node > w1.n()) {
        throw ValidationError("--node must lie in 1.." + std::to_string(w1.n()));
      }
      const int i = a.node - 1;
      const QuadMoment first = general_moments_quadrature(a.params, w1, w2, i,
                                                          MomentOrder::First);
      const QuadMoment second = general_moments_quadrature(a.params, w1, w2, i,
                                                           MomentOrder::Second);
      nlohmann::json node_doc = {{"node", a.node},
                                 {"mean", first.value},
                                 {"second_moment", second.value},
                                 {"quadrature_factors", second.trunc.factors}};
      if (a.params.xi == 0.0) {
        const int j = a.node2 != 0 ? a.node2 - 1 : i;
        if (j < 0 || j >= w1.n()) {
          throw ValidationError("--node2 must lie in 1.." + std::to_string(w1.n()));
        }
        const ClosedMoments cm = closed_moments_theta_only(a.params, w1, w2, i, j);
        node_doc["closed"] = {{"mean", cm.mean_i},
                              {"second_moment", cm.second_i},
                              {"cross_node", a.node2 != 0 ? a.node2 : a.node},
                              {"cross_moment", cm.cross_ij}};
      }
      doc["node_moments"] = node_doc;
    }
  }

  if (a.out.empty()) {
    std::cout << doc.dump(2) << '\n';
  } else {
    write_json_file(doc, a.out);
    std::cout << "moments -> " << a.out << "\n";
  }
  std::cout << "stationarity: " << (st.strict_ok ? "strict" : "violated") << " (rho_A "
            << format_double(st.rho_spec_A) << ", rho_B " << format_double(st.rho_spec_B)
            << ")\n";
  return 0;
}

// -------------------------------------------------------------- meanfilter

struct MeanFilterArgs {
  std::string config, y, w1, w2, out, residuals_out;
};

int run_meanfilter(CLI::App* cmd, MeanFilterArgs& a) {
  Merge m(cmd, a.config, "meanfilter config");
  m.str("--y", "y", a.y);
  m.str("--w1", "w1", a.w1);
  m.str("--w2", "w2", a.w2);
  m.str("--out", "out", a.out);
  m.str("--residuals-out", "residuals_out", a.residuals_out);
  m.finish();

  const Panel y = read_panel_csv(need(a.y, "--y", "y"), PanelKind::Returns);
  const WeightMatrix w1 = read_weights_csv(need(a.w1, "--w1", "w1"));
  const WeightMatrix w2 = read_weights_csv(need(a.w2, "--w2", "w2"));
  const SdpdFit fit = fit_sdpd(y, w1, w2);
  if (!a.out.empty()) write_json_file(sdpd_to_json(fit), a.out);
  if (!a.residuals_out.empty()) write_panel_csv(fit.residuals, a.residuals_out);
  std::cout << "rho " << format_double(fit.rho) << ", gamma " << format_double(fit.gamma)
            << ", lambda " << format_double(fit.lambda) << ", profile loglik "
            << format_double(fit.profile_loglik) << "\n";
  if (!a.residuals_out.empty()) {
    std::cout << "residuals (" << fit.residuals.n() << " x " << fit.residuals.t_len()
              << ") -> " << a.residuals_out << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------- diagnose

struct DiagnoseArgs {
  std::string config, residuals, w, out, lb_out, moran_out;
  int max_lag = 10;
  double alpha = 0.05;
};

int run_diagnose(CLI::App* cmd, DiagnoseArgs& a) {
  Merge m(cmd, a.config, "diagnose config");
  m.str("--residuals", "residuals", a.residuals);
  m.str("--w", "w", a.w);
  m.str("--out", "out", a.out);
  m.str("--lb-out", "lb_out", a.lb_out);
  m.str("--moran-out", "moran_out", a.moran_out);
  m.integer("--max-lag", "max_lag", a.max_lag);
  m.num("--alpha", "alpha", a.alpha);
  m.finish();

  const Panel res =
      read_panel_csv(need(a.residuals, "--residuals", "residuals"), PanelKind::Residuals);
  const WeightMatrix w = read_weights_csv(need(a.w, "--w", "w"));
  const PanelDiagnostics diag = panel_diagnostics(res, w, a.max_lag, a.alpha);
  if (a.out.empty()) {
    std::cout << diagnostics_to_json(diag).dump(2) << '\n';
  } else {
    write_json_file(diagnostics_to_json(diag), a.out);
  }
  if (!a.lb_out.empty()) write_lb_csv(diag, a.lb_out);
  if (!a.moran_out.empty()) write_moran_csv(diag, a.moran_out);
  std::cout << "rejections at alpha " << format_double(a.alpha) << ": serial raw "
            << format_double(diag.frac_lb_raw) << ", serial squared "
            << format_double(diag.frac_lb_squared) << ", spatial raw "
            << format_double(diag.frac_moran_raw) << ", spatial squared "
            << format_double(diag.frac_moran_squared) << "\n";
  return 0;
}

// ----------------------------------------------------------------- network

struct NetworkGridArgs {
  int rows = 0;
  int cols = 0;
  std::string contiguity = "queen";
  bool raw = false;
  std::string out;
};

int run_network_grid(NetworkGridArgs& a) {
  if (a.rows < 1 || a.cols < 1) throw ValidationError("--rows and --cols must be positive");
  if (a.contiguity != "queen" && a.contiguity != "rook") {
    throw ValidationError("--contiguity must be 'queen' or 'rook'");
  }
  const Contiguity kind = a.contiguity == "queen" ? Contiguity::Queen : Contiguity::Rook;
  const WeightMatrix w = grid_contiguity(a.rows, a.cols, kind, !a.raw);
  write_weights_csv(w, need(a.out, "--out", "out"));
  std::cout << a.contiguity << " grid " << a.rows << " x " << a.cols << " ("
            << (a.raw ? "binary" : "row-standardized") << ") -> " << a.out << "\n";
  return 0;
}

struct NetworkKnnArgs {
  std::string panel;
  std::string metric = "euclidean";
  int k = 0;
  int ar_order = 2;
  std::string out;
};

int run_network_knn(NetworkKnnArgs& a) {
  const Panel y = read_panel_csv(need(a.panel, "--panel", "panel"), PanelKind::Returns);
  WeightSpec spec;
  spec.type = "knn";
  spec.k = a.k;
  spec.metric = a.metric;
  spec.ar_order = a.ar_order;
  if (a.k < 1) throw ValidationError("--k must be positive");
  if (a.metric != "euclidean" && a.metric != "correlation" && a.metric != "piccolo") {
    throw ValidationError("--metric must be 'euclidean', 'correlation', or 'piccolo'");
  }
  const WeightMatrix w = build_weights(spec, y);
  write_weights_csv(w, need(a.out, "--out", "out"));
  std::cout << a.k << "-nearest-neighbour graph (" << a.metric << ") on " << y.n()
            << " nodes -> " << a.out << "\n";
  return 0;
}

// ---------------------------------------------------------------------- mc

struct McArgs {
  std::string config;
  std::string out_dir = "mc_run";
  std::string study = "bias-rmse";
  int replications = 0;        // flag override
  std::uint64_t seed = 0;      // flag override
  std::vector<double> offsets;
};

int run_mc(CLI::App* cmd, McArgs& a, int threads) {
  if (a.study != "bias-rmse" && a.study != "invertibility") {
    throw ValidationError("--study must be 'bias-rmse' or 'invertibility'");
  }
  if (a.config.empty()) throw ValidationError("missing --config");
  const fs::path dir(a.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + a.out_dir + "': " + ec.message());

  if (a.study == "bias-rmse") {
    McConfig cfg = mc_config_from_json(read_json_file(a.config));
    if (cmd->count("--replications")) cfg.replications = a.replications;
    if (cmd->count("--seed")) cfg.seed = a.seed;
    if (threads > 0) cfg.threads = threads;
    const BiasRmseTable table = run_bias_rmse(cfg);
    write_aggregate_csv(table, (dir / "aggregate.csv").string());
    write_estimates_csv(table, (dir / "estimates.csv").string());
    McConfig recorded = cfg;
    recorded.threads = 0;
    recorded.fit.threads = 0;
    write_json_file({{"config", mc_config_to_json(recorded)}, {"table", bias_rmse_to_json(table)}},
                    (dir / "summary.json").string());
    write_timings(dir, table.wall_seconds, table.rep_seconds);
    std::cout << "bias/rmse study: " << table.replication_ids.size() << " of "
              << cfg.replications << " replications estimated (" << table.failures
              << " failed) in " << format_double(table.wall_seconds) << " s -> " << a.out_dir
              << "\n";
    for (const auto& row : table.rows) {
      std::cout << "  " << row.parameter << " bias " << format_double(row.bias) << ", rmse "
                << format_double(row.rmse) << "\n";
    }
    return 0;
  }

  // Invertibility study: per-time recovery error at the truth plus total
  // squared error surfaces over all parameter-pair perturbation grids.
  JsonObjectReader r(read_json_file(a.config), "invertibility config");
  ModelParams params = params_from_json(r.child("params"), ModelParams{},
                                        "invertibility config.params");
  const int rows = r.integer("rows", 4);
  const int cols = r.integer("cols", 4);
  const int t_len = r.integer("t_len", 50);
  int m = r.integer("replications", 50);
  std::uint64_t seed = r.unsigned64("seed", 1);
  int cfg_threads = r.integer("threads", 0);
  std::vector<double> offsets =
      r.number_array("offsets", {-0.1, -0.05, 0.0, 0.05, 0.1});
  r.finish();
  if (cmd->count("--replications")) m = a.replications;
  if (cmd->count("--seed")) seed = a.seed;
  if (cmd->count("--offsets")) offsets = a.offsets;
  if (threads > 0) cfg_threads = threads;

  const auto t0 = std::chrono::steady_clock::now();
  const InvertibilityStudy study =
      run_invertibility_study(params, rows, cols, t_len, offsets, m, seed, cfg_threads);
  const double total =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  write_maxd_csv(study.maxd, (dir / "maxd.csv").string());
  auto pair_names = nlohmann::json::array();
  for (std::size_t q = 0; q < study.pairs.size(); ++q) {
    const auto [pi, pj] = study.pairs[q];
    const std::string pa = kParamNames[static_cast<std::size_t>(pi)];
    const std::string pb = kParamNames[static_cast<std::size_t>(pj)];
    pair_names.push_back(pa + ":" + pb);
    std::ofstream out(dir / ("ssd_" + pa + "_" + pb + ".csv"));
    if (!out) throw IoError("cannot open ssd_" + pa + "_" + pb + ".csv for writing");
    out << "offset";
    for (double off : offsets) out << ',' << format_double(off);
    out << '\n';
    const Eigen::MatrixXd& grid = study.ssd[q];
    for (Eigen::Index i = 0; i < grid.rows(); ++i) {
      out << format_double(offsets[static_cast<std::size_t>(i)]);
      for (Eigen::Index j = 0; j < grid.cols(); ++j) {
        out << ',' << (std::isfinite(grid(i, j)) ? format_double(grid(i, j)) : "");
      }
      out << '\n';
    }
    if (!out) throw IoError("write of ssd_" + pa + "_" + pb + ".csv failed");
  }
  nlohmann::json offs = nlohmann::json::array();
  for (double off : offsets) offs.push_back(off);
  write_json_file({{"params", params_to_json(params)},
                   {"rows", rows},
                   {"cols", cols},
                   {"t_len", t_len},
                   {"replications", m},
                   {"seed", seed},
                   {"offsets", offs},
                   {"pairs", pair_names},
                   {"failures", study.failures}},
                  (dir / "summary.json").string());
  write_timings(dir, total, {});
  std::cout << "invertibility study: " << m << " replications, " << study.pairs.size()
            << " parameter pairs (" << study.failures << " failed inversions) in "
            << format_double(total) << " s -> " << a.out_dir << "\n"
            << "largest per-time recovery error "
            << format_double(study.maxd.maxCoeff()) << "\n";
  return 0;
}

// ---------------------------------------------------------------- pipeline

struct PipelineArgs {
  std::string config;
  std::string out_dir;
};

int run_pipeline(PipelineArgs& a, int threads) {
  if (a.config.empty()) throw ValidationError("missing --config");
  const PipelineResult res = pipeline_run(a.config, a.out_dir, threads);
  std::cout << "run complete -> " << res.run_dir << " (" << res.artifacts.size()
            << " artifacts)\n";
  if (res.zero_replacements > 0) {
    std::cout << "replaced " << res.zero_replacements << " zero returns\n";
  }
  std::cout << "smallest aic: " << res.best_network << "\n"
            << "manifest: " << res.manifest_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spatiotemporal exponential GARCH toolkit"};
  app.require_subcommand(1);
  app.fallthrough(true);
  app.set_version_flag("--version", kVersion);
  int threads = 0;
  app.add_option("--threads", threads,
                 "worker threads (0: ST_EGARCH_THREADS if set, else hardware)");

  SimulateArgs sim_args;
  CLI::App* sim = app.add_subcommand("simulate", "simulate the volatility process");
  sim->add_option("--config", sim_args.config, "JSON config; flags override its fields");
  sim->add_option("--w1", sim_args.w1, "interaction network CSV");
  sim->add_option("--w2", sim_args.w2, "volatility spillover network CSV");
  add_param_flags(sim, sim_args.params);
  sim->add_option("--t-len", sim_args.t_len, "time points to keep");
  sim->add_option("--burn-in", sim_args.burn_in, "time points to discard up front");
  sim->add_option("--seed", sim_args.seed, "rng seed");
  sim->add_option("--y0", sim_args.y0, "initial return level");
  sim->add_option("--eps0", sim_args.eps0, "initial innovation level");
  sim->add_option("--out", sim_args.out, "returns CSV to write");
  sim->add_option("--eps-out", sim_args.eps_out, "innovations CSV to write");
  sim->add_option("--h-out", sim_args.h_out, "variance CSV to write");

  InvertArgs inv_args;
  CLI::App* inv = app.add_subcommand("invert", "recover innovations from returns");
  inv->add_option("--config", inv_args.config, "JSON config; flags override its fields");
  inv->add_option("--y", inv_args.y, "returns CSV");
  inv->add_option("--w1", inv_args.w1, "interaction network CSV");
  inv->add_option("--w2", inv_args.w2, "volatility spillover network CSV");
  add_param_flags(inv, inv_args.params);
  inv->add_option("--theta-temporal", inv_args.theta_temporal,
                  "separate leverage for the lagged news term");
  inv->add_option("--y0", inv_args.y0, "initial return level");
  inv->add_option("--eps0", inv_args.eps0, "initial innovation level");
  inv->add_option("--tol", inv_args.tol, "newton residual tolerance");
  inv->add_option("--max-iter", inv_args.max_iter, "newton iteration cap");
  inv->add_option("--out", inv_args.out, "innovations CSV to write");
  inv->add_option("--diag-out", inv_args.diag_out, "solver diagnostics JSON to write");

  EstimateArgs est_args;
  CLI::App* est = app.add_subcommand("estimate", "fit the volatility model by qml");
  est->add_option("--config", est_args.config, "JSON config; flags override its fields");
  est->add_option("--y", est_args.y, "returns CSV");
  est->add_option("--w1", est_args.w1, "interaction network CSV");
  est->add_option("--w2", est_args.w2, "volatility spillover network CSV");
  est->add_option("--n-starts", est_args.fit.n_starts, "random starts screened");
  est->add_option("--n-local", est_args.fit.n_local, "starts refined by simplex");
  est->add_option("--n-polish", est_args.fit.n_polish, "candidates polished by quasi-newton");
  est->add_option("--seed", est_args.fit.seed, "start-drawing seed");
  est->add_option("--burn", est_args.fit.burn, "initial time points excluded from the sum");
  est->add_flag("--two-theta", est_args.two_theta,
                "separate leverage for contemporaneous and lagged news");
  est->add_flag("--no-std-errors", est_args.no_std_errors, "skip the hessian standard errors");
  est->add_option("--y0", est_args.y0, "initial return level");
  est->add_option("--eps0", est_args.eps0, "initial innovation level");
  est->add_option("--out", est_args.out, "estimation result JSON to write");

  MomentsArgs mom_args;
  CLI::App* mom = app.add_subcommand("moments", "stationarity check and stationary moments");
  mom->add_option("--config", mom_args.config, "JSON config; flags override its fields");
  mom->add_option("--w1", mom_args.w1, "interaction network CSV");
  mom->add_option("--w2", mom_args.w2, "volatility spillover network CSV");
  add_param_flags(mom, mom_args.params);
  mom->add_option("--node", mom_args.node, "1-based node for return moments");
  mom->add_option("--node2", mom_args.node2, "1-based partner node for the cross moment");
  mom->add_option("--out", mom_args.out, "JSON to write (stdout when omitted)");

  MeanFilterArgs mf_args;
  CLI::App* mf = app.add_subcommand("meanfilter", "fit the dynamic panel mean model");
  mf->add_option("--config", mf_args.config, "JSON config; flags override its fields");
  mf->add_option("--y", mf_args.y, "returns CSV");
  mf->add_option("--w1", mf_args.w1, "interaction network CSV");
  mf->add_option("--w2", mf_args.w2, "volatility spillover network CSV");
  mf->add_option("--out", mf_args.out, "fit summary JSON to write");
  mf->add_option("--residuals-out", mf_args.residuals_out, "residual panel CSV to write");

  DiagnoseArgs di_args;
  CLI::App* di = app.add_subcommand("diagnose", "serial and spatial residual tests");
  di->add_option("--config", di_args.config, "JSON config; flags override its fields");
  di->add_option("--residuals", di_args.residuals, "residual panel CSV");
  di->add_option("--w", di_args.w, "spatial weight CSV for the cross-section tests");
  di->add_option("--max-lag", di_args.max_lag, "serial test lag depth");
  di->add_option("--alpha", di_args.alpha, "significance level for the rejection fractions");
  di->add_option("--out", di_args.out, "JSON to write (stdout when omitted)");
  di->add_option("--lb-out", di_args.lb_out, "per-node serial p-value CSV");
  di->add_option("--moran-out", di_args.moran_out, "per-time spatial p-value CSV");

  CLI::App* net = app.add_subcommand("network", "build weight matrices");
  net->require_subcommand(1);
  NetworkGridArgs grid_args;
  CLI::App* net_grid = net->add_subcommand("grid", "lattice contiguity weights");
  net_grid->add_option("--rows", grid_args.rows, "lattice rows")->required();
  net_grid->add_option("--cols", grid_args.cols, "lattice columns")->required();
  net_grid->add_option("--contiguity", grid_args.contiguity, "'queen' or 'rook'");
  net_grid->add_flag("--raw", grid_args.raw, "keep binary weights (skip row standardization)");
  net_grid->add_option("--out", grid_args.out, "weight CSV to write")->required();
  NetworkKnnArgs knn_args;
  CLI::App* net_knn = net->add_subcommand("knn", "nearest-neighbour weights from a panel");
  net_knn->add_option("--panel", knn_args.panel, "panel CSV the distances are computed from")
      ->required();
  net_knn->add_option("--metric", knn_args.metric, "'euclidean', 'correlation', or 'piccolo'");
  net_knn->add_option("--k", knn_args.k, "neighbours per node")->required();
  net_knn->add_option("--ar-order", knn_args.ar_order, "lag depth of the piccolo metric");
  net_knn->add_option("--out", knn_args.out, "weight CSV to write")->required();

  McArgs mc_args;
  CLI::App* mc = app.add_subcommand("mc", "simulation studies: bias/rmse and invertibility");
  mc->add_option("--config", mc_args.config, "study config JSON")->required();
  mc->add_option("--out-dir", mc_args.out_dir, "directory for the study artifacts");
  mc->add_option("--study", mc_args.study, "'bias-rmse' (default) or 'invertibility'");
  mc->add_option("--replications", mc_args.replications, "override the replication count");
  mc->add_option("--seed", mc_args.seed, "override the simulation seed");
  mc->add_option("--offsets", mc_args.offsets,
                 "invertibility perturbation offsets (space separated)");

  PipelineArgs pl_args;
  CLI::App* pl = app.add_subcommand("pipeline", "full ingest-to-comparison run");
  pl->add_option("--config", pl_args.config, "pipeline config JSON")->required();
  pl->add_option("--out-dir", pl_args.out_dir, "override the configured run directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (sim->parsed()) return run_simulate(sim, sim_args);
    if (inv->parsed()) return run_invert(inv, inv_args);
    if (est->parsed()) return run_estimate(est, est_args, threads);
    if (mom->parsed()) return run_moments(mom, mom_args);
    if (mf->parsed()) return run_meanfilter(mf, mf_args);
    if (di->parsed()) return run_diagnose(di, di_args);
    if (net->parsed()) {
      if (net_grid->parsed()) return run_network_grid(grid_args);
      return run_network_knn(knn_args);
    }
    if (mc->parsed()) return run_mc(mc, mc_args, threads);
    if (pl->parsed()) return run_pipeline(pl_args, threads);
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
