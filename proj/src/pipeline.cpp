#include "spegarch/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <utility>

#include "spegarch/csv.hpp"
#include "spegarch/errors.hpp"
#include "spegarch/inversion.hpp"
#include "spegarch/json_io.hpp"
#include "spegarch/meanmodel.hpp"
#include "spegarch/networks.hpp"
#include "spegarch/rng.hpp"

namespace spegarch {

namespace fs = std::filesystem;

namespace {

// Stage failures keep their category (and exit code) but gain the stage name,
// so an aborted run says where it stopped; artifacts written so far stay put.
template <typename Fn>
auto staged(const std::string& name, Fn&& fn) {
  try {
    return fn();
  } catch (const ValidationError& e) {
    throw ValidationError("stage " + name + ": " + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError("stage " + name + ": " + e.what());
  } catch (const IoError& e) {
    throw IoError("stage " + name + ": " + e.what());
  }
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void require_name(const std::string& name) {
  if (name.empty()) throw ValidationError("network name must not be empty");
  for (char c : name) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '_' || c == '.' || c == '-';
    if (!ok) {
      throw ValidationError("network name '" + name +
                            "' may only use letters, digits, '_', '.', '-'");
    }
  }
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  return out;
}

void close_out(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw IoError("write to " + path + " failed");
}

}  // namespace

IngestResult ingest_returns(const std::string& path, ZeroPolicy policy, double sd,
                            std::uint64_t seed) {
  if (!std::isfinite(sd) || sd <= 0.0) {
    throw ValidationError("zero replacement sd must be positive");
  }
  Eigen::MatrixXd table = read_matrix_csv(path);  // row = time point, column = node
  for (Eigen::Index t = 0; t < table.rows(); ++t) {
    for (Eigen::Index i = 0; i < table.cols(); ++i) {
      if (!std::isfinite(table(t, i))) {
        throw ValidationError(path + ": non-finite value at time point " +
                              std::to_string(t + 1) + ", node " + std::to_string(i + 1));
      }
    }
  }
  RngStream rng(seed);
  int replaced = 0;
  for (Eigen::Index t = 0; t < table.rows(); ++t) {
    for (Eigen::Index i = 0; i < table.cols(); ++i) {
      if (table(t, i) != 0.0) continue;
      if (policy == ZeroPolicy::Reject) {
        throw ValidationError(path + ": zero return at time point " + std::to_string(t + 1) +
                              ", node " + std::to_string(i + 1) +
                              " rejected by the zero policy");
      }
      table(t, i) = sd * rng.normal();
      ++replaced;
    }
  }
  return {Panel(table.transpose(), PanelKind::Returns), replaced};
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t hash_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return fnv1a(ss.str());
}

WeightSpec weight_spec_from_json(const nlohmann::json& j, const std::string& context) {
  JsonObjectReader r(j, context);
  WeightSpec s;
  s.type = r.required_text("type");
  if (s.type == "grid") {
    s.rows = r.integer("rows", 0);
    s.cols = r.integer("cols", 0);
    if (s.rows < 1 || s.cols < 1) {
      throw ValidationError(context + ": grid needs positive 'rows' and 'cols'");
    }
    s.contiguity = r.text("contiguity", "queen");
    if (s.contiguity != "queen" && s.contiguity != "rook") {
      throw ValidationError(context + ": contiguity must be 'queen' or 'rook', got '" +
                            s.contiguity + "'");
    }
    s.standardize = r.boolean("standardize", true);
  } else if (s.type == "knn") {
    s.k = r.integer("k", 0);
    if (s.k < 1) throw ValidationError(context + ": knn needs a positive 'k'");
    s.metric = r.text("metric", "euclidean");
    if (s.metric != "euclidean" && s.metric != "correlation" && s.metric != "piccolo") {
      throw ValidationError(context +
                            ": metric must be 'euclidean', 'correlation', or 'piccolo', got '" +
                            s.metric + "'");
    }
    s.ar_order = r.integer("ar_order", 2);
    if (s.ar_order < 1) throw ValidationError(context + ": ar_order must be positive");
  } else if (s.type == "file") {
    s.path = r.required_text("path");
    s.standardize = r.boolean("standardize", false);
  } else {
    throw ValidationError(context + ": unknown weight type '" + s.type +
                          "' (expected 'grid', 'knn', or 'file')");
  }
  r.finish();
  return s;
}

nlohmann::json weight_spec_to_json(const WeightSpec& s) {
  if (s.type == "grid") {
    return {{"type", s.type},
            {"rows", s.rows},
            {"cols", s.cols},
            {"contiguity", s.contiguity},
            {"standardize", s.standardize}};
  }
  if (s.type == "knn") {
    return {{"type", s.type}, {"k", s.k}, {"metric", s.metric}, {"ar_order", s.ar_order}};
  }
  return {{"type", s.type}, {"path", s.path}, {"standardize", s.standardize}};
}

WeightMatrix build_weights(const WeightSpec& spec, const Panel& panel) {
  if (spec.type == "grid") {
    if (spec.rows * spec.cols != panel.n()) {
      throw ValidationError("grid " + std::to_string(spec.rows) + " x " +
                            std::to_string(spec.cols) + " does not match the panel's " +
                            std::to_string(panel.n()) + " nodes");
    }
    const Contiguity kind = spec.contiguity == "queen" ? Contiguity::Queen : Contiguity::Rook;
    return grid_contiguity(spec.rows, spec.cols, kind, spec.standardize);
  }
  if (spec.type == "knn") {
    DistanceMatrix d = spec.metric == "euclidean"     ? euclidean_distance(panel)
                       : spec.metric == "correlation" ? correlation_distance(panel)
                                                      : piccolo_distance(panel, spec.ar_order);
    return knn_weights(d, spec.k);
  }
  if (spec.type == "file") {
    WeightMatrix w = read_weights_csv(spec.path);
    if (w.n() != panel.n()) {
      throw ValidationError(spec.path + " has " + std::to_string(w.n()) +
                            " nodes, the panel has " + std::to_string(panel.n()));
    }
    return spec.standardize ? row_standardize(w) : w;
  }
  throw ValidationError("unknown weight type '" + spec.type + "'");
}

PipelineConfig pipeline_config_from_json(const nlohmann::json& j) {
  JsonObjectReader r(j, "pipeline config");
  PipelineConfig cfg;
  cfg.returns_csv = r.required_text("returns_csv");
  const std::string policy = r.text("zero_policy", "replace");
  if (policy == "replace") {
    cfg.zero_policy = ZeroPolicy::ReplaceNormal;
  } else if (policy == "reject") {
    cfg.zero_policy = ZeroPolicy::Reject;
  } else {
    throw ValidationError("pipeline config: zero_policy must be 'replace' or 'reject', got '" +
                          policy + "'");
  }
  cfg.zero_sd = r.number("zero_sd", cfg.zero_sd);
  cfg.zero_seed = r.unsigned64("zero_seed", cfg.zero_seed);
  cfg.out_dir = r.text("out_dir", cfg.out_dir);
  const nlohmann::json nets = r.object_array("networks");
  if (nets.empty()) {
    throw ValidationError("pipeline config: at least one network definition is required");
  }
  std::set<std::string> names;
  for (std::size_t i = 0; i < nets.size(); ++i) {
    const std::string context = "networks[" + std::to_string(i) + "]";
    JsonObjectReader nr(nets[i], context);
    NetworkSpec net;
    net.name = nr.required_text("name");
    require_name(net.name);
    if (!names.insert(net.name).second) {
      throw ValidationError("pipeline config: duplicate network name '" + net.name + "'");
    }
    net.w1 = weight_spec_from_json(nr.child("w1"), context + ".w1");
    net.w2 = weight_spec_from_json(nr.child("w2"), context + ".w2");
    nr.finish();
    cfg.networks.push_back(std::move(net));
  }
  cfg.fit = fit_options_from_json(r.child("fit"), cfg.fit, "pipeline config.fit");
  cfg.max_lag = r.integer("max_lag", cfg.max_lag);
  cfg.alpha = r.number("alpha", cfg.alpha);
  if (cfg.max_lag < 1) throw ValidationError("pipeline config: max_lag must be positive");
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) {
    throw ValidationError("pipeline config: alpha must lie strictly between 0 and 1");
  }
  r.finish();
  return cfg;
}

nlohmann::json pipeline_config_to_json(const PipelineConfig& cfg) {
  auto nets = nlohmann::json::array();
  for (const auto& net : cfg.networks) {
    nets.push_back({{"name", net.name},
                    {"w1", weight_spec_to_json(net.w1)},
                    {"w2", weight_spec_to_json(net.w2)}});
  }
  return {{"returns_csv", cfg.returns_csv},
          {"zero_policy", cfg.zero_policy == ZeroPolicy::ReplaceNormal ? "replace" : "reject"},
          {"zero_sd", cfg.zero_sd},
          {"zero_seed", cfg.zero_seed},
          {"out_dir", cfg.out_dir},
          {"networks", nets},
          {"fit", fit_options_to_json(cfg.fit)},
          {"max_lag", cfg.max_lag},
          {"alpha", cfg.alpha}};
}

PipelineResult pipeline_run(const std::string& config_path, const std::string& out_dir_override,
                            int threads_override) {
  const auto run_start = std::chrono::steady_clock::now();
  std::map<std::string, double> stage_seconds;

  PipelineConfig cfg = staged("config", [&] {
    return pipeline_config_from_json(read_json_file(config_path));
  });
  if (!out_dir_override.empty()) cfg.out_dir = out_dir_override;
  if (threads_override > 0) cfg.fit.threads = threads_override;
  if (cfg.out_dir.empty()) {
    throw ValidationError("stage config: output directory must not be empty");
  }

  staged("validate", [&] {
    if (!fs::exists(cfg.returns_csv)) {
      throw IoError("returns file '" + cfg.returns_csv + "' does not exist");
    }
    for (const auto& net : cfg.networks) {
      for (const WeightSpec* spec : {&net.w1, &net.w2}) {
        if (spec->type == "file" && !fs::exists(spec->path)) {
          throw IoError("weight file '" + spec->path + "' for network '" + net.name +
                        "' does not exist");
        }
      }
    }
  });

  const std::string config_hash = hex64(hash_file(config_path));
  const std::string input_hash = hex64(hash_file(cfg.returns_csv));

  const fs::path dir(cfg.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create run directory '" + cfg.out_dir + "': " + ec.message());

  std::vector<std::string> artifacts;
  const auto emit = [&artifacts](const std::string& rel) { artifacts.push_back(rel); };

  auto t0 = std::chrono::steady_clock::now();
  const IngestResult ing = staged("ingest", [&] {
    IngestResult r = ingest_returns(cfg.returns_csv, cfg.zero_policy, cfg.zero_sd, cfg.zero_seed);
    write_panel_csv(r.panel, (dir / "ingested.csv").string());
    return r;
  });
  emit("ingested.csv");
  stage_seconds["ingest"] = seconds_since(t0);

  const int n = ing.panel.n();
  std::vector<EstimationResult> fits;
  std::vector<std::string> names;
  fits.reserve(cfg.networks.size());
  for (const auto& net : cfg.networks) {
    const fs::path sub = dir / net.name;
    fs::create_directories(sub, ec);
    if (ec) throw IoError("cannot create '" + sub.string() + "': " + ec.message());

    t0 = std::chrono::steady_clock::now();
    const WeightMatrix w1 = staged("network " + net.name, [&] {
      WeightMatrix w = build_weights(net.w1, ing.panel);
      write_weights_csv(w, (sub / "w1.csv").string());
      return w;
    });
    const WeightMatrix w2 = staged("network " + net.name, [&] {
      WeightMatrix w = build_weights(net.w2, ing.panel);
      write_weights_csv(w, (sub / "w2.csv").string());
      return w;
    });
    emit(net.name + "/w1.csv");
    emit(net.name + "/w2.csv");
    stage_seconds["network " + net.name] = seconds_since(t0);

    t0 = std::chrono::steady_clock::now();
    const SdpdFit mean = staged("meanfilter " + net.name, [&] {
      SdpdFit f = fit_sdpd(ing.panel, w1, w2);
      write_json_file(sdpd_to_json(f), (sub / "meanfit.json").string());
      write_panel_csv(f.residuals, (sub / "residuals.csv").string());
      return f;
    });
    emit(net.name + "/meanfit.json");
    emit(net.name + "/residuals.csv");
    stage_seconds["meanfilter " + net.name] = seconds_since(t0);

    t0 = std::chrono::steady_clock::now();
    const EstimationResult est = staged("estimate " + net.name, [&] {
      EstimationResult r =
          fit_qmle(mean.residuals, w1, w2, default_initial(n), cfg.fit);
      write_json_file(estimation_to_json(r), (sub / "estimate.json").string());
      return r;
    });
    emit(net.name + "/estimate.json");
    stage_seconds["estimate " + net.name] = seconds_since(t0);

    t0 = std::chrono::steady_clock::now();
    staged("diagnose " + net.name, [&] {
      const LeverageSpec lev{est.params.theta, est.theta_temporal, est.params.xi};
      const Dynamics dyn(est.params, lev, w1, w2);
      const InversionResult inv =
          invert_panel(mean.residuals, dyn, default_initial(n), cfg.fit.newton);
      const int kept = inv.eps.t_len() - cfg.fit.burn;
      const Panel innovations(inv.eps.values().rightCols(kept), PanelKind::Innovations);
      write_panel_csv(innovations, (sub / "innovations.csv").string());
      const PanelDiagnostics diag =
          panel_diagnostics(innovations, w1, cfg.max_lag, cfg.alpha);
      write_json_file(diagnostics_to_json(diag), (sub / "diagnostics.json").string());
      write_lb_csv(diag, (sub / "lb_pvalues.csv").string());
      write_moran_csv(diag, (sub / "moran_pvalues.csv").string());
    });
    emit(net.name + "/innovations.csv");
    emit(net.name + "/diagnostics.json");
    emit(net.name + "/lb_pvalues.csv");
    emit(net.name + "/moran_pvalues.csv");
    stage_seconds["diagnose " + net.name] = seconds_since(t0);

    fits.push_back(est);
    names.push_back(net.name);
  }

  staged("compare", [&] {
    std::vector<const EstimationResult*> ptrs;
    for (const auto& f : fits) ptrs.push_back(&f);
    write_comparison_csv(names, ptrs, (dir / "comparison.csv").string());
  });
  emit("comparison.csv");

  std::size_t best = 0;
  for (std::size_t i = 1; i < fits.size(); ++i) {
    if (fits[i].aic < fits[best].aic) best = i;
  }

  nlohmann::json recorded = pipeline_config_to_json(cfg);
  recorded.erase("out_dir");         // where a run lands does not change what it is
  recorded["fit"]["threads"] = 0;    // thread count never changes results
  nlohmann::json manifest = {{"tool", "spegarch"},
                             {"version", kVersion},
                             {"config_hash", "fnv1a:" + config_hash},
                             {"input_hash", "fnv1a:" + input_hash},
                             {"config", recorded},
                             {"zero_replacements", ing.replaced},
                             {"networks", names},
                             {"best_aic_network", names[best]},
                             {"artifacts", artifacts}};
  write_json_file(manifest, (dir / "manifest.json").string());

  nlohmann::json timing_stages = nlohmann::json::object();
  for (const auto& [stage, secs] : stage_seconds) timing_stages[stage] = secs;
  write_json_file({{"total_seconds", seconds_since(run_start)}, {"stages", timing_stages}},
                  (dir / "timings.json").string());

  PipelineResult result;
  result.run_dir = cfg.out_dir;
  result.manifest_path = (dir / "manifest.json").string();
  result.artifacts = artifacts;
  result.best_network = names[best];
  result.zero_replacements = ing.replaced;
  return result;
}

void write_aggregate_csv(const BiasRmseTable& t, const std::string& path) {
  auto out = open_out(path);
  out << "parameter,bias,rmse\n";
  for (const auto& row : t.rows) {
    out << row.parameter << ',' << format_double(row.bias) << ',' << format_double(row.rmse)
        << '\n';
  }
  close_out(out, path);
}

void write_estimates_csv(const BiasRmseTable& t, const std::string& path) {
  auto out = open_out(path);
  out << "replication";
  for (Eigen::Index j = 0; j < t.estimates.cols(); ++j) {
    out << ',' << (j < 6 ? kParamNames[static_cast<std::size_t>(j)] : "theta_temporal");
  }
  out << '\n';
  for (Eigen::Index i = 0; i < t.estimates.rows(); ++i) {
    out << t.replication_ids[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < t.estimates.cols(); ++j) {
      out << ',' << format_double(t.estimates(i, j));
    }
    out << '\n';
  }
  close_out(out, path);
}

void write_comparison_csv(const std::vector<std::string>& names,
                          const std::vector<const EstimationResult*>& fits,
                          const std::string& path) {
  if (names.size() != fits.size() || names.empty()) {
    throw ValidationError("comparison table needs matching, nonempty names and fits");
  }
  std::size_t best_aic = 0;
  std::size_t best_bic = 0;
  for (std::size_t i = 1; i < fits.size(); ++i) {
    if (fits[i]->aic < fits[best_aic]->aic) best_aic = i;
    if (fits[i]->bic < fits[best_bic]->bic) best_bic = i;
  }
  auto out = open_out(path);
  out << "network,loglik,aic,bic,best_aic,best_bic\n";
  for (std::size_t i = 0; i < fits.size(); ++i) {
    out << names[i] << ',' << format_double(fits[i]->loglik) << ','
        << format_double(fits[i]->aic) << ',' << format_double(fits[i]->bic) << ','
        << (i == best_aic ? 1 : 0) << ',' << (i == best_bic ? 1 : 0) << '\n';
  }
  close_out(out, path);
}

void write_lb_csv(const PanelDiagnostics& d, const std::string& path) {
  auto out = open_out(path);
  out << "node,lb_raw,lb_squared\n";
  for (Eigen::Index i = 0; i < d.lb_raw.size(); ++i) {
    out << (i + 1) << ',' << format_double(d.lb_raw[i]) << ',' << format_double(d.lb_squared[i])
        << '\n';
  }
  close_out(out, path);
}

void write_moran_csv(const PanelDiagnostics& d, const std::string& path) {
  auto out = open_out(path);
  out << "time_point,moran_raw,moran_squared\n";
  for (Eigen::Index t = 0; t < d.moran_raw.size(); ++t) {
    out << (t + 1) << ',' << format_double(d.moran_raw[t]) << ','
        << format_double(d.moran_squared[t]) << '\n';
  }
  close_out(out, path);
}

void write_maxd_csv(const Eigen::VectorXd& maxd, const std::string& path) {
  auto out = open_out(path);
  out << "time_point,mean_maxd\n";
  for (Eigen::Index t = 0; t < maxd.size(); ++t) {
    out << (t + 1) << ',' << format_double(maxd[t]) << '\n';
  }
  close_out(out, path);
}

}  // namespace spegarch
