#include "spegarch/json_io.hpp"

#include <cmath>
#include <fstream>
#include <utility>

#include "spegarch/errors.hpp"

namespace spegarch {

namespace {

std::string kind_name(const nlohmann::json& j) {
  if (j.is_null()) return "null";
  if (j.is_boolean()) return "a boolean";
  if (j.is_string()) return "a string";
  if (j.is_array()) return "an array";
  if (j.is_object()) return "an object";
  if (j.is_number()) return "a number";
  return "of unexpected type";
}

}  // namespace

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError(path + ": " + e.what());
  }
}

void write_json_file(const nlohmann::json& j, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed while writing '" + path + "'");
}

nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
  auto a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  auto rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    auto row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

JsonObjectReader::JsonObjectReader(const nlohmann::json& j, std::string context)
    : j_(j), context_(std::move(context)) {
  if (!j_.is_object()) {
    throw ValidationError(context_ + ": expected a JSON object, got " + kind_name(j_));
  }
}

bool JsonObjectReader::has(const char* key) const { return j_.contains(key); }

const nlohmann::json& JsonObjectReader::ref(const char* key) {
  seen_.insert(key);
  return j_.at(key);
}

double JsonObjectReader::number(const char* key, double fallback) {
  if (!has(key)) return fallback;
  const auto& v = ref(key);
  if (!v.is_number()) {
    throw ValidationError(context_ + ": field '" + key + "' must be a number, got " +
                          kind_name(v));
  }
  return v.get<double>();
}

int JsonObjectReader::integer(const char* key, int fallback) {
  if (!has(key)) return fallback;
  const auto& v = ref(key);
  if (!v.is_number_integer()) {
    throw ValidationError(context_ + ": field '" + key + "' must be an integer, got " +
                          kind_name(v));
  }
  return v.get<int>();
}

std::uint64_t JsonObjectReader::unsigned64(const char* key, std::uint64_t fallback) {
  if (!has(key)) return fallback;
  const auto& v = ref(key);
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() &&
                                 v.get<std::int64_t>() < 0)) {
    throw ValidationError(context_ + ": field '" + key +
                          "' must be a nonnegative integer, got " + kind_name(v));
  }
  return v.get<std::uint64_t>();
}

bool JsonObjectReader::boolean(const char* key, bool fallback) {
  if (!has(key)) return fallback;
  const auto& v = ref(key);
  if (!v.is_boolean()) {
    throw ValidationError(context_ + ": field '" + key + "' must be a boolean, got " +
                          kind_name(v));
  }
  return v.get<bool>();
}

std::string JsonObjectReader::text(const char* key, const std::string& fallback) {
  if (!has(key)) return fallback;
  const auto& v = ref(key);
  if (!v.is_string()) {
    throw ValidationError(context_ + ": field '" + key + "' must be a string, got " +
                          kind_name(v));
  }
  return v.get<std::string>();
}

std::string JsonObjectReader::required_text(const char* key) {
  if (!has(key)) throw ValidationError(context_ + ": missing required field '" + key + "'");
  return text(key, "");
}

std::vector<double> JsonObjectReader::number_array(const char* key,
                                                   std::vector<double> fallback) {
  if (!has(key)) return fallback;
  const auto& v = ref(key);
  if (!v.is_array()) {
    throw ValidationError(context_ + ": field '" + key + "' must be an array, got " +
                          kind_name(v));
  }
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& e : v) {
    if (!e.is_number()) {
      throw ValidationError(context_ + ": field '" + key + "' must contain only numbers");
    }
    out.push_back(e.get<double>());
  }
  return out;
}

nlohmann::json JsonObjectReader::child(const char* key) {
  if (!has(key)) return nlohmann::json::object();
  const auto& v = ref(key);
  if (!v.is_object()) {
    throw ValidationError(context_ + ": field '" + key + "' must be an object, got " +
                          kind_name(v));
  }
  return v;
}

nlohmann::json JsonObjectReader::object_array(const char* key) {
  if (!has(key)) throw ValidationError(context_ + ": missing required field '" + key + "'");
  const auto& v = ref(key);
  if (!v.is_array()) {
    throw ValidationError(context_ + ": field '" + key + "' must be an array, got " +
                          kind_name(v));
  }
  return v;
}

void JsonObjectReader::finish() const {
  for (const auto& item : j_.items()) {
    if (!seen_.count(item.key())) {
      throw ValidationError(context_ + ": unknown field '" + item.key() + "'");
    }
  }
}

nlohmann::json params_to_json(const ModelParams& p) {
  return {{"alpha", p.alpha},     {"rho0", p.rho0},       {"rho1", p.rho1},
          {"lambda0", p.lambda0}, {"lambda1", p.lambda1}, {"theta", p.theta},
          {"xi", p.xi}};
}

ModelParams params_from_json(const nlohmann::json& j, const ModelParams& base,
                             const std::string& context) {
  JsonObjectReader r(j, context);
  ModelParams p = base;
  p.alpha = r.number("alpha", p.alpha);
  p.rho0 = r.number("rho0", p.rho0);
  p.rho1 = r.number("rho1", p.rho1);
  p.lambda0 = r.number("lambda0", p.lambda0);
  p.lambda1 = r.number("lambda1", p.lambda1);
  p.theta = r.number("theta", p.theta);
  p.xi = r.number("xi", p.xi);
  r.finish();
  return p;
}

nlohmann::json fit_options_to_json(const FitOptions& o) {
  return {{"n_starts", o.n_starts},
          {"n_local", o.n_local},
          {"n_polish", o.n_polish},
          {"seed", o.seed},
          {"burn", o.burn},
          {"two_theta", o.two_theta},
          {"threads", o.threads},
          {"std_errors", o.std_errors},
          {"simplex",
           {{"max_evals", o.simplex.max_evals},
            {"f_tol", o.simplex.f_tol},
            {"x_tol", o.simplex.x_tol},
            {"step", o.simplex.step}}},
          {"polish",
           {{"max_iter", o.polish.max_iter},
            {"g_tol", o.polish.g_tol},
            {"f_tol", o.polish.f_tol},
            {"fd_step", o.polish.fd_step}}},
          {"newton", {{"tol", o.newton.tol}, {"max_iter", o.newton.max_iter}}}};
}

FitOptions fit_options_from_json(const nlohmann::json& j, const FitOptions& base,
                                 const std::string& context) {
  JsonObjectReader r(j, context);
  FitOptions o = base;
  o.n_starts = r.integer("n_starts", o.n_starts);
  o.n_local = r.integer("n_local", o.n_local);
  o.n_polish = r.integer("n_polish", o.n_polish);
  o.seed = r.unsigned64("seed", o.seed);
  o.burn = r.integer("burn", o.burn);
  o.two_theta = r.boolean("two_theta", o.two_theta);
  o.threads = r.integer("threads", o.threads);
  o.std_errors = r.boolean("std_errors", o.std_errors);
  {
    JsonObjectReader s(r.child("simplex"), context + ".simplex");
    o.simplex.max_evals = s.integer("max_evals", o.simplex.max_evals);
    o.simplex.f_tol = s.number("f_tol", o.simplex.f_tol);
    o.simplex.x_tol = s.number("x_tol", o.simplex.x_tol);
    o.simplex.step = s.number("step", o.simplex.step);
    s.finish();
  }
  {
    JsonObjectReader q(r.child("polish"), context + ".polish");
    o.polish.max_iter = q.integer("max_iter", o.polish.max_iter);
    o.polish.g_tol = q.number("g_tol", o.polish.g_tol);
    o.polish.f_tol = q.number("f_tol", o.polish.f_tol);
    o.polish.fd_step = q.number("fd_step", o.polish.fd_step);
    q.finish();
  }
  {
    JsonObjectReader nw(r.child("newton"), context + ".newton");
    o.newton.tol = nw.number("tol", o.newton.tol);
    o.newton.max_iter = nw.integer("max_iter", o.newton.max_iter);
    nw.finish();
  }
  r.finish();
  return o;
}

nlohmann::json mc_config_to_json(const McConfig& c) {
  return {{"params", params_to_json(c.params)},
          {"rows", c.rows},
          {"cols", c.cols},
          {"t_len", c.t_len},
          {"burn_in", c.burn_in},
          {"replications", c.replications},
          {"seed", c.seed},
          {"threads", c.threads},
          {"fit", fit_options_to_json(c.fit)}};
}

McConfig mc_config_from_json(const nlohmann::json& j) {
  JsonObjectReader r(j, "mc config");
  McConfig c;
  c.params = params_from_json(r.child("params"), c.params, "mc config.params");
  c.rows = r.integer("rows", c.rows);
  c.cols = r.integer("cols", c.cols);
  c.t_len = r.integer("t_len", c.t_len);
  c.burn_in = r.integer("burn_in", c.burn_in);
  c.replications = r.integer("replications", c.replications);
  c.seed = r.unsigned64("seed", c.seed);
  c.threads = r.integer("threads", c.threads);
  c.fit = fit_options_from_json(r.child("fit"), c.fit, "mc config.fit");
  r.finish();
  return c;
}

nlohmann::json estimation_to_json(const EstimationResult& r) {
  auto order = nlohmann::json::array();
  for (const char* name : kParamNames) order.push_back(name);
  if (r.std_errors.size() > 6) order.push_back("theta_temporal");
  auto errors = nlohmann::json::array();
  for (Eigen::Index i = 0; i < r.std_errors.size(); ++i) {
    if (std::isfinite(r.std_errors[i])) {
      errors.push_back(r.std_errors[i]);
    } else {
      errors.push_back(nullptr);
    }
  }
  auto trace = nlohmann::json::array();
  for (const auto& rec : r.trace) {
    trace.push_back({{"params", vector_to_json(rec.params)},
                     {"nll_screen", rec.nll_screen},
                     {"nll_final", rec.nll_final},
                     {"stage", rec.stage}});
  }
  return {{"params", params_to_json(r.params)},
          {"theta_temporal", r.theta_temporal},
          {"parameter_order", order},
          {"std_errors", errors},
          {"se_ok", r.se_ok},
          {"hessian_ridge", r.hessian_ridge},
          {"loglik", r.loglik},
          {"aic", r.aic},
          {"bic", r.bic},
          {"converged", r.converged},
          {"boundary", r.boundary},
          {"n_inversions", r.n_inversions},
          {"burn_dropped", r.burn_dropped},
          {"trace", trace}};
}

nlohmann::json sdpd_to_json(const SdpdFit& f) {
  return {{"rho", f.rho},
          {"gamma", f.gamma},
          {"lambda", f.lambda},
          {"profile_loglik", f.profile_loglik},
          {"nodes", f.residuals.n()},
          {"residual_time_points", f.residuals.t_len()}};
}

nlohmann::json diagnostics_to_json(const PanelDiagnostics& d) {
  return {{"alpha", d.alpha},
          {"max_lag", d.max_lag},
          {"frac_lb_raw", d.frac_lb_raw},
          {"frac_lb_squared", d.frac_lb_squared},
          {"frac_moran_raw", d.frac_moran_raw},
          {"frac_moran_squared", d.frac_moran_squared},
          {"lb_raw", vector_to_json(d.lb_raw)},
          {"lb_squared", vector_to_json(d.lb_squared)},
          {"moran_raw", vector_to_json(d.moran_raw)},
          {"moran_squared", vector_to_json(d.moran_squared)}};
}

nlohmann::json stationarity_to_json(const StationarityReport& s) {
  return {{"rho_spec_A", s.rho_spec_A},
          {"rho_spec_B", s.rho_spec_B},
          {"sufficient_ok", s.sufficient_ok},
          {"strict_ok", s.strict_ok}};
}

nlohmann::json bias_rmse_to_json(const BiasRmseTable& t) {
  auto rows = nlohmann::json::array();
  for (const auto& row : t.rows) {
    rows.push_back({{"parameter", row.parameter}, {"bias", row.bias}, {"rmse", row.rmse}});
  }
  return {{"rows", rows},
          {"n_estimates", static_cast<int>(t.replication_ids.size())},
          {"replication_ids", t.replication_ids},
          {"failures", t.failures}};
}

}  // namespace spegarch
