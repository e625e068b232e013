#pragma once

#include <json.hpp>

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "spegarch/diagnostics.hpp"
#include "spegarch/likelihood.hpp"
#include "spegarch/mc.hpp"
#include "spegarch/meanmodel.hpp"
#include "spegarch/process.hpp"
#include "spegarch/types.hpp"

namespace spegarch {

// JSON conventions: objects with snake_case keys mirroring the struct fields,
// vectors as arrays, matrices as arrays of row arrays. Non-finite entries
// serialize as null. Config objects may be partial (missing fields keep their
// defaults) but unknown keys are rejected, so a typo fails loudly instead of
// silently falling back.

nlohmann::json read_json_file(const std::string& path);
void write_json_file(const nlohmann::json& j, const std::string& path);

nlohmann::json vector_to_json(const Eigen::VectorXd& v);
nlohmann::json matrix_to_json(const Eigen::MatrixXd& m);

nlohmann::json params_to_json(const ModelParams& p);
ModelParams params_from_json(const nlohmann::json& j, const ModelParams& base = {},
                             const std::string& context = "params");

nlohmann::json fit_options_to_json(const FitOptions& o);
FitOptions fit_options_from_json(const nlohmann::json& j, const FitOptions& base = {},
                                 const std::string& context = "fit");

nlohmann::json mc_config_to_json(const McConfig& c);
McConfig mc_config_from_json(const nlohmann::json& j);

nlohmann::json estimation_to_json(const EstimationResult& r);
nlohmann::json sdpd_to_json(const SdpdFit& f);
nlohmann::json diagnostics_to_json(const PanelDiagnostics& d);
nlohmann::json stationarity_to_json(const StationarityReport& s);
nlohmann::json bias_rmse_to_json(const BiasRmseTable& t);

// Checked access to one JSON object. Typed getters validate the stored kind
// and report errors as "<context>: field 'key' ...". Every accessed key is
// recorded; finish() rejects any leftovers.
class JsonObjectReader {
 public:
  JsonObjectReader(const nlohmann::json& j, std::string context);

  bool has(const char* key) const;

  double number(const char* key, double fallback);
  int integer(const char* key, int fallback);
  std::uint64_t unsigned64(const char* key, std::uint64_t fallback);
  bool boolean(const char* key, bool fallback);
  std::string text(const char* key, const std::string& fallback);
  std::string required_text(const char* key);
  std::vector<double> number_array(const char* key, std::vector<double> fallback);

  // Nested object ({} when absent); the key counts as consumed.
  nlohmann::json child(const char* key);
  // Required array of objects.
  nlohmann::json object_array(const char* key);

  void finish() const;
  const std::string& context() const { return context_; }

 private:
  const nlohmann::json& ref(const char* key);

  nlohmann::json j_;
  std::string context_;
  std::set<std::string> seen_;
};

}  // namespace spegarch
