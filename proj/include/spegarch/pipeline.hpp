#pragma once

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

#include "spegarch/diagnostics.hpp"
#include "spegarch/likelihood.hpp"
#include "spegarch/mc.hpp"
#include "spegarch/types.hpp"

namespace spegarch {

inline constexpr const char* kVersion = "0.1.0";

// Zero returns make ln y^2 undefined, so ingestion either replaces them with
// small centered normal draws or refuses the file outright.
enum class ZeroPolicy { ReplaceNormal, Reject };

struct IngestResult {
  Panel panel;
  int replaced = 0;
};

// Reads a returns CSV (header node_1..node_n, one row per time point).
// Zero cells are replaced by N(0, sd^2) draws consumed in time-major order,
// so a fixed seed reproduces the panel exactly; under Reject the first zero
// aborts with its position. Non-finite cells are always rejected.
IngestResult ingest_returns(const std::string& path,
                            ZeroPolicy policy = ZeroPolicy::ReplaceNormal, double sd = 0.01,
                            std::uint64_t seed = 1);

// 64-bit FNV-1a, the fingerprint used in run manifests.
std::uint64_t fnv1a(const std::string& bytes);
std::string hex64(std::uint64_t v);
std::uint64_t hash_file(const std::string& path);

// One weight matrix recipe. Grids need rows x cols matching the panel;
// nearest-neighbour graphs are derived from the ingested panel itself; file
// matrices are read as stored.
struct WeightSpec {
  std::string type;  // "grid", "knn", "file"
  int rows = 0;
  int cols = 0;
  std::string contiguity = "queen";  // grid: "queen" or "rook"
  bool standardize = true;           // grid and file (knn rows always sum to 1)
  int k = 0;                         // knn neighbour count
  std::string metric = "euclidean";  // knn: "euclidean", "correlation", "piccolo"
  int ar_order = 2;                  // knn with the piccolo metric
  std::string path;                  // file
};

WeightSpec weight_spec_from_json(const nlohmann::json& j, const std::string& context);
nlohmann::json weight_spec_to_json(const WeightSpec& s);
WeightMatrix build_weights(const WeightSpec& spec, const Panel& panel);

struct NetworkSpec {
  std::string name;  // [A-Za-z0-9_.-], used as the artifact subdirectory
  WeightSpec w1;     // interaction network (news spillover, diagnostics)
  WeightSpec w2;     // volatility spillover network
};

struct PipelineConfig {
  std::string returns_csv;
  ZeroPolicy zero_policy = ZeroPolicy::ReplaceNormal;
  double zero_sd = 0.01;
  std::uint64_t zero_seed = 1;
  std::string out_dir = "spegarch_run";
  std::vector<NetworkSpec> networks;
  FitOptions fit;
  int max_lag = 10;
  double alpha = 0.05;
};

PipelineConfig pipeline_config_from_json(const nlohmann::json& j);
nlohmann::json pipeline_config_to_json(const PipelineConfig& cfg);

struct PipelineResult {
  std::string run_dir;
  std::string manifest_path;
  std::vector<std::string> artifacts;  // run_dir-relative, in creation order
  std::string best_network;            // smallest AIC
  int zero_replacements = 0;
};

// Full ingest -> mean filter -> volatility fit -> diagnostics chain, run once
// per network definition, plus an AIC/BIC comparison across them. Everything
// lands under the run directory; manifest.json pins the tool version, config
// and input hashes, and the artifact list, so a rerun of the same config is
// byte-identical (timings.json is the one file left out of the manifest).
// The config and every referenced input are validated before anything is
// written; a failure in a later stage aborts with the stage name and leaves
// the artifacts finished so far in place.
PipelineResult pipeline_run(const std::string& config_path,
                            const std::string& out_dir_override = "",
                            int threads_override = 0);

// Plot-ready CSV emitters shared by the pipeline and the command line tool.
void write_aggregate_csv(const BiasRmseTable& t, const std::string& path);
void write_estimates_csv(const BiasRmseTable& t, const std::string& path);
void write_comparison_csv(const std::vector<std::string>& names,
                          const std::vector<const EstimationResult*>& fits,
                          const std::string& path);
void write_lb_csv(const PanelDiagnostics& d, const std::string& path);
void write_moran_csv(const PanelDiagnostics& d, const std::string& path);
void write_maxd_csv(const Eigen::VectorXd& maxd, const std::string& path);

}  // namespace spegarch
