#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "spegarch/likelihood.hpp"
#include "spegarch/types.hpp"

namespace spegarch {

// The two canonical simulation designs of the bias/RMSE study.
ModelParams model_a_params();
ModelParams model_b_params();

// Names matching the canonical parameter order.
extern const std::array<const char*, 6> kParamNames;

// One cell of the study: a parameter point on a rows x cols lattice (Queen
// interaction network, Rook volatility network, both row-standardized),
// simulated for t_len points and refitted `replications` times. Replication r
// simulates from seed^r and estimates with a seed derived from fit.seed and
// r, so results do not depend on execution order or thread count. Fits inside
// replications always run single-threaded; `threads` parallelizes across
// replications. `burn_in` pre-sample steps are simulated and dropped before
// each kept panel; with 0 the panels start at the fixed initial state, whose
// transient depresses the spatial log-volatility estimates noticeably at
// T = 50.
struct McConfig {
  ModelParams params = model_a_params();
  int rows = 4;
  int cols = 4;
  int t_len = 50;
  int burn_in = 0;
  int replications = 100;
  std::uint64_t seed = 1;
  int threads = 0;
  FitOptions fit;
};

struct BiasRmseRow {
  std::string parameter;
  double bias = 0.0;
  double rmse = 0.0;
};

struct BiasRmseTable {
  std::vector<BiasRmseRow> rows;     // canonical parameter order
  Eigen::MatrixXd estimates;         // one row per successful replication
  std::vector<int> replication_ids;  // 0-based ids matching estimate rows
  int failures = 0;
  double wall_seconds = 0.0;
  std::vector<double> rep_seconds;  // per attempted replication
};

// Simulate-and-refit study. Replications that fail to estimate are excluded
// and counted; more than 5% of them failing aborts the run, since silently
// dropping many replications would bias the aggregates.
BiasRmseTable run_bias_rmse(const McConfig& cfg);

// Innovation recovery experiments: the per-time worst squared recovery error
// at the truth, and total squared recovery error surfaces over all pairwise
// parameter perturbation slices (the other four parameters held at truth).
// The sums discard the first five time points.
struct InvertibilityStudy {
  Eigen::VectorXd maxd;                   // per time point, averaged over reps
  std::vector<std::array<int, 2>> pairs;  // canonical index pairs, i < j
  std::vector<Eigen::MatrixXd> ssd;       // per pair: offset x offset grid means
  std::vector<double> offsets;
  int failures = 0;
};

InvertibilityStudy run_invertibility_study(const ModelParams& params, int rows, int cols,
                                           int t_len, const std::vector<double>& offsets,
                                           int m, std::uint64_t seed, int threads = 0);

}  // namespace spegarch
