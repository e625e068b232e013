#include "spegarch/mc.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "spegarch/errors.hpp"
#include "spegarch/inversion.hpp"
#include "spegarch/networks.hpp"
#include "spegarch/parallel.hpp"
#include "spegarch/process.hpp"

namespace spegarch {

namespace {

constexpr std::uint64_t kSeedMix = 0x9E3779B97F4A7C15ULL;
constexpr int kDiscard = 5;  // leading time points excluded from error sums

double seconds_since(std::chrono::steady_clock::time_point from) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - from).count();
}

}  // namespace

ModelParams model_a_params() { return ModelParams{0.5, 0.5, 0.35, 0.2, 0.3, 0.4, 1.0}; }

ModelParams model_b_params() { return ModelParams{0.5, 0.2, 0.35, 0.25, 0.3, 0.4, 1.0}; }

const std::array<const char*, 6> kParamNames = {"alpha",   "rho0",    "rho1",
                                                "lambda0", "lambda1", "theta"};

BiasRmseTable run_bias_rmse(const McConfig& cfg) {
  if (cfg.replications < 1) throw ValidationError("need at least one replication");
  if (cfg.burn_in < 0) throw ValidationError("burn-in must be nonnegative");
  const auto w1 = grid_contiguity(cfg.rows, cfg.cols, Contiguity::Queen, true);
  const auto w2 = grid_contiguity(cfg.rows, cfg.cols, Contiguity::Rook, true);
  if (!check_stationarity(cfg.params, w2).strict_ok)
    throw ValidationError("study parameters are not strictly stationary");
  const int n = cfg.rows * cfg.cols;
  const auto init = default_initial(n);
  const int m = cfg.replications;
  const int threads = resolve_threads(cfg.threads);

  const auto t0 = std::chrono::steady_clock::now();
  std::vector<Eigen::VectorXd> slots(m);  // empty vector marks a failure
  std::vector<double> times(m, 0.0);
  parallel_for(m, threads, [&](int r) {
    const auto r0 = std::chrono::steady_clock::now();
    try {
      const auto sim = simulate(cfg.params, w1, w2, cfg.t_len, cfg.burn_in, init,
                                cfg.seed ^ static_cast<std::uint64_t>(r));
      FitOptions fo = cfg.fit;
      fo.seed = cfg.fit.seed ^ (kSeedMix * static_cast<std::uint64_t>(r + 1));
      fo.threads = 1;
      const auto fit = fit_qmle(sim.y, w1, w2, init, fo);
      slots[r] = canonical_vector(fit.params);
    } catch (const ValidationError&) {
    } catch (const NumericalError&) {
    }
    times[r] = seconds_since(r0);
  });

  BiasRmseTable table;
  table.rep_seconds = std::move(times);
  int ok = 0;
  for (const auto& s : slots) ok += s.size() == 6 ? 1 : 0;
  table.failures = m - ok;
  if (table.failures * 20 > m)
    throw NumericalError(std::to_string(table.failures) + " of " + std::to_string(m) +
                         " replications failed; aggregates would be unreliable");

  table.estimates.resize(ok, 6);
  table.replication_ids.reserve(ok);
  int row = 0;
  for (int r = 0; r < m; ++r) {
    if (slots[r].size() != 6) continue;
    table.estimates.row(row++) = slots[r].transpose();
    table.replication_ids.push_back(r);
  }

  const Eigen::VectorXd truth = canonical_vector(cfg.params);
  table.rows.reserve(6);
  for (int j = 0; j < 6; ++j) {
    const Eigen::ArrayXd err = table.estimates.col(j).array() - truth(j);
    table.rows.push_back(
        BiasRmseRow{kParamNames[j], err.mean(), std::sqrt(err.square().mean())});
  }
  table.wall_seconds = seconds_since(t0);
  return table;
}

InvertibilityStudy run_invertibility_study(const ModelParams& params, int rows, int cols,
                                           int t_len, const std::vector<double>& offsets,
                                           int m, std::uint64_t seed, int threads) {
  if (m < 1) throw ValidationError("need at least one replication");
  if (offsets.empty()) throw ValidationError("perturbation grid is empty");
  if (t_len <= kDiscard)
    throw ValidationError("need more time points than the discarded prefix");
  const auto w1 = grid_contiguity(rows, cols, Contiguity::Queen, true);
  const auto w2 = grid_contiguity(rows, cols, Contiguity::Rook, true);
  if (!check_stationarity(params, w2).strict_ok)
    throw ValidationError("study parameters are not strictly stationary");
  const int n = rows * cols;
  const auto init = default_initial(n);
  const int g = static_cast<int>(offsets.size());

  InvertibilityStudy study;
  study.offsets = offsets;
  for (int a = 0; a < 6; ++a)
    for (int b = a + 1; b < 6; ++b) study.pairs.push_back({a, b});
  const int n_pairs = static_cast<int>(study.pairs.size());

  struct RepResult {
    Eigen::VectorXd maxd;
    std::vector<Eigen::MatrixXd> ssd;     // NaN cells mark failures
  };
  std::vector<RepResult> reps(m);
  const Eigen::VectorXd truth = canonical_vector(params);

  parallel_for(m, resolve_threads(threads), [&](int r) {
    const auto sim = simulate(params, w1, w2, t_len, 0, init,
                              seed ^ static_cast<std::uint64_t>(r));
    RepResult& rr = reps[r];

    const auto at_truth = invert_panel(sim.y, params, w1, w2, init);
    rr.maxd = (at_truth.eps.values() - sim.eps.values())
                  .array()
                  .square()
                  .colwise()
                  .maxCoeff()
                  .transpose();

    rr.ssd.assign(n_pairs, Eigen::MatrixXd(g, g));
    for (int pi = 0; pi < n_pairs; ++pi) {
      for (int ia = 0; ia < g; ++ia) {
        for (int ib = 0; ib < g; ++ib) {
          Eigen::VectorXd v = truth;
          v(study.pairs[pi][0]) += offsets[ia];
          v(study.pairs[pi][1]) += offsets[ib];
          double cell = std::numeric_limits<double>::quiet_NaN();
          try {
            const auto inv =
                invert_panel(sim.y, params_from_canonical(v, params.xi), w1, w2, init);
            cell = (inv.eps.values().rightCols(t_len - kDiscard) -
                    sim.eps.values().rightCols(t_len - kDiscard))
                       .array()
                       .square()
                       .sum();
          } catch (const NumericalError&) {
          } catch (const ValidationError&) {
          }
          rr.ssd[pi](ia, ib) = cell;
        }
      }
    }
  });

  study.maxd = Eigen::VectorXd::Zero(t_len);
  study.ssd.assign(n_pairs, Eigen::MatrixXd::Zero(g, g));
  std::vector<Eigen::MatrixXd> counts(n_pairs, Eigen::MatrixXd::Zero(g, g));
  for (int r = 0; r < m; ++r) {
    study.maxd += reps[r].maxd;
    for (int pi = 0; pi < n_pairs; ++pi) {
      for (int ia = 0; ia < g; ++ia) {
        for (int ib = 0; ib < g; ++ib) {
          const double cell = reps[r].ssd[pi](ia, ib);
          if (std::isnan(cell)) {
            ++study.failures;
          } else {
            study.ssd[pi](ia, ib) += cell;
            counts[pi](ia, ib) += 1.0;
          }
        }
      }
    }
  }
  study.maxd /= m;
  for (int pi = 0; pi < n_pairs; ++pi) {
    study.ssd[pi] = (counts[pi].array() > 0.0)
                        .select(study.ssd[pi].array() / counts[pi].array(),
                                std::numeric_limits<double>::quiet_NaN())
                        .matrix();
  }
  return study;
}

}  // namespace spegarch
