#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cpt/gibbs.hpp"
#include "cpt/latent_arma.hpp"
#include "cpt/rng.hpp"

namespace cpt {

/// Posterior-predictive precipitation trajectories for one location.
struct ForecastEnsemble {
  Eigen::MatrixXd members;  // M x T_test, mm/day
  Eigen::MatrixXi member_z;
  std::vector<std::int64_t> calendar;  // test-window epoch days
  int location_row = -1, location_col = -1;
  bool draws_reused = false;  // true when members > archive draws
  std::vector<std::int64_t> draw_indices;

  int n_members() const { return int(members.rows()); }
  int n_days() const { return int(members.cols()); }
};

struct Trajectory {
  Eigen::VectorXd y;
  std::vector<int> z;
};

/// Simulate one member forward: re-unroll the supplied training history
/// (length >= max(p, q)) under theta, then continue the recursion day by day
/// over the test window, drawing (z, y) from the daily compound Poisson and
/// feeding the simulated values back into the AR/MA lags.  With
/// reset_recursion the history is ignored and the recursion starts cold at
/// the first test day.
Trajectory simulate_forward(const ModelParams& theta, const LocationData& history,
                            std::span<const int> history_z, const Eigen::MatrixXd& future_inputs,
                            Rng& rng, bool reset_recursion = false);

/// M members, each driven by one evenly thinned posterior draw and an
/// independent per-member RNG stream (so results do not depend on how the
/// members are scheduled).  M larger than the archive reuses draws and flags
/// it.
ForecastEnsemble posterior_predictive(const SampleArchive& archive, const LocationData& history,
                                      std::span<const int> history_z,
                                      const Eigen::MatrixXd& future_inputs, int n_members,
                                      std::uint64_t seed, bool reset_recursion = false,
                                      int n_workers = 1);

/// Shortest interval over the sorted empirical sample containing
/// ceil(mass * n) points; the zero atom participates at its sample mass, so
/// confidently dry days collapse to {0}.
std::pair<double, double> empirical_hdi(std::span<const double> sorted_samples, double mass);

struct DaySummary {
  double median;
  double hdi68_lo, hdi68_hi;
  double hdi95_lo, hdi95_hi;
  std::vector<double> p_exceed;  // P(y > x) per x-grid entry
};

struct EnsembleSummary {
  std::vector<double> x_grid;
  std::vector<DaySummary> days;
  std::vector<std::int64_t> calendar;
};

/// Per-day median, 68%/95% HDIs and exceedance probabilities.  Requires at
/// least 20 members for the HDIs.
EnsembleSummary ensemble_summaries(const ForecastEnsemble& e, std::span<const double> x_grid);

/// Per-day ensemble medians (the deterministic point forecast).
Eigen::VectorXd ensemble_median_series(const ForecastEnsemble& e);

// ---- storage: columnar binary + JSON metadata sidecar ----

void write_ensemble(const std::string& path, const ForecastEnsemble& e);
ForecastEnsemble read_ensemble(const std::string& path);
std::string ensemble_metadata_json(const ForecastEnsemble& e);
void write_summary_csv(const std::string& path, const EnsembleSummary& s);

}  // namespace cpt
