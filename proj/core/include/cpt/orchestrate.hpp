#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cpt/gibbs.hpp"
#include "cpt/grid.hpp"
#include "cpt/priors.hpp"

namespace cpt {

struct LocationSelection {
  enum class Mode { All, BBox, Cell };
  Mode mode = Mode::All;
  double lat_min = 0, lat_max = 0, lon_min = 0, lon_max = 0;  // BBox, inclusive
  int row = -1, col = -1;                                     // Cell
};

/// Batch run configuration; the CLI populates this from the flat key=value
/// config file plus command-line overrides.
struct RunConfig {
  std::string inputs_path;        // CPT-grid of standardized input fields
  std::string observations_path;  // CPT-grid holding the precip field
  std::string precip_field = "precip";
  std::string benchmark_path;     // optional deterministic benchmark CPT-grid
  std::string benchmark_field = "precip";
  std::string output_dir;

  LocationSelection locations;
  ChainConfig chain;
  PriorConfig prior;

  std::int64_t train_start_day = 0, train_end_day = 0;  // inclusive epoch days
  std::int64_t test_start_day = 0, test_end_day = 0;

  int n_members = 100;
  std::vector<double> thresholds_mm = {5.0, 15.0, 25.0};
  int n_workers = 1;
  std::uint64_t base_seed = 0;
  bool forecast_reset = false;  // restart the recursion at the test boundary
  bool render_svg = false;

  void validate_common() const;  // throws config_error
};

struct GridCell {
  int row, col;
};

/// Masked-in cells of the observation grid matching the selection, in
/// deterministic row-major order.
std::vector<GridCell> select_locations(const GridTimeSeries& obs, const LocationSelection& sel);

/// Series extraction for one cell over an inclusive day window; throws
/// data_error if any day is missing from either file.
LocationData extract_location(const FieldSet& inputs, const GridTimeSeries& obs, GridCell cell,
                              std::int64_t start_day, std::int64_t end_day);

/// Input matrix only (test window, where observations are yet unknown).
Eigen::MatrixXd extract_inputs(const FieldSet& inputs, GridCell cell, std::int64_t start_day,
                               std::int64_t end_day);

std::string location_tag(GridCell cell);  // "r{row}_c{col}"

struct LocationStatus {
  GridCell cell;
  bool ok = false;
  bool skipped = false;  // output already present
  std::string error;
};

struct TrainOutcome {
  std::vector<LocationStatus> locations;
  int n_failed = 0;
};

/// Train one chain per selected location on a fixed-size worker pool.
/// Per-location streams come from derive_seed(base_seed, row, col), so
/// results are bitwise independent of worker count.  A failed location is
/// recorded (crash state on disk) and does not stop the others.  Locations
/// whose archive already exists are skipped; a live checkpoint resumes.
TrainOutcome run_train(const RunConfig& cfg);

struct ForecastOutcome {
  std::vector<LocationStatus> locations;
  int n_failed = 0;
};

ForecastOutcome run_forecast(const RunConfig& cfg);

struct SeasonBias {
  std::string scope;  // "all", "DJF", ...
  double mab = 0.0, rmsb = 0.0;
  long long n = 0;
};

struct EvaluationReport {
  long long n_locations = 0, n_days = 0;
  std::vector<SeasonBias> forecast_bias;
  std::vector<SeasonBias> benchmark_bias;  // empty without a benchmark
  std::vector<double> thresholds;
  std::vector<double> auc;         // per threshold, ensemble forecasts only
  std::vector<double> base_rates;  // observed exceedance per threshold
  std::string json;                // full report, schema-versioned
};

EvaluationReport run_evaluate(const RunConfig& cfg);

/// Consolidated run summary: per-location status, configs, metric tables.
/// Empty directories produce an empty-but-valid report; rerunning is
/// idempotent.
std::string build_report(const std::string& run_dir);

}  // namespace cpt
