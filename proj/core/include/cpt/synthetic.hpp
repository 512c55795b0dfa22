#pragma once

#include <cstdint>
#include <vector>

#include "cpt/grid.hpp"
#include "cpt/latent_arma.hpp"

namespace cpt {

/// Recipe for a synthetic multi-location dataset: sinusoid + noise inputs,
/// then (z, y) simulated through the latent recursion and the daily compound
/// Poisson draw.  The truth record is kept for calibration tests.
struct SyntheticSpec {
  int n_days = 365;
  int n_rows = 1, n_cols = 1;
  ModelParams truth;  // shared across locations
  double input_amplitude = 1.0;
  double input_noise = 0.5;
  double period_days = 365.25;
  std::int64_t start_day = 10957;  // 2000-01-01
  std::uint64_t seed = 0;
};

struct SyntheticLocation {
  int row = 0, col = 0;
  LocationData data;
  std::vector<int> z_truth;
};

/// Per-location series; inputs are column-standardized exactly.  Location
/// (row, col) draws from the stream derive_seed(seed, row, col).
std::vector<SyntheticLocation> synthesize(const SyntheticSpec& spec);

/// The same dataset shaped as grids for the CLI pipeline: input fields
/// "x0".."x{R-1}" (standardized) plus observed "precip" (mm).
FieldSet synthetic_fieldset(const SyntheticSpec& spec,
                            const std::vector<SyntheticLocation>& locations);

std::string synthetic_truth_json(const SyntheticSpec& spec);

}  // namespace cpt
