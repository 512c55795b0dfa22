#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <vector>

#include "cpt/grid.hpp"

namespace cpt {

// Point-forecast errors.  For ensemble forecasts the point value is the
// per-day median; benchmark series are used as-is.

double mab(std::span<const double> forecast, std::span<const double> observed);
double rmsb(std::span<const double> forecast, std::span<const double> observed);

/// Squared error around the median and median-centered squared spread for
/// one day.
struct DaySpreadError {
  double spread2;
  double error2;
};
DaySpreadError day_spread_error(std::span<const double> members, double observed);

struct SpreadSkillBin {
  double rms_spread;
  double rms_error;
  long long n_days;
};

/// Days sorted by spread and split into n_bins equally populated bins (any
/// remainder spread over the leading bins); per-bin RMS of each quantity.
std::vector<SpreadSkillBin> spread_skill(std::span<const double> spread2,
                                         std::span<const double> error2, int n_bins = 16);

struct RocPoint {
  double threshold, fpr, tpr;
};

struct RocCurve {
  std::vector<RocPoint> points;  // by decreasing threshold, (0,0) .. (1,1)
  double auc = 0.0;
  long long n_events = 0, n_non_events = 0;
};

/// Threshold sweep over the distinct forecast probabilities (plus 0 and 1);
/// a day is called positive when prob >= threshold.  AUC by trapezoid, which
/// on these exact sweep points equals the Mann-Whitney rank statistic with
/// tie correction.  Requires at least one event and one non-event.
RocCurve roc(std::span<const double> prob, std::span<const std::uint8_t> event);

/// Empirical P(value > x) per x-grid entry.
std::vector<double> exceedance_curve(std::span<const double> series,
                                     std::span<const double> x_grid);

/// Fraction of days with observation > threshold, per threshold.
std::vector<double> event_base_rates(std::span<const double> observed,
                                     std::span<const double> thresholds);

/// Lag-0 Pearson correlation between every cell's series and the reference
/// cell's series; NaN on masked-out or zero-variance cells.
Eigen::MatrixXd cross_correlation_map(const GridTimeSeries& g, int ref_i, int ref_j);

/// Masked-in cell closest to the mask's center of mass.
std::pair<int, int> mask_center_of_mass(const GridTimeSeries& g);

/// 2-D histogram of (forecast, observed) on ln(y+1) axes.  Bin edges are
/// uniform in the transformed space; edge k maps back to mm as expm1(edge).
struct Histogram2d {
  int n_bins = 0;
  double lo = 0.0, hi = 0.0;  // transformed-space range
  std::vector<long long> counts;  // n_bins x n_bins, forecast-major

  long long total() const;
  double edge(int k) const { return lo + (hi - lo) * double(k) / double(n_bins); }
};

Histogram2d log_density_heatmap(std::span<const double> forecast,
                                std::span<const double> observed, int n_bins);

}  // namespace cpt
