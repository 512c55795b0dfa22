#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace cpt {

/// One gridded field over time.  Axes are strictly increasing; values are
/// stored t-major (index (t*H + i)*W + j with i over lat and j over lon).
struct GridTimeSeries {
  std::vector<std::int64_t> times;  // epoch seconds, strictly increasing
  std::vector<double> lat, lon;     // degrees
  std::vector<std::uint8_t> mask;   // H*W, 1 = evaluated cell
  std::vector<double> values;       // T*H*W
  std::string unit;

  int n_times() const { return int(times.size()); }
  int n_lat() const { return int(lat.size()); }
  int n_lon() const { return int(lon.size()); }

  double& at(int t, int i, int j) {
    return values[std::size_t((t * n_lat() + i) * n_lon() + j)];
  }
  double at(int t, int i, int j) const {
    return values[std::size_t((t * n_lat() + i) * n_lon() + j)];
  }
  bool masked_in(int i, int j) const { return mask[std::size_t(i * n_lon() + j)] != 0; }

  void validate() const;  // throws data_error

  static GridTimeSeries make(std::vector<std::int64_t> times, std::vector<double> lat,
                             std::vector<double> lon, std::string unit);
};

/// Named fields sharing one grid and time axis.
struct FieldSet {
  std::vector<std::string> names;
  std::vector<GridTimeSeries> fields;

  bool has(const std::string& name) const;
  const GridTimeSeries& field(const std::string& name) const;
  GridTimeSeries& field(const std::string& name);
  void add(std::string name, GridTimeSeries f);
  void validate() const;  // identical axes/times across fields
};

/// Natural cubic spline through (x, f); reproduces node values exactly and
/// linear data identically.  Evaluation outside [x.front(), x.back()] throws.
class CubicSpline1D {
 public:
  CubicSpline1D(std::span<const double> x, std::span<const double> f);
  double operator()(double u) const;

 private:
  std::vector<double> x_, f_, m_;  // m = second derivatives at the knots
};

/// Bicubic (tensor-product natural cubic spline) regridding of every time
/// slice onto the fine axes, which must lie inside the coarse bounding box.
GridTimeSeries regrid_spline(const GridTimeSeries& coarse, const std::vector<double>& fine_lat,
                             const std::vector<double>& fine_lon);

/// Collapse a sub-daily series to daily means; every day must carry the same
/// number of slots as the first (a missing slot is an error).
GridTimeSeries daily_mean(const GridTimeSeries& x);

GridTimeSeries wind_speed(const GridTimeSeries& u, const GridTimeSeries& v);

/// How degree spacings convert to physical distance for gradients.
struct GradientMetric {
  bool equirectangular = true;     // false: raw degree spacing (unit tests)
  double earth_radius_m = 6371000.0;
};

/// |(u dA/dx, v dA/dy)| with central differences (one-sided at the edges).
/// Needs at least 3 points per axis.
GridTimeSeries advection_magnitude(const GridTimeSeries& u, const GridTimeSeries& v,
                                   const GridTimeSeries& a, const GradientMetric& metric);

/// Optional pre-interpolation smoother: boxcar mean over a
/// (2*half_width+1)^2 spatial window, applied per time slice.
GridTimeSeries boxcar_smooth(const GridTimeSeries& x, int half_width);

struct FieldStats {
  double mean = 0.0, sd = 1.0;
};

/// Shift/scale each field to mean 0, sd 1 over masked-in cells and all
/// times; returns the statistics for reuse on test-period inputs.
std::map<std::string, FieldStats> standardize(FieldSet& fs);
void apply_standardization(FieldSet& fs, const std::map<std::string, FieldStats>& stats);

std::string field_stats_json(const std::map<std::string, FieldStats>& stats);
std::map<std::string, FieldStats> parse_field_stats_json(const std::string& text);

// ---- on-disk formats ----

/// Versioned little-endian binary, magic "CPTGRID1": a JSON header carrying
/// axes, units, mask, and field names, followed by raw f64 payloads.
void write_cpt_grid(const std::string& path, const FieldSet& fs);
FieldSet read_cpt_grid(const std::string& path);

/// Long-format interchange CSV: time,lat,lon,field,value with ISO-8601 UTC
/// times.  Doubles are printed round-trip exact.
void write_long_csv(const std::string& path, const FieldSet& fs);
FieldSet read_long_csv(const std::string& path);

}  // namespace cpt
