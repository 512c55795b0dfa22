#include "cpt/synthetic.hpp"

#include <cmath>

#include <json.hpp>

#include "cpt/dates.hpp"
#include "cpt/errors.hpp"
#include "cpt/forecast.hpp"
#include "cpt/math_util.hpp"
#include "cpt/rng.hpp"

namespace cpt {

std::vector<SyntheticLocation> synthesize(const SyntheticSpec& spec) {
  if (spec.n_days < 2) throw config_error("synthesize: need at least two days");
  if (spec.n_rows < 1 || spec.n_cols < 1) throw config_error("synthesize: empty grid");
  const ParamDims d = spec.truth.dims();

  std::vector<SyntheticLocation> out;
  out.reserve(std::size_t(spec.n_rows) * std::size_t(spec.n_cols));
  for (int row = 0; row < spec.n_rows; ++row)
    for (int col = 0; col < spec.n_cols; ++col) {
      Rng rng(derive_seed(spec.seed, std::uint64_t(row), std::uint64_t(col)));

      Eigen::MatrixXd x(spec.n_days, d.n_inputs);
      for (int r = 0; r < d.n_inputs; ++r) {
        const double phase = rng.uniform(0.0, 2.0 * kPi);
        for (int t = 0; t < spec.n_days; ++t)
          x(t, r) = spec.input_amplitude *
                        std::sin(2.0 * kPi * double(t) / spec.period_days + phase) +
                    spec.input_noise * rng.normal();
        // Exact column standardization (population moments).
        const double mean = x.col(r).mean();
        const double sd = std::sqrt((x.col(r).array() - mean).square().mean());
        x.col(r) = (x.col(r).array() - mean) / sd;
      }

      LocationData data;
      data.inputs = x;
      data.calendar.resize(std::size_t(spec.n_days));
      for (int t = 0; t < spec.n_days; ++t)
        data.calendar[std::size_t(t)] = spec.start_day + t;

      LocationData empty_history;
      const Trajectory traj =
          simulate_forward(spec.truth, empty_history, {}, x, rng, /*reset_recursion=*/true);
      data.precip = traj.y;

      SyntheticLocation loc;
      loc.row = row;
      loc.col = col;
      loc.data = std::move(data);
      loc.z_truth = traj.z;
      out.push_back(std::move(loc));
    }
  return out;
}

FieldSet synthetic_fieldset(const SyntheticSpec& spec,
                            const std::vector<SyntheticLocation>& locations) {
  const ParamDims d = spec.truth.dims();
  std::vector<std::int64_t> times(std::size_t(spec.n_days));
  for (int t = 0; t < spec.n_days; ++t)
    times[std::size_t(t)] = (spec.start_day + t) * kSecondsPerDay;
  // Index-derived axes: synthetic cells do not model a real geometry.
  std::vector<double> lat(static_cast<std::size_t>(spec.n_rows)), lon(static_cast<std::size_t>(spec.n_cols));
  for (int i = 0; i < spec.n_rows; ++i) lat[std::size_t(i)] = 50.0 + 0.1 * i;
  for (int j = 0; j < spec.n_cols; ++j) lon[std::size_t(j)] = -5.0 + 0.1 * j;

  FieldSet fs;
  for (int r = 0; r < d.n_inputs; ++r) {
    GridTimeSeries g = GridTimeSeries::make(times, lat, lon, "standardized");
    for (const auto& loc : locations)
      for (int t = 0; t < spec.n_days; ++t) g.at(t, loc.row, loc.col) = loc.data.inputs(t, r);
    fs.add("x" + std::to_string(r), std::move(g));
  }
  GridTimeSeries gp = GridTimeSeries::make(times, lat, lon, "mm");
  for (const auto& loc : locations)
    for (int t = 0; t < spec.n_days; ++t) gp.at(t, loc.row, loc.col) = loc.data.precip[t];
  fs.add("precip", std::move(gp));
  return fs;
}

std::string synthetic_truth_json(const SyntheticSpec& spec) {
  const ParamDims d = spec.truth.dims();
  nlohmann::json j;
  j["schema_version"] = 1;
  j["n_days"] = spec.n_days;
  j["n_rows"] = spec.n_rows;
  j["n_cols"] = spec.n_cols;
  j["seed"] = spec.seed;
  j["start_day"] = spec.start_day;
  j["input_amplitude"] = spec.input_amplitude;
  j["input_noise"] = spec.input_noise;
  j["period_days"] = spec.period_days;
  j["dims"] = {{"n_inputs", d.n_inputs}, {"ar_order", d.ar_order}, {"ma_order", d.ma_order}};
  const Eigen::VectorXd v = spec.truth.to_vector();
  j["theta"] = std::vector<double>(v.data(), v.data() + v.size());
  return j.dump(2);
}

}  // namespace cpt
