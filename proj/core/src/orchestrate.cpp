#include "cpt/orchestrate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <map>
#include <set>

#include <json.hpp>

#include "cpt/binary_io.hpp"
#include "cpt/dates.hpp"
#include "cpt/errors.hpp"
#include "cpt/evaluation.hpp"
#include "cpt/forecast.hpp"
#include "cpt/parallel.hpp"
#include "cpt/svg.hpp"

namespace fs = std::filesystem;

namespace cpt {

namespace {

void atomic_write(const std::string& path, std::string_view bytes) {
  const std::string tmp = path + ".tmp";
  write_file(tmp, bytes);
  fs::rename(tmp, path);
}

std::map<std::int64_t, int> day_index(const GridTimeSeries& g) {
  std::map<std::int64_t, int> idx;
  for (int t = 0; t < g.n_times(); ++t) idx[day_of_second(g.times[std::size_t(t)])] = t;
  return idx;
}

int require_day(const std::map<std::int64_t, int>& idx, std::int64_t day, const char* what) {
  const auto it = idx.find(day);
  if (it == idx.end())
    throw data_error(std::string(what) + ": no data for " + format_iso_date(day));
  return it->second;
}

/// Input fields are all fields in the inputs file except the precip field.
std::vector<std::string> input_field_names(const FieldSet& inputs, const std::string& precip) {
  std::vector<std::string> names;
  for (const auto& n : inputs.names)
    if (n != precip) names.push_back(n);
  if (names.empty()) throw data_error("inputs file contains no input fields");
  return names;
}

struct BiasAccum {
  double abs_sum = 0.0, sq_sum = 0.0;
  long long n = 0;
  void add(double forecast, double observed) {
    const double d = forecast - observed;
    abs_sum += std::abs(d);
    sq_sum += d * d;
    ++n;
  }
  SeasonBias finish(const std::string& scope) const {
    SeasonBias b;
    b.scope = scope;
    b.n = n;
    if (n > 0) {
      b.mab = abs_sum / double(n);
      b.rmsb = std::sqrt(sq_sum / double(n));
    }
    return b;
  }
};

/// "all" plus the four meteorological seasons, in the paper's table order.
struct SeasonalBias {
  BiasAccum all, mam, jja, son, djf;
  void add(std::int64_t day, double forecast, double observed) {
    all.add(forecast, observed);
    switch (season_of_day(day)) {
      case Season::MAM: mam.add(forecast, observed); break;
      case Season::JJA: jja.add(forecast, observed); break;
      case Season::SON: son.add(forecast, observed); break;
      case Season::DJF: djf.add(forecast, observed); break;
    }
  }
  std::vector<SeasonBias> finish() const {
    return {all.finish("all"), mam.finish("MAM"), jja.finish("JJA"), son.finish("SON"),
            djf.finish("DJF")};
  }
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace

void RunConfig::validate_common() const {
  chain.validate();
  prior.validate();
  if (output_dir.empty()) throw config_error("output_dir is required");
  if (n_workers < 1) throw config_error("worker count must be >= 1");
  if (n_members < 1) throw config_error("forecast member count must be >= 1");
  if (train_end_day < train_start_day) throw config_error("empty training window");
  if (test_end_day < test_start_day) throw config_error("empty test window");
}

std::vector<GridCell> select_locations(const GridTimeSeries& obs, const LocationSelection& sel) {
  std::vector<GridCell> cells;
  for (int i = 0; i < obs.n_lat(); ++i)
    for (int j = 0; j < obs.n_lon(); ++j) {
      if (!obs.masked_in(i, j)) continue;
      switch (sel.mode) {
        case LocationSelection::Mode::All:
          break;
        case LocationSelection::Mode::BBox:
          if (obs.lat[std::size_t(i)] < sel.lat_min || obs.lat[std::size_t(i)] > sel.lat_max ||
              obs.lon[std::size_t(j)] < sel.lon_min || obs.lon[std::size_t(j)] > sel.lon_max)
            continue;
          break;
        case LocationSelection::Mode::Cell:
          if (i != sel.row || j != sel.col) continue;
          break;
      }
      cells.push_back({i, j});
    }
  if (cells.empty()) throw config_error("location selection matches no masked-in cells");
  return cells;
}

LocationData extract_location(const FieldSet& inputs, const GridTimeSeries& obs, GridCell cell,
                              std::int64_t start_day, std::int64_t end_day) {
  const auto obs_idx = day_index(obs);
  const auto in_idx = day_index(inputs.fields.front());
  const auto names = input_field_names(inputs, "");
  const int t_total = int(end_day - start_day + 1);

  LocationData data;
  data.inputs.resize(t_total, int(names.size()));
  data.precip.resize(t_total);
  data.calendar.resize(std::size_t(t_total));
  for (int k = 0; k < t_total; ++k) {
    const std::int64_t day = start_day + k;
    const int to = require_day(obs_idx, day, "observations");
    const int ti = require_day(in_idx, day, "inputs");
    data.calendar[std::size_t(k)] = day;
    data.precip[k] = obs.at(to, cell.row, cell.col);
    for (std::size_t r = 0; r < names.size(); ++r)
      data.inputs(k, int(r)) = inputs.field(names[r]).at(ti, cell.row, cell.col);
  }
  return data;
}

Eigen::MatrixXd extract_inputs(const FieldSet& inputs, GridCell cell, std::int64_t start_day,
                               std::int64_t end_day) {
  const auto in_idx = day_index(inputs.fields.front());
  const auto names = input_field_names(inputs, "");
  const int t_total = int(end_day - start_day + 1);
  Eigen::MatrixXd x(t_total, int(names.size()));
  for (int k = 0; k < t_total; ++k) {
    const int ti = require_day(in_idx, start_day + k, "inputs");
    for (std::size_t r = 0; r < names.size(); ++r)
      x(k, int(r)) = inputs.field(names[r]).at(ti, cell.row, cell.col);
  }
  return x;
}

std::string location_tag(GridCell cell) {
  return "r" + std::to_string(cell.row) + "_c" + std::to_string(cell.col);
}

namespace {

void write_failures(const std::string& output_dir, const std::vector<LocationStatus>& sts) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& s : sts)
    if (!s.ok)
      j.push_back({{"row", s.cell.row}, {"col", s.cell.col}, {"error", s.error}});
  atomic_write(output_dir + "/failures.json", nlohmann::json({{"failures", j}}).dump(2));
}

}  // namespace

TrainOutcome run_train(const RunConfig& cfg) {
  cfg.validate_common();
  const FieldSet inputs = read_cpt_grid(cfg.inputs_path);
  const FieldSet obs_fs = read_cpt_grid(cfg.observations_path);
  const GridTimeSeries& obs = obs_fs.field(cfg.precip_field);

  // The precip field may live in the same file as the inputs; drop it there.
  FieldSet in_only;
  for (std::size_t i = 0; i < inputs.names.size(); ++i)
    if (inputs.names[i] != cfg.precip_field) in_only.add(inputs.names[i], inputs.fields[i]);

  const std::vector<GridCell> cells = select_locations(obs, cfg.locations);
  fs::create_directories(cfg.output_dir + "/archives");
  fs::create_directories(cfg.output_dir + "/checkpoints");

  TrainOutcome outcome;
  outcome.locations.resize(cells.size());

  parallel_for(std::int64_t(cells.size()), cfg.n_workers, [&](long long k) {
    const GridCell cell = cells[std::size_t(k)];
    LocationStatus& status = outcome.locations[std::size_t(k)];
    status.cell = cell;
    const std::string tag = location_tag(cell);
    const std::string arch_path = cfg.output_dir + "/archives/loc_" + tag + ".arch";
    const std::string ckpt_path = cfg.output_dir + "/checkpoints/loc_" + tag + ".ckpt";

    if (fs::exists(arch_path)) {
      status.ok = true;
      status.skipped = true;
      return;
    }
    try {
      const LocationData data =
          extract_location(in_only, obs, cell, cfg.train_start_day, cfg.train_end_day);
      ChainConfig chain = cfg.chain;
      chain.seed = derive_seed(cfg.base_seed, std::uint64_t(cell.row), std::uint64_t(cell.col));

      const CheckpointSink sink = [&](const ChainState& st, const SampleArchive& partial) {
        write_checkpoint(ckpt_path + ".tmp", st, &partial);
        fs::rename(ckpt_path + ".tmp", ckpt_path);
      };
      SampleArchive archive;
      if (fs::exists(ckpt_path)) {
        const Checkpoint ck = read_checkpoint(ckpt_path);
        ChainState st = deserialize_chain_state(ck.state_blob, data);
        if (!ck.partial) throw data_error("checkpoint lacks the partial archive");
        archive = resume_chain(std::move(st), *ck.partial, data, chain, cfg.prior, sink);
      } else {
        archive = run_chain(data, chain, cfg.prior, sink);
      }
      write_archive(arch_path, archive);
      atomic_write(arch_path + ".json", archive_metadata_json(archive));
      status.ok = true;
    } catch (const chain_abort_error& e) {
      status.error = e.what();
      write_file(ckpt_path + ".crash", e.state_blob);
    } catch (const std::exception& e) {
      status.error = e.what();
    }
  });

  for (const auto& s : outcome.locations)
    if (!s.ok) ++outcome.n_failed;
  write_failures(cfg.output_dir, outcome.locations);
  return outcome;
}

ForecastOutcome run_forecast(const RunConfig& cfg) {
  cfg.validate_common();
  const FieldSet inputs = read_cpt_grid(cfg.inputs_path);
  const FieldSet obs_fs = read_cpt_grid(cfg.observations_path);
  const GridTimeSeries& obs = obs_fs.field(cfg.precip_field);
  FieldSet in_only;
  for (std::size_t i = 0; i < inputs.names.size(); ++i)
    if (inputs.names[i] != cfg.precip_field) in_only.add(inputs.names[i], inputs.fields[i]);

  const std::vector<GridCell> cells = select_locations(obs, cfg.locations);
  fs::create_directories(cfg.output_dir + "/forecasts");

  ForecastOutcome outcome;
  outcome.locations.resize(cells.size());
  const int inner_workers = cells.size() == 1 ? cfg.n_workers : 1;

  parallel_for(std::int64_t(cells.size()), cfg.n_workers, [&](long long k) {
    const GridCell cell = cells[std::size_t(k)];
    LocationStatus& status = outcome.locations[std::size_t(k)];
    status.cell = cell;
    const std::string tag = location_tag(cell);
    const std::string arch_path = cfg.output_dir + "/archives/loc_" + tag + ".arch";
    const std::string ens_path = cfg.output_dir + "/forecasts/loc_" + tag + ".ens";
    try {
      if (!fs::exists(arch_path)) throw data_error("no archive for location " + tag);
      const SampleArchive archive = read_archive(arch_path);
      const LocationData history =
          extract_location(in_only, obs, cell, cfg.train_start_day, cfg.train_end_day);
      const Eigen::MatrixXd future =
          extract_inputs(in_only, cell, cfg.test_start_day, cfg.test_end_day);

      const std::uint64_t seed = splitmix64(
          derive_seed(cfg.base_seed, std::uint64_t(cell.row), std::uint64_t(cell.col)) ^
          0x464F524543415354ULL);
      ForecastEnsemble e =
          posterior_predictive(archive, history, archive.final_z, future, cfg.n_members, seed,
                               cfg.forecast_reset, inner_workers);
      e.location_row = cell.row;
      e.location_col = cell.col;
      for (int t = 0; t < e.n_days(); ++t) e.calendar[std::size_t(t)] = cfg.test_start_day + t;

      write_ensemble(ens_path, e);
      atomic_write(ens_path + ".json", ensemble_metadata_json(e));
      if (e.n_members() >= 20) {
        const EnsembleSummary summary = ensemble_summaries(e, cfg.thresholds_mm);
        write_summary_csv(cfg.output_dir + "/forecasts/loc_" + tag + "_summary.csv", summary);
      }
      status.ok = true;
    } catch (const std::exception& e) {
      status.error = e.what();
    }
  });

  for (const auto& s : outcome.locations)
    if (!s.ok) ++outcome.n_failed;
  return outcome;
}

EvaluationReport run_evaluate(const RunConfig& cfg) {
  cfg.validate_common();
  const FieldSet obs_fs = read_cpt_grid(cfg.observations_path);
  const GridTimeSeries& obs = obs_fs.field(cfg.precip_field);
  const auto obs_idx = day_index(obs);

  std::optional<FieldSet> bench_fs;
  std::optional<std::map<std::int64_t, int>> bench_idx;
  if (!cfg.benchmark_path.empty()) {
    bench_fs = read_cpt_grid(cfg.benchmark_path);
    bench_idx = day_index(bench_fs->field(cfg.benchmark_field));
  }

  std::vector<std::string> ens_paths;
  const std::string fdir = cfg.output_dir + "/forecasts";
  if (fs::exists(fdir))
    for (const auto& entry : fs::directory_iterator(fdir))
      if (entry.path().extension() == ".ens") ens_paths.push_back(entry.path().string());
  std::sort(ens_paths.begin(), ens_paths.end());
  if (ens_paths.empty()) throw data_error("run_evaluate: no ensembles under " + fdir);

  SeasonalBias forecast_bias, benchmark_bias;
  std::vector<double> spread2, error2;
  const std::vector<double>& thresholds = cfg.thresholds_mm;
  std::vector<std::vector<double>> roc_prob(thresholds.size());
  std::vector<std::vector<std::uint8_t>> roc_event(thresholds.size());
  std::vector<double> pooled_obs, pooled_members, pooled_bench;
  std::vector<double> heat_fc, heat_obs, heat_bench_fc, heat_bench_obs;

  // Gridded series over the evaluated days for the cross-correlation maps.
  std::set<std::int64_t> eval_days_set;
  struct CellSeries {
    GridCell cell;
    std::vector<double> median, observed, bench;
    std::vector<std::int64_t> days;
  };
  std::vector<CellSeries> cell_series;

  long long n_days = 0;
  for (const std::string& path : ens_paths) {
    const ForecastEnsemble e = read_ensemble(path);
    const GridCell cell{e.location_row, e.location_col};
    if (cell.row < 0 || cell.row >= obs.n_lat() || cell.col < 0 || cell.col >= obs.n_lon() ||
        !obs.masked_in(cell.row, cell.col))
      throw data_error("ensemble " + path + " does not match a masked-in observation cell");

    const Eigen::VectorXd median = ensemble_median_series(e);
    CellSeries cs;
    cs.cell = cell;
    cs.days = e.calendar;

    std::vector<double> members(static_cast<std::size_t>(e.n_members()));
    for (int t = 0; t < e.n_days(); ++t) {
      const std::int64_t day = e.calendar[std::size_t(t)];
      const int to = require_day(obs_idx, day, "observations (alignment)");
      const double y_obs = obs.at(to, cell.row, cell.col);

      forecast_bias.add(day, median[t], y_obs);
      for (int m = 0; m < e.n_members(); ++m) members[std::size_t(m)] = e.members(m, t);
      const DaySpreadError se = day_spread_error(members, y_obs);
      spread2.push_back(se.spread2);
      error2.push_back(se.error2);

      for (std::size_t x = 0; x < thresholds.size(); ++x) {
        long long above = 0;
        for (double m : members)
          if (m > thresholds[x]) ++above;
        roc_prob[x].push_back(double(above) / double(e.n_members()));
        roc_event[x].push_back(y_obs > thresholds[x] ? 1 : 0);
      }

      pooled_obs.push_back(y_obs);
      for (double m : members) pooled_members.push_back(m);
      heat_fc.push_back(median[t]);
      heat_obs.push_back(y_obs);
      cs.median.push_back(median[t]);
      cs.observed.push_back(y_obs);
      eval_days_set.insert(day);

      if (bench_fs) {
        const GridTimeSeries& bg = bench_fs->field(cfg.benchmark_field);
        const int tb = require_day(*bench_idx, day, "benchmark (alignment)");
        const double b = bg.at(tb, cell.row, cell.col);
        benchmark_bias.add(day, b, y_obs);
        pooled_bench.push_back(b);
        heat_bench_fc.push_back(b);
        heat_bench_obs.push_back(y_obs);
        cs.bench.push_back(b);
      }
    }
    n_days = e.n_days();
    cell_series.push_back(std::move(cs));
  }

  EvaluationReport report;
  report.n_locations = std::int64_t(cell_series.size());
  report.n_days = n_days;
  report.forecast_bias = forecast_bias.finish();
  if (bench_fs) report.benchmark_bias = benchmark_bias.finish();
  report.thresholds = thresholds;
  report.base_rates = event_base_rates(pooled_obs, thresholds);

  nlohmann::json j;
  j["schema_version"] = 1;
  j["n_locations"] = report.n_locations;
  j["n_days_per_location"] = report.n_days;
  j["notes"] = {"ROC pools every day and location as independent events",
                "spread is measured around the ensemble median, not the mean"};

  auto bias_json = [](const std::vector<SeasonBias>& rows) {
    nlohmann::json out;
    for (const auto& r : rows)
      out[r.scope] = {{"mab", r.mab}, {"rmsb", r.rmsb}, {"n", r.n}};
    return out;
  };
  j["forecast_bias"] = bias_json(report.forecast_bias);
  if (bench_fs) j["benchmark_bias"] = bias_json(report.benchmark_bias);

  // ROC per threshold; a threshold with a single observed class is reported
  // as null rather than failing the run.
  for (std::size_t x = 0; x < thresholds.size(); ++x) {
    const std::string key = fmt(thresholds[x]);
    try {
      const RocCurve curve = roc(roc_prob[x], roc_event[x]);
      report.auc.push_back(curve.auc);
      j["roc"][key] = {{"auc", curve.auc},
                       {"n_events", curve.n_events},
                       {"n_non_events", curve.n_non_events}};
      std::string csv = "threshold,fpr,tpr\n";
      for (const auto& pnt : curve.points)
        csv += fmt(pnt.threshold) + "," + fmt(pnt.fpr) + "," + fmt(pnt.tpr) + "\n";
      fs::create_directories(cfg.output_dir + "/evaluation");
      atomic_write(cfg.output_dir + "/evaluation/roc_" + key + "mm.csv", csv);
      if (cfg.render_svg) {
        SvgSeries s;
        for (const auto& pnt : curve.points) {
          s.x.push_back(pnt.fpr);
          s.y.push_back(pnt.tpr);
        }
        s.label = "AUC=" + fmt(curve.auc);
        const std::vector<SvgSeries> ss{s};
        atomic_write(cfg.output_dir + "/evaluation/roc_" + key + "mm.svg",
                     render_curves_svg("ROC, precip > " + key + " mm", "false positive rate",
                                       "true positive rate", ss, true));
      }
    } catch (const data_error&) {
      report.auc.push_back(std::numeric_limits<double>::quiet_NaN());
      j["roc"][key] = nullptr;
    }
  }
  j["base_rates"] = report.base_rates;

  fs::create_directories(cfg.output_dir + "/evaluation");

  // Spread-skill
  if (spread2.size() >= 16) {
    const auto bins = spread_skill(spread2, error2, 16);
    std::string csv = "bin,rms_spread,rms_error,n_days\n";
    nlohmann::json jb = nlohmann::json::array();
    SvgSeries s;
    for (std::size_t b = 0; b < bins.size(); ++b) {
      csv += std::to_string(b) + "," + fmt(bins[b].rms_spread) + "," + fmt(bins[b].rms_error) +
             "," + std::to_string(bins[b].n_days) + "\n";
      jb.push_back({{"rms_spread", bins[b].rms_spread},
                    {"rms_error", bins[b].rms_error},
                    {"n_days", bins[b].n_days}});
      s.x.push_back(bins[b].rms_spread);
      s.y.push_back(bins[b].rms_error);
    }
    atomic_write(cfg.output_dir + "/evaluation/spread_skill.csv", csv);
    j["spread_skill"] = jb;
    if (cfg.render_svg) {
      const std::vector<SvgSeries> ss{s};
      atomic_write(cfg.output_dir + "/evaluation/spread_skill.svg",
                   render_curves_svg("Spread-skill", "RMS spread (mm)", "RMS error (mm)", ss,
                                     true));
    }
  }

  // Exceedance curves over a common x grid.
  double x_max = 1.0;
  for (double v : pooled_obs) x_max = std::max(x_max, v);
  std::vector<double> x_curve;
  for (int k = 0; k <= 100; ++k) x_curve.push_back(x_max * double(k) / 100.0);
  const auto curve_obs = exceedance_curve(pooled_obs, x_curve);
  const auto curve_fc = exceedance_curve(pooled_members, x_curve);
  {
    std::string csv = "x_mm,observed,forecast";
    if (bench_fs) csv += ",benchmark";
    csv += "\n";
    std::vector<double> curve_b;
    if (bench_fs) curve_b = exceedance_curve(pooled_bench, x_curve);
    for (std::size_t k = 0; k < x_curve.size(); ++k) {
      csv += fmt(x_curve[k]) + "," + fmt(curve_obs[k]) + "," + fmt(curve_fc[k]);
      if (bench_fs) csv += "," + fmt(curve_b[k]);
      csv += "\n";
    }
    atomic_write(cfg.output_dir + "/evaluation/exceedance.csv", csv);
    j["exceedance"] = {{"x_mm", x_curve}, {"observed", curve_obs}, {"forecast", curve_fc}};
    if (bench_fs) j["exceedance"]["benchmark"] = curve_b;
    if (cfg.render_svg) {
      std::vector<SvgSeries> ss(2);
      ss[0] = {x_curve, curve_obs, "observed", "#222222"};
      ss[1] = {x_curve, curve_fc, "forecast", "#1f6fb2"};
      if (bench_fs) ss.push_back({x_curve, curve_b, "benchmark", "#b23a1f"});
      atomic_write(cfg.output_dir + "/evaluation/exceedance.svg",
                   render_curves_svg("P(precip > x)", "x (mm)", "probability", ss, false));
    }
  }

  // Log-frequency heatmap (median forecast vs observed).
  {
    const Histogram2d h = log_density_heatmap(heat_fc, heat_obs, 40);
    std::string csv = "fc_bin,obs_bin,count\n";
    for (int a = 0; a < h.n_bins; ++a)
      for (int b = 0; b < h.n_bins; ++b)
        csv += std::to_string(a) + "," + std::to_string(b) + "," +
               std::to_string(h.counts[std::size_t(a * h.n_bins + b)]) + "\n";
    atomic_write(cfg.output_dir + "/evaluation/heatmap_forecast.csv", csv);
    if (cfg.render_svg) {
      Eigen::MatrixXd lm(h.n_bins, h.n_bins);
      double vmax = 0.0;
      for (int a = 0; a < h.n_bins; ++a)
        for (int b = 0; b < h.n_bins; ++b) {
          const long long c = h.counts[std::size_t(a * h.n_bins + b)];
          lm(a, b) = c > 0 ? std::log(double(c)) : std::numeric_limits<double>::quiet_NaN();
          if (c > 0) vmax = std::max(vmax, lm(a, b));
        }
      atomic_write(cfg.output_dir + "/evaluation/heatmap_forecast.svg",
                   render_matrix_svg("log frequency (forecast vs observed)", lm, 0.0, vmax));
    }
  }

  // Cross-correlation maps against the mask's center-of-mass cell.
  if (!cell_series.empty() && n_days > 1) {
    std::vector<std::int64_t> eval_days(eval_days_set.begin(), eval_days_set.end());
    std::map<std::int64_t, int> day_pos;
    for (std::size_t k = 0; k < eval_days.size(); ++k) day_pos[eval_days[k]] = int(k);

    auto make_grid = [&](auto value_of) {
      std::vector<std::int64_t> secs(eval_days.size());
      for (std::size_t k = 0; k < eval_days.size(); ++k) secs[k] = eval_days[k] * kSecondsPerDay;
      GridTimeSeries g = GridTimeSeries::make(secs, obs.lat, obs.lon, "mm");
      g.mask.assign(g.mask.size(), 0);
      for (const auto& cs : cell_series) {
        g.mask[std::size_t(cs.cell.row * g.n_lon() + cs.cell.col)] = 1;
        for (std::size_t t = 0; t < cs.days.size(); ++t)
          g.at(day_pos[cs.days[t]], cs.cell.row, cs.cell.col) = value_of(cs, t);
      }
      return g;
    };
    const GridTimeSeries obs_grid =
        make_grid([](const CellSeries& cs, std::size_t t) { return cs.observed[t]; });
    const auto [ri, rj] = mask_center_of_mass(obs_grid);
    auto write_map = [&](const GridTimeSeries& g, const std::string& name) {
      const Eigen::MatrixXd m = cross_correlation_map(g, ri, rj);
      std::string csv = "row,col,corr\n";
      for (int i = 0; i < m.rows(); ++i)
        for (int jx = 0; jx < m.cols(); ++jx)
          if (!std::isnan(m(i, jx)))
            csv += std::to_string(i) + "," + std::to_string(jx) + "," + fmt(m(i, jx)) + "\n";
      atomic_write(cfg.output_dir + "/evaluation/crosscorr_" + name + ".csv", csv);
      if (cfg.render_svg)
        atomic_write(cfg.output_dir + "/evaluation/crosscorr_" + name + ".svg",
                     render_matrix_svg("cross-correlation (" + name + ")", m, -1.0, 1.0));
    };
    write_map(obs_grid, "observed");
    write_map(make_grid([](const CellSeries& cs, std::size_t t) { return cs.median[t]; }),
              "forecast");
    if (bench_fs)
      write_map(make_grid([](const CellSeries& cs, std::size_t t) { return cs.bench[t]; }),
                "benchmark");
    j["crosscorr_reference"] = {{"row", ri}, {"col", rj}};
  }

  // Bias tables in the paper's season order.
  {
    std::string csv = "series,scope,mab,rmsb,n_days\n";
    auto add_rows = [&](const char* series, const std::vector<SeasonBias>& rows) {
      for (const auto& r : rows)
        csv += std::string(series) + "," + r.scope + "," + fmt(r.mab) + "," + fmt(r.rmsb) + "," +
               std::to_string(r.n) + "\n";
    };
    add_rows("forecast", report.forecast_bias);
    if (bench_fs) add_rows("benchmark", report.benchmark_bias);
    atomic_write(cfg.output_dir + "/evaluation/metrics.csv", csv);
  }

  report.json = j.dump(2);
  atomic_write(cfg.output_dir + "/evaluation/report.json", report.json);
  return report;
}

std::string build_report(const std::string& run_dir) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["run_dir"] = run_dir;

  const std::string cfg_path = run_dir + "/config_used.txt";
  if (fs::exists(cfg_path)) j["config_used"] = read_file(cfg_path);

  nlohmann::json locs = nlohmann::json::array();
  const std::string adir = run_dir + "/archives";
  if (fs::exists(adir)) {
    std::vector<std::string> paths;
    for (const auto& entry : fs::directory_iterator(adir))
      if (entry.path().extension() == ".json") paths.push_back(entry.path().string());
    std::sort(paths.begin(), paths.end());
    for (const auto& p : paths) {
      try {
        nlohmann::json meta = nlohmann::json::parse(read_file(p));
        meta["file"] = fs::path(p).stem().string();
        locs.push_back(meta);
      } catch (const std::exception& e) {
        locs.push_back({{"file", fs::path(p).stem().string()}, {"error", e.what()}});
      }
    }
  }
  j["archives"] = locs;

  const std::string failures = run_dir + "/failures.json";
  if (fs::exists(failures)) {
    try {
      j["failures"] = nlohmann::json::parse(read_file(failures)).at("failures");
    } catch (const std::exception&) {
      j["failures"] = nullptr;
    }
  } else {
    j["failures"] = nlohmann::json::array();
  }

  const std::string eval = run_dir + "/evaluation/report.json";
  if (fs::exists(eval)) {
    try {
      j["evaluation"] = nlohmann::json::parse(read_file(eval));
    } catch (const std::exception&) {
      j["evaluation"] = nullptr;
    }
  }

  const std::string out = j.dump(2);
  fs::create_directories(run_dir);
  atomic_write(run_dir + "/report.json", out);
  return out;
}

}  // namespace cpt
