// cpt -- train per-location precipitation models on gridded inputs, forecast
// probabilistically, and verify the results.
//
// Subcommands: ingest, simulate, train, forecast, evaluate, report.
// Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
// divergence (per-location detail in <output>/failures.json).

#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include "cpt/binary_io.hpp"
#include "cpt/dates.hpp"
#include "cpt/errors.hpp"
#include "cpt/grid.hpp"
#include "cpt/orchestrate.hpp"
#include "cpt/synthetic.hpp"

namespace fs = std::filesystem;

namespace {

struct CommonOpts {
  std::string inputs, observations, precip_field = "precip";
  std::string benchmark, benchmark_field = "precip";
  std::string output_dir;
  std::string train_start, train_end, test_start, test_end;
  std::string location_mode = "all";
  double lat_min = 0, lat_max = 0, lon_min = 0, lon_max = 0;
  int row = -1, col = -1;
  long long n_steps = 50000, burn_in = 15000, checkpoint_every = 1000;
  int thin = 1, ar_order = 5, ma_order = 5, z_horizon = 0;
  double w_theta = 1.0, w_tau = 0.2, w_z = 3e-3;
  double k0_lambda = -0.46, k0_mu = 1.44, k0_omega = -0.45;
  double tau_beta_shape = 2.8, tau_beta_rate = 1.0 / 2.3;
  double tau_arma_shape = 1.3, tau_arma_rate = 1.0 / 65.0, tau_arma_shift = 16.0;
  int members = 100;
  std::vector<double> thresholds = {5.0, 15.0, 25.0};
  int workers = 0;  // 0: take CPT_WORKERS or 1
  std::uint64_t seed = 0;
  bool forecast_reset = false;
  bool svg = false;
};

void add_common_options(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--inputs", o.inputs, "CPT-grid with the standardized input fields");
  cmd->add_option("--observations", o.observations, "CPT-grid with observed precipitation");
  cmd->add_option("--precip-field", o.precip_field, "Observed precipitation field name");
  cmd->add_option("--output-dir", o.output_dir, "Run directory for all outputs");
  cmd->add_option("--train-start", o.train_start, "First training day, YYYY-MM-DD");
  cmd->add_option("--train-end", o.train_end, "Last training day, YYYY-MM-DD");
  cmd->add_option("--test-start", o.test_start, "First forecast day, YYYY-MM-DD");
  cmd->add_option("--test-end", o.test_end, "Last forecast day, YYYY-MM-DD");
  cmd->add_option("--locations", o.location_mode, "all | bbox | cell");
  cmd->add_option("--lat-min", o.lat_min);
  cmd->add_option("--lat-max", o.lat_max);
  cmd->add_option("--lon-min", o.lon_min);
  cmd->add_option("--lon-max", o.lon_max);
  cmd->add_option("--row", o.row, "Cell row for --locations cell");
  cmd->add_option("--col", o.col, "Cell column for --locations cell");
  cmd->add_option("--n-steps", o.n_steps, "Gibbs steps per chain");
  cmd->add_option("--burn-in", o.burn_in, "Discarded initial steps");
  cmd->add_option("--thin", o.thin);
  cmd->add_option("--p", o.ar_order, "AR order");
  cmd->add_option("--q", o.ma_order, "MA order");
  cmd->add_option("--w-theta", o.w_theta, "Scan weight of the theta block");
  cmd->add_option("--w-tau", o.w_tau, "Scan weight of the precision block");
  cmd->add_option("--w-z", o.w_z, "Scan weight per day of the latent counts");
  cmd->add_option("--z-horizon", o.z_horizon,
                  "0 = exact latent conditional; H > 0 truncates to max(p,q)*H days (approximate)");
  cmd->add_option("--checkpoint-every", o.checkpoint_every, "Steps between checkpoints (0 = off)");
  cmd->add_option("--k0-lambda", o.k0_lambda);
  cmd->add_option("--k0-mu", o.k0_mu);
  cmd->add_option("--k0-omega", o.k0_omega);
  cmd->add_option("--tau-beta-shape", o.tau_beta_shape);
  cmd->add_option("--tau-beta-rate", o.tau_beta_rate);
  cmd->add_option("--tau-arma-shape", o.tau_arma_shape);
  cmd->add_option("--tau-arma-rate", o.tau_arma_rate);
  cmd->add_option("--tau-arma-shift", o.tau_arma_shift);
  cmd->add_option("--members", o.members, "Posterior predictive ensemble size");
  cmd->add_option("--thresholds", o.thresholds, "Event thresholds in mm");
  cmd->add_option("--workers", o.workers, "Worker pool size (default: CPT_WORKERS or 1)");
  cmd->add_option("--seed", o.seed, "Base seed; per-location streams derive from it");
  cmd->add_option("--benchmark", o.benchmark, "Optional benchmark forecast CPT-grid");
  cmd->add_option("--benchmark-field", o.benchmark_field);
  cmd->add_flag("--forecast-reset", o.forecast_reset,
                "Restart the latent recursion at the test boundary");
  cmd->add_flag("--svg", o.svg, "Render SVG figures alongside the CSV reports");
}

cpt::RunConfig to_run_config(const CommonOpts& o) {
  cpt::RunConfig cfg;
  cfg.inputs_path = o.inputs;
  cfg.observations_path = o.observations.empty() ? o.inputs : o.observations;
  cfg.precip_field = o.precip_field;
  cfg.benchmark_path = o.benchmark;
  cfg.benchmark_field = o.benchmark_field;
  cfg.output_dir = o.output_dir;
  if (o.location_mode == "all") {
    cfg.locations.mode = cpt::LocationSelection::Mode::All;
  } else if (o.location_mode == "bbox") {
    cfg.locations.mode = cpt::LocationSelection::Mode::BBox;
    cfg.locations.lat_min = o.lat_min;
    cfg.locations.lat_max = o.lat_max;
    cfg.locations.lon_min = o.lon_min;
    cfg.locations.lon_max = o.lon_max;
  } else if (o.location_mode == "cell") {
    cfg.locations.mode = cpt::LocationSelection::Mode::Cell;
    cfg.locations.row = o.row;
    cfg.locations.col = o.col;
  } else {
    throw cpt::config_error("--locations must be all, bbox, or cell");
  }
  cfg.chain.n_steps = o.n_steps;
  cfg.chain.n_burn_in = o.burn_in;
  cfg.chain.thin = o.thin;
  cfg.chain.ar_order = o.ar_order;
  cfg.chain.ma_order = o.ma_order;
  cfg.chain.w_theta = o.w_theta;
  cfg.chain.w_tau = o.w_tau;
  cfg.chain.w_z_per_day = o.w_z;
  cfg.chain.checkpoint_every = o.checkpoint_every;
  cfg.chain.z_horizon_multiplier = o.z_horizon;
  cfg.prior.k0_lambda = o.k0_lambda;
  cfg.prior.k0_mu = o.k0_mu;
  cfg.prior.k0_omega = o.k0_omega;
  cfg.prior.tau_beta_shape = o.tau_beta_shape;
  cfg.prior.tau_beta_rate = o.tau_beta_rate;
  cfg.prior.tau_arma_shape = o.tau_arma_shape;
  cfg.prior.tau_arma_rate = o.tau_arma_rate;
  cfg.prior.tau_arma_shift = o.tau_arma_shift;
  auto day = [](const std::string& s, const char* what) {
    if (s.empty()) throw cpt::config_error(std::string(what) + " is required (YYYY-MM-DD)");
    return cpt::parse_iso_date(s);
  };
  cfg.train_start_day = day(o.train_start, "--train-start");
  cfg.train_end_day = day(o.train_end, "--train-end");
  cfg.test_start_day = day(o.test_start, "--test-start");
  cfg.test_end_day = day(o.test_end, "--test-end");
  cfg.n_members = o.members;
  cfg.thresholds_mm = o.thresholds;
  if (o.workers > 0) {
    cfg.n_workers = o.workers;
  } else if (const char* env = std::getenv("CPT_WORKERS")) {
    cfg.n_workers = std::max(1, std::atoi(env));
  } else {
    cfg.n_workers = 1;
  }
  cfg.base_seed = o.seed;
  cfg.forecast_reset = o.forecast_reset;
  cfg.render_svg = o.svg;
  return cfg;
}

void echo_config(const CLI::App& app, const std::string& output_dir) {
  fs::create_directories(output_dir);
  cpt::write_file(output_dir + "/config_used.txt", app.config_to_str(true, true));
}

// ---- ingest ----

struct IngestOpts {
  std::string input, output;
  std::vector<std::string> units;        // field=unit assignments
  std::vector<std::string> expect_unit;  // field=unit validations
  bool do_daily_mean = false;
  int smooth = 0;
  std::string wind_from;       // "u,v"
  std::string advection_from;  // "u,v,A"
  std::string regrid_to;       // CPT-grid whose axes define the target
  bool flat_metric = false;
  bool do_standardize = false;
  std::string stats_out, stats_in;
};

std::pair<std::string, std::string> split_kv(const std::string& s, const char* what) {
  const auto eq = s.find('=');
  if (eq == std::string::npos || eq == 0)
    throw cpt::config_error(std::string(what) + ": expected field=value, got '" + s + "'");
  return {s.substr(0, eq), s.substr(eq + 1)};
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(s.substr(start));
      break;
    }
    out.push_back(s.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

bool is_cpt_grid(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw cpt::data_error("cannot open file: " + path);
  char magic[8] = {};
  const std::size_t n = std::fread(magic, 1, 8, f);
  std::fclose(f);
  return n == 8 && std::string_view(magic, 8) == "CPTGRID1";
}

int cmd_ingest(const IngestOpts& o) {
  cpt::FieldSet fs_data = is_cpt_grid(o.input) ? cpt::read_cpt_grid(o.input)
                                               : cpt::read_long_csv(o.input);
  for (const auto& kv : o.units) {
    const auto [field, unit] = split_kv(kv, "--units");
    fs_data.field(field).unit = unit;
  }
  for (const auto& kv : o.expect_unit) {
    const auto [field, unit] = split_kv(kv, "--expect-unit");
    if (fs_data.field(field).unit != unit)
      throw cpt::data_error("unit mismatch for '" + field + "': have '" +
                            fs_data.field(field).unit + "', expected '" + unit + "'");
  }
  if (o.smooth > 0)
    for (auto& f : fs_data.fields) f = cpt::boxcar_smooth(f, o.smooth);
  if (o.do_daily_mean)
    for (auto& f : fs_data.fields) f = cpt::daily_mean(f);
  if (!o.wind_from.empty()) {
    const auto parts = split_list(o.wind_from);
    if (parts.size() != 2) throw cpt::config_error("--derive-wind expects u,v");
    fs_data.add("wind_speed", cpt::wind_speed(fs_data.field(parts[0]), fs_data.field(parts[1])));
  }
  if (!o.advection_from.empty()) {
    const auto parts = split_list(o.advection_from);
    if (parts.size() != 3) throw cpt::config_error("--derive-advection expects u,v,field");
    cpt::GradientMetric metric;
    metric.equirectangular = !o.flat_metric;
    fs_data.add("adv_" + parts[2],
                cpt::advection_magnitude(fs_data.field(parts[0]), fs_data.field(parts[1]),
                                         fs_data.field(parts[2]), metric));
  }
  if (!o.regrid_to.empty()) {
    const cpt::FieldSet target = cpt::read_cpt_grid(o.regrid_to);
    const auto& axes = target.fields.front();
    cpt::FieldSet fine;
    for (std::size_t i = 0; i < fs_data.names.size(); ++i) {
      cpt::GridTimeSeries g = cpt::regrid_spline(fs_data.fields[i], axes.lat, axes.lon);
      g.mask = axes.mask;
      fine.add(fs_data.names[i], std::move(g));
    }
    fs_data = std::move(fine);
  }
  if (!o.stats_in.empty()) {
    const auto stats = cpt::parse_field_stats_json(cpt::read_file(o.stats_in));
    cpt::apply_standardization(fs_data, stats);
  } else if (o.do_standardize) {
    const auto stats = cpt::standardize(fs_data);
    if (!o.stats_out.empty()) cpt::write_file(o.stats_out, cpt::field_stats_json(stats));
  }
  if (o.output.size() >= 4 && o.output.substr(o.output.size() - 4) == ".csv")
    cpt::write_long_csv(o.output, fs_data);
  else
    cpt::write_cpt_grid(o.output, fs_data);
  std::printf("ingest: wrote %zu field(s) to %s\n", fs_data.names.size(), o.output.c_str());
  return 0;
}

// ---- simulate ----

struct SimulateOpts {
  std::string output_dir;
  int days = 730, rows = 1, cols = 1, n_inputs = 3, ar_order = 1, ma_order = 1;
  double amplitude = 1.0, noise = 0.5;
  std::uint64_t seed = 0;
  std::string start = "1995-01-01";
  std::vector<double> theta;  // optional flat vector override
};

int cmd_simulate(const SimulateOpts& o) {
  cpt::SyntheticSpec spec;
  spec.n_days = o.days;
  spec.n_rows = o.rows;
  spec.n_cols = o.cols;
  spec.seed = o.seed;
  spec.input_amplitude = o.amplitude;
  spec.input_noise = o.noise;
  spec.start_day = cpt::parse_iso_date(o.start);
  const cpt::ParamDims dims{o.n_inputs, o.ar_order, o.ma_order};
  if (o.theta.empty()) {
    spec.truth = cpt::ModelParams::zeros(dims);
    spec.truth.k_lambda = -0.2;
    spec.truth.k_mu = 1.1;
    spec.truth.k_omega = -0.4;
    for (int r = 0; r < dims.n_inputs; ++r) {
      spec.truth.beta_lambda[r] = 0.3 / (r + 1);
      spec.truth.beta_mu[r] = 0.2 / (r + 1);
      spec.truth.beta_omega[r] = 0.05;
    }
    if (dims.ar_order > 0) {
      spec.truth.phi_lambda[0] = 0.25;
      spec.truth.phi_mu[0] = 0.15;
    }
    if (dims.ma_order > 0) {
      spec.truth.gamma_lambda[0] = 0.15;
      spec.truth.gamma_mu[0] = 0.1;
    }
  } else {
    if (int(o.theta.size()) != dims.param_count())
      throw cpt::config_error("--theta needs " + std::to_string(dims.param_count()) +
                              " values for this (inputs, p, q)");
    Eigen::VectorXd v(dims.param_count());
    for (int i = 0; i < v.size(); ++i) v[i] = o.theta[std::size_t(i)];
    spec.truth = cpt::ModelParams::from_vector(dims, v);
  }
  fs::create_directories(o.output_dir);
  const auto locs = cpt::synthesize(spec);
  cpt::write_cpt_grid(o.output_dir + "/data.cptg", cpt::synthetic_fieldset(spec, locs));
  cpt::write_file(o.output_dir + "/truth.json", cpt::synthetic_truth_json(spec));
  std::printf("simulate: %d location(s) x %d day(s) -> %s\n", o.rows * o.cols, o.days,
              (o.output_dir + "/data.cptg").c_str());
  return 0;
}

int report_outcome(const char* verb, const std::vector<cpt::LocationStatus>& sts, int n_failed,
                   int fail_code) {
  for (const auto& s : sts)
    if (!s.ok)
      std::fprintf(stderr, "%s failed at r%d c%d: %s\n", verb, s.cell.row, s.cell.col,
                   s.error.c_str());
  std::printf("%s: %zu location(s), %d failed\n", verb, sts.size(), n_failed);
  return n_failed > 0 ? fail_code : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"compound-Poisson precipitation modelling and verification"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Flat key=value configuration file; flags override it");
  app.allow_config_extras(CLI::config_extras_mode::error);

  IngestOpts ingest;
  CLI::App* c_ingest = app.add_subcommand("ingest", "Validate/convert/preprocess gridded data");
  c_ingest->fallthrough();
  c_ingest->add_option("--input", ingest.input, "CSV or CPT-grid input")->required();
  c_ingest->add_option("--output", ingest.output, "Output path (.cptg binary or .csv)")
      ->required();
  c_ingest->add_option("--units", ingest.units, "Assign units, field=unit");
  c_ingest->add_option("--expect-unit", ingest.expect_unit, "Validate units, field=unit");
  c_ingest->add_flag("--daily-mean", ingest.do_daily_mean, "Collapse sub-daily slots to daily means");
  c_ingest->add_option("--smooth", ingest.smooth, "Boxcar half-width applied before anything else");
  c_ingest->add_option("--derive-wind", ingest.wind_from, "u,v -> adds wind_speed");
  c_ingest->add_option("--derive-advection", ingest.advection_from, "u,v,field -> adds adv_<field>");
  c_ingest->add_option("--regrid-to", ingest.regrid_to, "Regrid onto this CPT-grid's axes");
  c_ingest->add_flag("--flat-metric", ingest.flat_metric, "Degree spacing for gradients (testing)");
  c_ingest->add_flag("--standardize", ingest.do_standardize, "Standardize fields over space-time");
  c_ingest->add_option("--stats-out", ingest.stats_out, "Write standardization statistics (JSON)");
  c_ingest->add_option("--stats-in", ingest.stats_in, "Apply stored statistics instead");

  SimulateOpts sim;
  CLI::App* c_sim = app.add_subcommand("simulate", "Generate a synthetic dataset + truth record");
  c_sim->fallthrough();
  c_sim->add_option("--output-dir", sim.output_dir)->required();
  c_sim->add_option("--days", sim.days);
  c_sim->add_option("--rows", sim.rows);
  c_sim->add_option("--cols", sim.cols);
  c_sim->add_option("--inputs", sim.n_inputs, "Number of input fields");
  c_sim->add_option("--p", sim.ar_order);
  c_sim->add_option("--q", sim.ma_order);
  c_sim->add_option("--amplitude", sim.amplitude);
  c_sim->add_option("--noise", sim.noise);
  c_sim->add_option("--seed", sim.seed);
  c_sim->add_option("--start", sim.start, "First day, YYYY-MM-DD");
  c_sim->add_option("--theta", sim.theta, "Flat truth vector override");

  CommonOpts train_o, fc_o, ev_o;
  CLI::App* c_train = app.add_subcommand("train", "Fit one chain per selected location");
  c_train->fallthrough();
  add_common_options(c_train, train_o);
  CLI::App* c_fc = app.add_subcommand("forecast", "Posterior-predictive ensembles + summaries");
  c_fc->fallthrough();
  add_common_options(c_fc, fc_o);
  CLI::App* c_ev = app.add_subcommand("evaluate", "Verification metrics (CSV/JSON/SVG)");
  c_ev->fallthrough();
  add_common_options(c_ev, ev_o);

  std::string report_dir;
  CLI::App* c_report = app.add_subcommand("report", "Consolidated run summary");
  c_report->fallthrough();
  c_report->add_option("--run-dir", report_dir)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
    app.exit(e);
    return 2;
  }

  try {
    if (c_ingest->parsed()) return cmd_ingest(ingest);
    if (c_sim->parsed()) return cmd_simulate(sim);
    if (c_train->parsed()) {
      const cpt::RunConfig cfg = to_run_config(train_o);
      cfg.validate_common();
      echo_config(app, cfg.output_dir);
      const cpt::TrainOutcome out = cpt::run_train(cfg);
      return report_outcome("train", out.locations, out.n_failed, 4);
    }
    if (c_fc->parsed()) {
      const cpt::RunConfig cfg = to_run_config(fc_o);
      cfg.validate_common();
      echo_config(app, cfg.output_dir);
      const cpt::ForecastOutcome out = cpt::run_forecast(cfg);
      return report_outcome("forecast", out.locations, out.n_failed, 3);
    }
    if (c_ev->parsed()) {
      const cpt::RunConfig cfg = to_run_config(ev_o);
      cfg.validate_common();
      echo_config(app, cfg.output_dir);
      const cpt::EvaluationReport rep = cpt::run_evaluate(cfg);
      std::printf("evaluate: %lld location(s), %lld day(s); all-year MAB %.4g mm, RMSB %.4g mm\n",
                  rep.n_locations, rep.n_days, rep.forecast_bias[0].mab,
                  rep.forecast_bias[0].rmsb);
      return 0;
    }
    if (c_report->parsed()) {
      const std::string out = cpt::build_report(report_dir);
      std::printf("%s\n", out.c_str());
      return 0;
    }
  } catch (const cpt::config_error& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 2;
  } catch (const cpt::chain_abort_error& e) {
    std::fprintf(stderr, "numerical divergence: %s\n", e.what());
    return 4;
  } catch (const cpt::divergence_error& e) {
    std::fprintf(stderr, "numerical divergence: %s\n", e.what());
    return 4;
  } catch (const cpt::error& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}
