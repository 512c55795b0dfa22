#include "cpt/forecast.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "cpt/binary_io.hpp"
#include "cpt/compound_poisson.hpp"
#include "cpt/dates.hpp"
#include "cpt/errors.hpp"
#include "cpt/parallel.hpp"

namespace cpt {

namespace {

constexpr char kEnsembleMagic[] = "CPTENSM1";

}  // namespace

Trajectory simulate_forward(const ModelParams& theta, const LocationData& history,
                            std::span<const int> history_z, const Eigen::MatrixXd& future_inputs,
                            Rng& rng, bool reset_recursion) {
  const ParamDims d = theta.dims();
  if (int(future_inputs.cols()) != d.n_inputs)
    throw data_error("simulate_forward: future input width mismatch");
  const int t_test = int(future_inputs.rows());

  int t_hist = reset_recursion ? 0 : history.n_days();
  std::vector<double> log_lam, log_mu, eps_c, eps_a;
  log_lam.reserve(std::size_t(t_hist + t_test));
  log_mu.reserve(std::size_t(t_hist + t_test));
  eps_c.reserve(std::size_t(t_hist + t_test));
  eps_a.reserve(std::size_t(t_hist + t_test));

  if (t_hist > 0) {
    if (int(history_z.size()) != t_hist) throw data_error("simulate_forward: z length mismatch");
    const UnrollTrace trace = unroll(theta, history, history_z);
    for (int t = 0; t < t_hist; ++t) {
      log_lam.push_back(trace.log_lambda[t]);
      log_mu.push_back(trace.log_mu[t]);
      eps_c.push_back(trace.eps_count[t]);
      eps_a.push_back(trace.eps_amount[t]);
    }
  }

  Trajectory out;
  out.y.resize(t_test);
  out.z.resize(std::size_t(t_test));
  for (int k = 0; k < t_test; ++k) {
    const int t = t_hist + k;
    const Eigen::VectorXd x = future_inputs.row(k);
    const DayLinks lk = arma_day_links(theta, x, log_lam, log_mu, eps_c, eps_a, t);
    const double lambda = std::exp(lk.log_lambda);
    const double mu = std::exp(lk.log_mu);
    const double omega = std::exp(lk.log_omega);
    if (!std::isfinite(lambda) || lambda <= 0.0 || !std::isfinite(mu) || mu <= 0.0 ||
        !std::isfinite(omega) || omega <= 0.0)
      throw divergence_error("forecast recursion diverged at test day " + std::to_string(k), k);

    const CpDraw draw = cp_sample({lambda, mu, omega}, rng);
    out.y[k] = draw.y;
    out.z[std::size_t(k)] = draw.z;

    log_lam.push_back(lk.log_lambda);
    log_mu.push_back(lk.log_mu);
    eps_c.push_back(ma_residual_count(double(draw.z), lambda));
    eps_a.push_back(ma_residual_amount(draw.y, double(draw.z), mu, omega));
  }
  return out;
}

ForecastEnsemble posterior_predictive(const SampleArchive& archive, const LocationData& history,
                                      std::span<const int> history_z,
                                      const Eigen::MatrixXd& future_inputs, int n_members,
                                      std::uint64_t seed, bool reset_recursion, int n_workers) {
  const std::size_t n = archive.n_draws();
  if (n == 0) throw data_error("posterior_predictive: empty archive");
  if (n_members < 1) throw config_error("posterior_predictive: need at least one member");

  const int t_test = int(future_inputs.rows());
  ForecastEnsemble e;
  e.members.resize(n_members, t_test);
  e.member_z.resize(n_members, t_test);
  e.draws_reused = std::size_t(n_members) > n;
  e.draw_indices.resize(std::size_t(n_members));
  for (int m = 0; m < n_members; ++m)
    e.draw_indices[std::size_t(m)] = (std::int64_t(m) * std::int64_t(n)) / n_members;

  e.calendar.resize(std::size_t(t_test));
  const std::int64_t start =
      history.calendar.empty() ? 0 : history.calendar.back() + 1;
  for (int k = 0; k < t_test; ++k) e.calendar[std::size_t(k)] = start + k;

  parallel_for(n_members, n_workers, [&](long long m) {
    const Eigen::VectorXd& draw = archive.theta_draws[std::size_t(e.draw_indices[std::size_t(m)])];
    const ModelParams theta = ModelParams::from_vector(archive.dims, draw);
    Rng rng(derive_seed(seed, std::uint64_t(m), 0x4D454D42ULL));
    const Trajectory traj =
        simulate_forward(theta, history, history_z, future_inputs, rng, reset_recursion);
    e.members.row(m) = traj.y.transpose();
    for (int k = 0; k < t_test; ++k) e.member_z(m, k) = traj.z[std::size_t(k)];
  });
  return e;
}

std::pair<double, double> empirical_hdi(std::span<const double> sorted, double mass) {
  const std::size_t n = sorted.size();
  if (n == 0) throw domain_error("empirical_hdi: empty sample");
  std::size_t k = std::size_t(std::ceil(mass * double(n)));
  k = std::clamp<std::size_t>(k, 1, n);
  std::size_t best = 0;
  double best_width = sorted[k - 1] - sorted[0];
  for (std::size_t i = 1; i + k <= n; ++i) {
    const double width = sorted[i + k - 1] - sorted[i];
    if (width < best_width) {
      best_width = width;
      best = i;
    }
  }
  return {sorted[best], sorted[best + k - 1]};
}

namespace {

double sorted_median(const std::vector<double>& s) {
  const std::size_t n = s.size();
  return n % 2 ? s[n / 2] : 0.5 * (s[n / 2 - 1] + s[n / 2]);
}

}  // namespace

EnsembleSummary ensemble_summaries(const ForecastEnsemble& e, std::span<const double> x_grid) {
  const int m_total = e.n_members();
  if (m_total < 20) throw domain_error("ensemble_summaries: need at least 20 members for HDIs");

  EnsembleSummary out;
  out.x_grid.assign(x_grid.begin(), x_grid.end());
  out.calendar = e.calendar;
  out.days.reserve(std::size_t(e.n_days()));

  std::vector<double> col(static_cast<std::size_t>(m_total));
  for (int t = 0; t < e.n_days(); ++t) {
    for (int m = 0; m < m_total; ++m) col[std::size_t(m)] = e.members(m, t);
    std::sort(col.begin(), col.end());
    DaySummary day;
    day.median = sorted_median(col);
    std::tie(day.hdi68_lo, day.hdi68_hi) = empirical_hdi(col, 0.68);
    std::tie(day.hdi95_lo, day.hdi95_hi) = empirical_hdi(col, 0.95);
    day.p_exceed.reserve(x_grid.size());
    for (double x : x_grid) {
      const auto above = col.end() - std::upper_bound(col.begin(), col.end(), x);
      day.p_exceed.push_back(double(above) / double(m_total));
    }
    out.days.push_back(std::move(day));
  }
  return out;
}

Eigen::VectorXd ensemble_median_series(const ForecastEnsemble& e) {
  Eigen::VectorXd med(e.n_days());
  std::vector<double> col(static_cast<std::size_t>(e.n_members()));
  for (int t = 0; t < e.n_days(); ++t) {
    for (int m = 0; m < e.n_members(); ++m) col[std::size_t(m)] = e.members(m, t);
    std::sort(col.begin(), col.end());
    med[t] = sorted_median(col);
  }
  return med;
}

void write_ensemble(const std::string& path, const ForecastEnsemble& e) {
  ByteWriter w;
  w.put_u8(1);  // version
  w.put_u8(1);  // little-endian
  w.put_u64(std::uint64_t(e.n_members()));
  w.put_u64(std::uint64_t(e.n_days()));
  w.put_i64(e.location_row);
  w.put_i64(e.location_col);
  w.put_u8(e.draws_reused ? 1 : 0);
  w.put_u64(e.draw_indices.size());
  w.put_i64_span(e.draw_indices);
  w.put_i64_span(e.calendar);
  for (int m = 0; m < e.n_members(); ++m)
    for (int t = 0; t < e.n_days(); ++t) w.put_f64(e.members(m, t));
  for (int m = 0; m < e.n_members(); ++m)
    for (int t = 0; t < e.n_days(); ++t) w.put_i64(e.member_z(m, t));

  ByteWriter file;
  file.put_bytes(std::string_view(kEnsembleMagic, 8));
  const std::string body = w.take();
  file.put_bytes(body);
  file.put_u32(crc32(body));
  write_file(path, file.bytes());
}

ForecastEnsemble read_ensemble(const std::string& path) {
  const std::string raw = read_file(path);
  if (raw.size() < 12 || std::string_view(raw).substr(0, 8) != std::string_view(kEnsembleMagic, 8))
    throw data_error("ensemble: bad magic in " + path);
  const std::string_view body(raw.data() + 8, raw.size() - 12);
  ByteReader tail(std::string_view(raw.data() + raw.size() - 4, 4));
  if (crc32(body) != tail.get_u32()) throw data_error("ensemble: checksum mismatch");

  ByteReader r(body);
  if (r.get_u8() != 1) throw data_error("ensemble: unsupported version");
  if (r.get_u8() != 1) throw data_error("ensemble: unsupported byte order");
  ForecastEnsemble e;
  const auto m_total = std::int64_t(r.get_u64());
  const auto t_total = std::int64_t(r.get_u64());
  e.location_row = int(r.get_i64());
  e.location_col = int(r.get_i64());
  e.draws_reused = r.get_u8() != 0;
  e.draw_indices = r.get_i64_vector(std::size_t(r.get_u64()));
  e.calendar = r.get_i64_vector(std::size_t(t_total));
  e.members.resize(m_total, t_total);
  for (std::int64_t m = 0; m < m_total; ++m)
    for (std::int64_t t = 0; t < t_total; ++t) e.members(m, t) = r.get_f64();
  e.member_z.resize(m_total, t_total);
  for (std::int64_t m = 0; m < m_total; ++m)
    for (std::int64_t t = 0; t < t_total; ++t) e.member_z(m, t) = int(r.get_i64());
  if (!r.exhausted()) throw data_error("ensemble: trailing bytes");
  return e;
}

std::string ensemble_metadata_json(const ForecastEnsemble& e) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["n_members"] = e.n_members();
  j["n_days"] = e.n_days();
  j["location"] = {{"row", e.location_row}, {"col", e.location_col}};
  j["draws_reused"] = e.draws_reused;
  j["draw_indices"] = e.draw_indices;
  if (!e.calendar.empty()) {
    j["first_day"] = format_iso_date(e.calendar.front());
    j["last_day"] = format_iso_date(e.calendar.back());
  }
  return j.dump(2);
}

void write_summary_csv(const std::string& path, const EnsembleSummary& s) {
  std::string out = "date,median,hdi68_lo,hdi68_hi,hdi95_lo,hdi95_hi";
  char buf[64];
  for (double x : s.x_grid) {
    std::snprintf(buf, sizeof(buf), ",p_gt_%g", x);
    out += buf;
  }
  out += "\n";
  for (std::size_t i = 0; i < s.days.size(); ++i) {
    const DaySummary& d = s.days[i];
    out += i < s.calendar.size() ? format_iso_date(s.calendar[i]) : std::to_string(i);
    std::snprintf(buf, sizeof(buf), ",%.10g,%.10g,%.10g,%.10g,%.10g", d.median, d.hdi68_lo,
                  d.hdi68_hi, d.hdi95_lo, d.hdi95_hi);
    out += buf;
    for (double p : d.p_exceed) {
      std::snprintf(buf, sizeof(buf), ",%.10g", p);
      out += buf;
    }
    out += "\n";
  }
  write_file(path, out);
}

}  // namespace cpt
