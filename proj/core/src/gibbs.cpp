#include "cpt/gibbs.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "cpt/binary_io.hpp"
#include "cpt/errors.hpp"
#include "cpt/math_util.hpp"

namespace cpt {

namespace {

constexpr char kCheckpointMagic[] = "CPTCHKPT";
constexpr char kArchiveMagic[] = "CPTARCH1";
constexpr std::uint8_t kFormatVersion = 1;
constexpr std::uint8_t kLittleEndian = 1;

double trace_log_likelihood(const UnrollTrace& trace, const LocationData& data,
                            std::span<const int> z) {
  double acc = 0.0;
  for (int t = 0; t < data.n_days(); ++t) {
    const double term =
        day_log_likelihood(z[t], data.precip[t], std::exp(trace.log_lambda[t]),
                           std::exp(trace.log_mu[t]), std::exp(trace.log_omega[t]));
    if (term == kNegInf) return kNegInf;
    acc += term;
  }
  return acc;
}

void refresh_posterior(ChainState& st, const PriorConfig& prior) {
  st.log_posterior =
      st.log_lik + log_prior_theta(st.theta, st.tau, prior) + log_prior_tau(st.tau, prior);
}

void update_theta(ChainState& st, const LocationData& data, const PriorConfig& prior) {
  const ParamDims d = st.theta.dims();
  const Eigen::VectorXd mean = prior_mean_vector(prior, d);
  const Eigen::VectorXd nu = sample_prior(st.tau, prior, d, st.rng).to_vector();
  const auto ll_fn = [&](const Eigen::VectorXd& v) -> double {
    try {
      return log_likelihood(ModelParams::from_vector(d, v), data, st.z);
    } catch (const divergence_error&) {
      return kNegInf;  // numerically divergent proposals carry no posterior mass
    }
  };
  const EssResult res = elliptical_slice_step(st.theta.to_vector(), mean, nu, ll_fn, st.rng);
  st.theta = ModelParams::from_vector(d, res.state);
  st.cached_trace = unroll(st.theta, data, st.z);
  st.log_lik = trace_log_likelihood(st.cached_trace, data, st.z);
  refresh_posterior(st, prior);
  st.ess_evals_total += res.n_evals;
  ++st.n_theta_updates;
}

void update_tau(ChainState& st, const PriorConfig& prior) {
  // Random walk on (ln tau_beta, ln(tau_arma - shift)) with the log-Jacobian
  // of the transform added to the target.
  Eigen::VectorXd u(2);
  u[0] = std::log(st.tau.tau_beta);
  u[1] = std::log(st.tau.tau_arma - prior.tau_arma_shift);
  const auto target = [&](const Eigen::VectorXd& uv) -> double {
    const Precisions cand{std::exp(uv[0]), prior.tau_arma_shift + std::exp(uv[1])};
    return log_prior_tau(cand, prior) + log_prior_theta(st.theta, cand, prior) + uv[0] + uv[1];
  };
  const Eigen::VectorXd next = adaptive_mh_step(u, target, st.adapt, st.rng);
  st.tau = {std::exp(next[0]), prior.tau_arma_shift + std::exp(next[1])};
  refresh_posterior(st, prior);
  st.n_mh_accepts_snapshot = st.adapt.acceptance_count;
  ++st.n_tau_updates;
}

void update_z(ChainState& st, const LocationData& data, const ChainConfig& cfg,
              const PriorConfig& prior) {
  const int t = st.rng.uniform_int(0, data.n_days() - 1);
  ++st.n_z_updates;
  if (!(data.precip[t] > 0.0)) return;  // dry day: z is structurally 0

  const int horizon = cfg.z_horizon_multiplier > 0
                          ? std::max(cfg.ar_order, cfg.ma_order) * cfg.z_horizon_multiplier
                          : 0;
  const auto pmf = [&](int zv) -> double {
    if (zv < 1) return kNegInf;
    try {
      return suffix_log_likelihood(st.theta, data, st.z, t, zv, st.cached_trace, horizon);
    } catch (const divergence_error&) {
      return kNegInf;
    }
  };
  const int z_next = integer_slice_step(st.z[std::size_t(t)], pmf, 1, st.rng);
  if (z_next != st.z[std::size_t(t)]) {
    st.z[std::size_t(t)] = z_next;
    ++st.n_z_moves;
    refresh_trace_suffix(st.cached_trace, st.theta, data, st.z, t);
    st.log_lik = trace_log_likelihood(st.cached_trace, data, st.z);
    refresh_posterior(st, prior);
  }
}

void sync_counters(SampleArchive& arch, const ChainState& st) {
  arch.n_theta_updates = st.n_theta_updates;
  arch.n_tau_updates = st.n_tau_updates;
  arch.n_z_updates = st.n_z_updates;
  arch.n_mh_accepts = st.adapt.acceptance_count;
  arch.n_z_moves = st.n_z_moves;
  arch.ess_evals_total = st.ess_evals_total;
}

SampleArchive advance_chain(ChainState st, SampleArchive arch, const LocationData& data,
                            const ChainConfig& cfg, const PriorConfig& prior,
                            const CheckpointSink& sink) {
  try {
    while (st.iteration < cfg.n_steps) {
      gibbs_step(st, data, cfg, prior);
      arch.log_posterior_trace.push_back(st.log_posterior);
      const long long done = st.iteration - 1;  // index of the completed step
      if (done >= cfg.n_burn_in && (done - cfg.n_burn_in) % cfg.thin == 0) {
        arch.theta_draws.push_back(st.theta.to_vector());
        arch.tau_draws.push_back(st.tau);
      }
      if (sink && cfg.checkpoint_every > 0 && st.iteration < cfg.n_steps &&
          st.iteration % cfg.checkpoint_every == 0) {
        sync_counters(arch, st);
        sink(st, arch);
      }
    }
  } catch (const error& e) {
    throw chain_abort_error(e.what(), serialize_chain_state(st));
  }
  sync_counters(arch, st);
  arch.final_z = st.z;
  return arch;
}

}  // namespace

void ChainConfig::validate() const {
  if (n_steps < 1 || n_burn_in < 0 || n_burn_in >= n_steps)
    throw config_error("ChainConfig: require 0 <= n_burn_in < n_steps");
  if (thin < 1) throw config_error("ChainConfig: thin must be >= 1");
  if (!(w_theta >= 0 && w_tau >= 0 && w_z_per_day >= 0) ||
      w_theta + w_tau + w_z_per_day <= 0)
    throw config_error("ChainConfig: scan weights must be non-negative with positive sum");
  if (ar_order < 0 || ma_order < 0) throw config_error("ChainConfig: negative lag order");
  if (checkpoint_every < 0) throw config_error("ChainConfig: checkpoint_every must be >= 0");
  if (z_horizon_multiplier < 0) throw config_error("ChainConfig: z_horizon_multiplier >= 0");
}

ChainState init_chain(const LocationData& data, const ChainConfig& cfg, const PriorConfig& prior) {
  data.validate();
  cfg.validate();
  prior.validate();

  ChainState st{Rng(cfg.seed)};
  const ParamDims d = cfg.dims_for(data.n_inputs());
  st.theta = ModelParams::zeros(d);
  try {
    const InitEstimates est = init_estimates(data.precip);
    st.theta.k_lambda = est.k_lambda;
    st.theta.k_mu = est.k_mu;
    st.theta.k_omega = est.k_omega;
  } catch (const init_error&) {
    st.theta.k_lambda = prior.k0_lambda;
    st.theta.k_mu = prior.k0_mu;
    st.theta.k_omega = prior.k0_omega;
  }
  st.tau.tau_beta = prior.tau_beta_prior_mean();
  st.tau.tau_arma = prior.tau_arma_prior_mean();

  try {
    st.z = init_latent_counts(data, st.theta);
  } catch (const series_error&) {
    st.z.assign(std::size_t(data.n_days()), 0);
    for (int t = 0; t < data.n_days(); ++t)
      if (data.precip[t] > 0.0) st.z[std::size_t(t)] = 1;
  }

  st.cached_trace = unroll(st.theta, data, st.z);
  st.log_lik = trace_log_likelihood(st.cached_trace, data, st.z);
  refresh_posterior(st, prior);
  if (!std::isfinite(st.log_posterior))
    throw kernel_error("init_chain: initial state has non-finite posterior");
  return st;
}

void gibbs_step(ChainState& st, const LocationData& data, const ChainConfig& cfg,
                const PriorConfig& prior) {
  const double w_z = cfg.w_z_per_day * double(data.n_days());
  const double u = st.rng.uniform(0.0, cfg.w_theta + cfg.w_tau + w_z);
  if (u < cfg.w_theta)
    update_theta(st, data, prior);
  else if (u < cfg.w_theta + cfg.w_tau)
    update_tau(st, prior);
  else
    update_z(st, data, cfg, prior);
  ++st.iteration;
}

SampleArchive run_chain(const LocationData& data, const ChainConfig& cfg, const PriorConfig& prior,
                        const CheckpointSink& sink) {
  ChainState st = init_chain(data, cfg, prior);
  SampleArchive arch;
  arch.dims = cfg.dims_for(data.n_inputs());
  arch.n_steps = cfg.n_steps;
  arch.n_burn_in = cfg.n_burn_in;
  arch.thin = cfg.thin;
  arch.seed = cfg.seed;
  const std::size_t expect =
      std::size_t((cfg.n_steps - cfg.n_burn_in + cfg.thin - 1) / cfg.thin);
  arch.theta_draws.reserve(expect);
  arch.tau_draws.reserve(expect);
  arch.log_posterior_trace.reserve(std::size_t(cfg.n_steps));
  return advance_chain(std::move(st), std::move(arch), data, cfg, prior, sink);
}

SampleArchive resume_chain(ChainState state, SampleArchive partial, const LocationData& data,
                           const ChainConfig& cfg, const PriorConfig& prior,
                           const CheckpointSink& sink) {
  if (std::int64_t(partial.log_posterior_trace.size()) != state.iteration)
    throw data_error("resume_chain: archive/state iteration mismatch");
  return advance_chain(std::move(state), std::move(partial), data, cfg, prior, sink);
}

// ---- serialization ----

std::string serialize_chain_state(const ChainState& st) {
  ByteWriter w;
  w.put_u32(kFormatVersion);
  const ParamDims d = st.theta.dims();
  w.put_u32(std::uint32_t(d.n_inputs));
  w.put_u32(std::uint32_t(d.ar_order));
  w.put_u32(std::uint32_t(d.ma_order));
  w.put_u64(st.z.size());

  const Eigen::VectorXd v = st.theta.to_vector();
  w.put_f64_span({v.data(), std::size_t(v.size())});
  w.put_f64(st.tau.tau_beta);
  w.put_f64(st.tau.tau_arma);
  for (int zi : st.z) w.put_i64(zi);
  w.put_f64(st.log_lik);
  w.put_f64(st.log_posterior);
  w.put_i64(st.iteration);

  w.put_u32(std::uint32_t(st.adapt.dim()));
  w.put_i64(st.adapt.n_seen());
  const Eigen::VectorXd& am = st.adapt.mean();
  w.put_f64_span({am.data(), std::size_t(am.size())});
  const Eigen::MatrixXd& m2 = st.adapt.raw_m2();
  w.put_f64_span({m2.data(), std::size_t(m2.size())});
  w.put_i64(st.adapt.acceptance_count);

  w.put_string(st.rng.serialize());
  w.put_i64(st.n_theta_updates);
  w.put_i64(st.n_tau_updates);
  w.put_i64(st.n_z_updates);
  w.put_i64(st.n_z_moves);
  w.put_i64(st.ess_evals_total);
  return w.take();
}

ChainState deserialize_chain_state(std::string_view blob, const LocationData& data) {
  ByteReader r(blob);
  if (r.get_u32() != kFormatVersion) throw data_error("chain state: unsupported version");
  ParamDims d;
  d.n_inputs = int(r.get_u32());
  d.ar_order = int(r.get_u32());
  d.ma_order = int(r.get_u32());
  const std::uint64_t t_total = r.get_u64();
  if (t_total != std::uint64_t(data.n_days()) || d.n_inputs != data.n_inputs())
    throw data_error("chain state: does not match the supplied data");

  const std::vector<double> vv = r.get_f64_vector(std::size_t(d.param_count()));
  Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(vv.data(), long(vv.size()));

  ChainState st{Rng(0)};
  st.theta = ModelParams::from_vector(d, v);
  st.tau.tau_beta = r.get_f64();
  st.tau.tau_arma = r.get_f64();
  st.z.resize(std::size_t(t_total));
  for (auto& zi : st.z) zi = int(r.get_i64());
  st.log_lik = r.get_f64();
  st.log_posterior = r.get_f64();
  st.iteration = r.get_i64();

  const int adim = int(r.get_u32());
  const long long n_seen = r.get_i64();
  const std::vector<double> mv = r.get_f64_vector(std::size_t(adim));
  const std::vector<double> m2v = r.get_f64_vector(std::size_t(adim) * std::size_t(adim));
  Eigen::VectorXd am = Eigen::Map<const Eigen::VectorXd>(mv.data(), adim);
  Eigen::MatrixXd m2 = Eigen::Map<const Eigen::MatrixXd>(m2v.data(), adim, adim);
  const long long acc = r.get_i64();
  st.adapt = AdaptState::restore(n_seen, std::move(am), std::move(m2), acc);

  st.rng = Rng::deserialize(r.get_string());
  st.n_theta_updates = r.get_i64();
  st.n_tau_updates = r.get_i64();
  st.n_z_updates = r.get_i64();
  st.n_z_moves = r.get_i64();
  st.ess_evals_total = r.get_i64();
  st.n_mh_accepts_snapshot = st.adapt.acceptance_count;
  if (!r.exhausted()) throw data_error("chain state: trailing bytes");

  // The cache is not stored; rebuild and check coherence via the posterior.
  st.cached_trace = unroll(st.theta, data, st.z);
  const double ll = trace_log_likelihood(st.cached_trace, data, st.z);
  if (!(std::abs(ll - st.log_lik) <= 1e-9 * std::max(1.0, std::abs(ll))))
    throw data_error("chain state: cached likelihood mismatch after restore");
  st.log_lik = ll;
  return st;
}

namespace {

std::string archive_body(const SampleArchive& a) {
  ByteWriter w;
  w.put_u8(kFormatVersion);
  w.put_u8(kLittleEndian);
  w.put_u32(std::uint32_t(a.dims.n_inputs));
  w.put_u32(std::uint32_t(a.dims.ar_order));
  w.put_u32(std::uint32_t(a.dims.ma_order));
  const std::size_t n = a.n_draws();
  const int dim = a.dims.param_count();
  w.put_u64(n);
  // Columnar: one contiguous run per theta coordinate, then the tau columns.
  for (int j = 0; j < dim; ++j)
    for (std::size_t i = 0; i < n; ++i) w.put_f64(a.theta_draws[i][j]);
  for (std::size_t i = 0; i < n; ++i) w.put_f64(a.tau_draws[i].tau_beta);
  for (std::size_t i = 0; i < n; ++i) w.put_f64(a.tau_draws[i].tau_arma);
  w.put_u64(a.log_posterior_trace.size());
  w.put_f64_span(a.log_posterior_trace);
  w.put_u64(a.final_z.size());
  for (int zi : a.final_z) w.put_i64(zi);
  w.put_i64(a.n_steps);
  w.put_i64(a.n_burn_in);
  w.put_u32(std::uint32_t(a.thin));
  w.put_u64(a.seed);
  w.put_i64(a.n_theta_updates);
  w.put_i64(a.n_tau_updates);
  w.put_i64(a.n_z_updates);
  w.put_i64(a.n_mh_accepts);
  w.put_i64(a.n_z_moves);
  w.put_i64(a.ess_evals_total);
  return w.take();
}

SampleArchive parse_archive_body(std::string_view body) {
  ByteReader r(body);
  if (r.get_u8() != kFormatVersion) throw data_error("archive: unsupported version");
  if (r.get_u8() != kLittleEndian) throw data_error("archive: unsupported byte order");
  SampleArchive a;
  a.dims.n_inputs = int(r.get_u32());
  a.dims.ar_order = int(r.get_u32());
  a.dims.ma_order = int(r.get_u32());
  const std::size_t n = std::size_t(r.get_u64());
  const int dim = a.dims.param_count();
  a.theta_draws.assign(n, Eigen::VectorXd(dim));
  for (int j = 0; j < dim; ++j)
    for (std::size_t i = 0; i < n; ++i) a.theta_draws[i][j] = r.get_f64();
  a.tau_draws.resize(n);
  for (std::size_t i = 0; i < n; ++i) a.tau_draws[i].tau_beta = r.get_f64();
  for (std::size_t i = 0; i < n; ++i) a.tau_draws[i].tau_arma = r.get_f64();
  a.log_posterior_trace = r.get_f64_vector(std::size_t(r.get_u64()));
  const std::size_t zn = std::size_t(r.get_u64());
  a.final_z.resize(zn);
  for (auto& zi : a.final_z) zi = int(r.get_i64());
  a.n_steps = r.get_i64();
  a.n_burn_in = r.get_i64();
  a.thin = int(r.get_u32());
  a.seed = r.get_u64();
  a.n_theta_updates = r.get_i64();
  a.n_tau_updates = r.get_i64();
  a.n_z_updates = r.get_i64();
  a.n_mh_accepts = r.get_i64();
  a.n_z_moves = r.get_i64();
  a.ess_evals_total = r.get_i64();
  if (!r.exhausted()) throw data_error("archive: trailing bytes");
  return a;
}

/// magic + body + crc32(body).
std::string seal(const char* magic, std::string body) {
  ByteWriter w;
  w.put_bytes(std::string_view(magic, 8));
  const std::uint32_t crc = crc32(body);
  w.put_bytes(body);
  w.put_u32(crc);
  return w.take();
}

std::string unseal(const char* magic, const std::string& raw, const char* what) {
  if (raw.size() < 12 || std::string_view(raw).substr(0, 8) != std::string_view(magic, 8))
    throw data_error(std::string(what) + ": bad magic");
  const std::string_view body(raw.data() + 8, raw.size() - 12);
  ByteReader tail(std::string_view(raw.data() + raw.size() - 4, 4));
  if (crc32(body) != tail.get_u32())
    throw data_error(std::string(what) + ": checksum mismatch (corrupt file)");
  return std::string(body);
}

}  // namespace

void write_checkpoint(const std::string& path, const ChainState& state,
                      const SampleArchive* partial) {
  ByteWriter w;
  w.put_u8(kFormatVersion);
  w.put_u8(kLittleEndian);
  w.put_u8(partial ? 1 : 0);
  w.put_string(serialize_chain_state(state));
  if (partial) w.put_string(archive_body(*partial));
  write_file(path, seal(kCheckpointMagic, w.take()));
}

Checkpoint read_checkpoint(const std::string& path) {
  const std::string body = unseal(kCheckpointMagic, read_file(path), "checkpoint");
  ByteReader r(body);
  if (r.get_u8() != kFormatVersion) throw data_error("checkpoint: unsupported version");
  if (r.get_u8() != kLittleEndian) throw data_error("checkpoint: unsupported byte order");
  const bool has_partial = r.get_u8() != 0;
  Checkpoint ck;
  ck.state_blob = r.get_string();
  if (has_partial) ck.partial = parse_archive_body(r.get_string());
  if (!r.exhausted()) throw data_error("checkpoint: trailing bytes");
  return ck;
}

void write_archive(const std::string& path, const SampleArchive& a) {
  write_file(path, seal(kArchiveMagic, archive_body(a)));
}

SampleArchive read_archive(const std::string& path) {
  return parse_archive_body(unseal(kArchiveMagic, read_file(path), "archive"));
}

std::string archive_metadata_json(const SampleArchive& a) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["dims"] = {{"n_inputs", a.dims.n_inputs},
               {"ar_order", a.dims.ar_order},
               {"ma_order", a.dims.ma_order}};
  j["n_draws"] = a.n_draws();
  j["n_steps"] = a.n_steps;
  j["n_burn_in"] = a.n_burn_in;
  j["thin"] = a.thin;
  j["seed"] = a.seed;
  j["selections"] = {{"theta", a.n_theta_updates},
                     {"tau", a.n_tau_updates},
                     {"z", a.n_z_updates}};
  j["mh_accepts"] = a.n_mh_accepts;
  j["z_moves"] = a.n_z_moves;
  j["ess_evals_total"] = a.ess_evals_total;
  return j.dump(2);
}

ChainDiagnostics diagnostics(const SampleArchive& a) {
  ChainDiagnostics d;
  const double total = double(a.n_theta_updates + a.n_tau_updates + a.n_z_updates);
  if (total > 0) {
    d.theta_select_freq = double(a.n_theta_updates) / total;
    d.tau_select_freq = double(a.n_tau_updates) / total;
    d.z_select_freq = double(a.n_z_updates) / total;
  }
  d.mh_acceptance_rate =
      a.n_tau_updates > 0 ? double(a.n_mh_accepts) / double(a.n_tau_updates) : 0.0;
  d.ess_accept_rate = a.n_theta_updates > 0 ? 1.0 : 0.0;
  d.z_move_rate = a.n_z_updates > 0 ? double(a.n_z_moves) / double(a.n_z_updates) : 0.0;
  d.mean_ess_evals =
      a.n_theta_updates > 0 ? double(a.ess_evals_total) / double(a.n_theta_updates) : 0.0;

  const auto& x = a.log_posterior_trace;
  if (x.size() >= 2) {
    const double n = double(x.size());
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= n;
    double var = 0.0, cov = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      var += (x[i] - mean) * (x[i] - mean);
      if (i + 1 < x.size()) cov += (x[i] - mean) * (x[i + 1] - mean);
    }
    if (var > 0.0) {
      d.lag1_autocorr = cov / var;
      d.lag1_defined = true;
    }
  }
  return d;
}

}  // namespace cpt
