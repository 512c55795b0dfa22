#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cpt/latent_arma.hpp"
#include "cpt/priors.hpp"
#include "cpt/rng.hpp"
#include "cpt/samplers.hpp"

namespace cpt {

struct ChainConfig {
  long long n_steps = 50000;
  long long n_burn_in = 15000;
  int thin = 1;
  // Random-scan selection weights; the latent-count weight scales with the
  // series length (one day is updated per selection).
  double w_theta = 1.0;
  double w_tau = 0.2;
  double w_z_per_day = 3e-3;
  int ar_order = 5;
  int ma_order = 5;
  std::uint64_t seed = 0;
  long long checkpoint_every = 0;  // 0 = no checkpoints
  // 0 = exact latent-count conditional (recompute to the end of the series);
  // H > 0 truncates the recomputation to max(p, q) * H days -- an explicitly
  // approximate conditional for speed experiments.
  int z_horizon_multiplier = 0;

  void validate() const;  // throws config_error
  ParamDims dims_for(int n_inputs) const { return {n_inputs, ar_order, ma_order}; }
};

/// Full per-chain MCMC state; owns its RNG.
struct ChainState {
  ModelParams theta;
  Precisions tau;
  std::vector<int> z;
  UnrollTrace cached_trace;  // always consistent with (theta, z, data)
  double log_lik = 0.0;      // data part of log_posterior
  double log_posterior = 0.0;
  long long iteration = 0;
  AdaptState adapt;  // for the precision random walk (dim 2)
  Rng rng;

  // Selection / kernel counters for diagnostics.
  long long n_theta_updates = 0, n_tau_updates = 0, n_z_updates = 0;
  long long n_mh_accepts_snapshot = 0;  // adapt.acceptance_count mirror for serialization
  long long n_z_moves = 0;
  long long ess_evals_total = 0;

  explicit ChainState(Rng r) : adapt(2), rng(std::move(r)) {}
};

/// Thinned post-burn-in draws plus run metadata.
struct SampleArchive {
  ParamDims dims;
  std::vector<Eigen::VectorXd> theta_draws;  // flat packing
  std::vector<Precisions> tau_draws;
  std::vector<double> log_posterior_trace;  // every step, including burn-in
  std::vector<int> final_z;                 // latent counts at the last step
  long long n_steps = 0, n_burn_in = 0;
  int thin = 1;
  std::uint64_t seed = 0;
  long long n_theta_updates = 0, n_tau_updates = 0, n_z_updates = 0;
  long long n_mh_accepts = 0, n_z_moves = 0, ess_evals_total = 0;

  std::size_t n_draws() const { return theta_draws.size(); }
};

/// Initial state: naive moment estimates for the constants (hyper-means on
/// estimator failure), prior-mean precisions, rounded posterior expectations
/// for the latent counts (wet-day indicator on series failure).
ChainState init_chain(const LocationData& data, const ChainConfig& cfg, const PriorConfig& prior);

/// One random-scan update of theta, tau, or one latent count, in place.
void gibbs_step(ChainState& state, const LocationData& data, const ChainConfig& cfg,
                const PriorConfig& prior);

/// Called every `checkpoint_every` steps with the current state and the
/// archive accumulated so far.
using CheckpointSink =
    std::function<void(const ChainState& state, const SampleArchive& partial)>;

/// Run a full chain.  On kernel/divergence failure throws chain_abort_error
/// carrying the serialized crash state.
SampleArchive run_chain(const LocationData& data, const ChainConfig& cfg, const PriorConfig& prior,
                        const CheckpointSink& sink = nullptr);

/// Continue a checkpointed chain to cfg.n_steps; bitwise identical to the
/// uninterrupted run.
SampleArchive resume_chain(ChainState state, SampleArchive partial, const LocationData& data,
                           const ChainConfig& cfg, const PriorConfig& prior,
                           const CheckpointSink& sink = nullptr);

// ---- checkpoint / archive serialization ----

std::string serialize_chain_state(const ChainState& state);
ChainState deserialize_chain_state(std::string_view blob, const LocationData& data);

/// Versioned little-endian container, magic "CPTCHKPT"; optionally carries
/// the partial archive, so a killed run can resume losslessly.
void write_checkpoint(const std::string& path, const ChainState& state,
                      const SampleArchive* partial = nullptr);

struct Checkpoint {
  std::string state_blob;  // deserialize with deserialize_chain_state
  std::optional<SampleArchive> partial;
};
Checkpoint read_checkpoint(const std::string& path);

/// Columnar binary (matching JSON sidecar written separately by callers).
void write_archive(const std::string& path, const SampleArchive& a);
SampleArchive read_archive(const std::string& path);
std::string archive_metadata_json(const SampleArchive& a);

// ---- diagnostics ----

struct ChainDiagnostics {
  double theta_select_freq = 0.0, tau_select_freq = 0.0, z_select_freq = 0.0;
  double mh_acceptance_rate = 0.0;   // accepted tau proposals / tau selections
  double ess_accept_rate = 0.0;      // 1 when theta updates happened (rejection-free)
  double z_move_rate = 0.0;          // latent-count moves / z selections
  double mean_ess_evals = 0.0;
  double lag1_autocorr = 0.0;        // of the log-posterior trace
  bool lag1_defined = false;
};

ChainDiagnostics diagnostics(const SampleArchive& archive);

}  // namespace cpt
