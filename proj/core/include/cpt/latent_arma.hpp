#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <vector>

namespace cpt {

/// Model sizes: R input fields, AR order p, MA order q.
struct ParamDims {
  int n_inputs = 0;
  int ar_order = 0;
  int ma_order = 0;

  int param_count() const { return 3 + 3 * n_inputs + 2 * ar_order + 2 * ma_order; }
  bool operator==(const ParamDims&) const = default;
};

/// Per-location parameter vector: constants, regression weights on the
/// standardized input fields, and AR/MA coefficients for the count and amount
/// processes.  The dispersion process has regression + constant only.
struct ModelParams {
  double k_lambda = 0.0;
  double k_mu = 0.0;
  double k_omega = 0.0;
  Eigen::VectorXd beta_lambda, beta_mu, beta_omega;  // length R
  Eigen::VectorXd phi_lambda, phi_mu;                // length p
  Eigen::VectorXd gamma_lambda, gamma_mu;            // length q

  ParamDims dims() const;
  static ModelParams zeros(const ParamDims& d);

  /// Flat packing order: (k_l, k_m, k_o, beta_l, beta_m, beta_o,
  /// phi_l, phi_m, gamma_l, gamma_m).
  Eigen::VectorXd to_vector() const;
  static ModelParams from_vector(const ParamDims& d, const Eigen::VectorXd& v);
};

/// Aligned input matrix and observed precipitation for one grid cell.
/// Column standardization of `inputs` is the caller's responsibility.
struct LocationData {
  Eigen::MatrixXd inputs;              // T x R
  Eigen::VectorXd precip;              // length T, mm/day, >= 0
  std::vector<std::int64_t> calendar;  // length T, epoch days

  int n_days() const { return int(precip.size()); }
  int n_inputs() const { return int(inputs.cols()); }
  void validate() const;  // throws data_error / domain_error
};

/// Daily distribution parameters implied by (theta, inputs, counts, amounts).
struct ParamSeries {
  Eigen::ArrayXd lambda, mu, omega;  // length T, strictly positive
};

/// Full recursion state produced by `unroll`: log-parameters plus the MA
/// residuals each later day looks back at.
struct UnrollTrace {
  Eigen::ArrayXd log_lambda, log_mu, log_omega;
  Eigen::ArrayXd eps_count, eps_amount;

  int n_days() const { return int(log_lambda.size()); }
  ParamSeries series() const;
};

struct DayLinks {
  double log_lambda, log_mu, log_omega;
};

/// ARMA linear predictors at position t for lag arrays holding the recursion
/// history at indices < t.  Exposed for the forward simulator, which extends
/// the history day by day with simulated values.
DayLinks arma_day_links(const ModelParams& theta, const Eigen::VectorXd& x_t,
                        std::span<const double> log_lambda_hist,
                        std::span<const double> log_mu_hist,
                        std::span<const double> eps_count_hist,
                        std::span<const double> eps_amount_hist, int t);

/// Standardized count innovation (z - lambda)/sqrt(lambda).
double ma_residual_count(double z, double lambda);

/// Standardized amount innovation (y - z*mu)/(mu*sqrt(z*omega)); defined as
/// exactly 0 on dry days (z = 0), where no amount was observed.
double ma_residual_amount(double y, double z, double mu, double omega);

/// Run the link/AR/MA recursion strictly forward in time.  Precondition:
/// z[t] == 0 iff precip[t] == 0.  Throws divergence_error naming the first
/// index where a parameter leaves (0, inf).
UnrollTrace unroll(const ModelParams& theta, const LocationData& data, std::span<const int> z);

/// Log-likelihood of one day given its parameters; -inf for inconsistent
/// (z, y) pairs.
double day_log_likelihood(int z, double y, double lambda, double mu, double omega);

/// Sum of day log-likelihoods under the unrolled series; -inf sentinel for
/// inconsistent (z, y), divergence_error propagated from the recursion.
double log_likelihood(const ModelParams& theta, const LocationData& data, std::span<const int> z);

/// Sum of day log-likelihoods for t in [t_start, t_end) where lookbacks
/// before t_start come from `prefix` (an unroll of the same data under the
/// same theta) and z[t_start] is replaced by z_at_start.  Used by the
/// single-site latent-count update: changing z at t perturbs every later day
/// through the recursion, so the conditional is evaluated by recomputing from
/// t forward.  horizon_days == 0 means exact (t_end = T); > 0 truncates the
/// recomputation and is an explicitly approximate conditional.
double suffix_log_likelihood(const ModelParams& theta, const LocationData& data,
                             std::span<const int> z, int t_start, int z_at_start,
                             const UnrollTrace& prefix, int horizon_days = 0);

/// Recompute trace entries for t in [t_start, T) in place, reusing the
/// prefix already stored in `trace`.
void refresh_trace_suffix(UnrollTrace& trace, const ModelParams& theta, const LocationData& data,
                          std::span<const int> z, int t_start);

}  // namespace cpt
