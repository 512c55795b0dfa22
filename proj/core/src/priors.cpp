#include "cpt/priors.hpp"

#include <cmath>

#include "cpt/compound_poisson.hpp"
#include "cpt/errors.hpp"
#include "cpt/math_util.hpp"

namespace cpt {

void PriorConfig::validate() const {
  const bool ok = std::isfinite(k0_lambda) && std::isfinite(k0_mu) && std::isfinite(k0_omega) &&
                  tau_beta_shape > 0 && tau_beta_rate > 0 && tau_arma_shape > 0 &&
                  tau_arma_rate > 0 && tau_arma_shift >= 0;
  if (!ok) throw config_error("PriorConfig: shapes/rates must be positive, means finite");
}

Eigen::VectorXd prior_mean_vector(const PriorConfig& cfg, const ParamDims& d) {
  Eigen::VectorXd m = Eigen::VectorXd::Zero(d.param_count());
  m[0] = cfg.k0_lambda;
  m[1] = cfg.k0_mu;
  m[2] = cfg.k0_omega;
  return m;
}

Eigen::VectorXd prior_precision_diag(const Precisions& tau, const ParamDims& d) {
  Eigen::VectorXd prec(d.param_count());
  const int n_beta = 3 + 3 * d.n_inputs;
  prec.head(n_beta).setConstant(tau.tau_beta);
  prec.tail(2 * d.ar_order + 2 * d.ma_order).setConstant(tau.tau_arma);
  return prec;
}

double log_prior_theta(const ModelParams& theta, const Precisions& tau, const PriorConfig& cfg) {
  const ParamDims d = theta.dims();
  const Eigen::VectorXd v = theta.to_vector();
  const Eigen::VectorXd m = prior_mean_vector(cfg, d);
  const Eigen::VectorXd prec = prior_precision_diag(tau, d);
  double acc = 0.0;
  for (int i = 0; i < v.size(); ++i) acc += normal_log_pdf_prec(v[i], m[i], prec[i]);
  return acc;
}

double log_prior_tau(const Precisions& tau, const PriorConfig& cfg) {
  if (!(tau.tau_beta > 0.0) || !(tau.tau_arma > cfg.tau_arma_shift)) return kNegInf;
  return gamma_log_pdf(tau.tau_beta, cfg.tau_beta_shape, cfg.tau_beta_rate) +
         gamma_log_pdf(tau.tau_arma - cfg.tau_arma_shift, cfg.tau_arma_shape, cfg.tau_arma_rate);
}

ModelParams sample_prior(const Precisions& tau, const PriorConfig& cfg, const ParamDims& d,
                         Rng& rng) {
  const Eigen::VectorXd m = prior_mean_vector(cfg, d);
  const Eigen::VectorXd prec = prior_precision_diag(tau, d);
  Eigen::VectorXd v(d.param_count());
  for (int i = 0; i < v.size(); ++i) v[i] = rng.normal(m[i], 1.0 / std::sqrt(prec[i]));
  return ModelParams::from_vector(d, v);
}

Precisions sample_prior_tau(const PriorConfig& cfg, Rng& rng) {
  Precisions tau;
  tau.tau_beta = rng.gamma(cfg.tau_beta_shape, cfg.tau_beta_rate);
  tau.tau_arma = cfg.tau_arma_shift + rng.gamma(cfg.tau_arma_shape, cfg.tau_arma_rate);
  return tau;
}

InitEstimates init_estimates(const Eigen::VectorXd& precip) {
  const auto t_total = double(precip.size());
  if (precip.size() < 2) throw init_error("init_estimates: need at least two days");
  const double n_wet = (precip.array() > 0.0).count();
  if (n_wet == 0) throw init_error("init_estimates: all-dry series");

  const double lambda_hat = std::log((t_total + 0.5) / (t_total - n_wet + 1.0));
  if (!(lambda_hat > 0.0)) throw init_error("init_estimates: lambda estimate not positive");

  const double mean = precip.mean();
  const double var = (precip.array() - mean).square().sum() / (t_total - 1.0);
  const double mu_hat = mean / lambda_hat;
  const double omega_hat = var / (lambda_hat * mu_hat * mu_hat) - 1.0;
  if (!(omega_hat > 0.0)) throw init_error("init_estimates: omega estimate not positive");

  return {std::log(lambda_hat), std::log(mu_hat), std::log(omega_hat)};
}

std::vector<int> init_latent_counts(const LocationData& data, const ModelParams& theta) {
  const int t_total = data.n_days();
  std::vector<int> z(std::size_t(t_total), 0);
  for (int t = 0; t < t_total; ++t)
    if (data.precip[t] > 0.0) z[std::size_t(t)] = 1;

  const ParamSeries s = unroll(theta, data, z).series();
  for (int t = 0; t < t_total; ++t) {
    const double y = data.precip[t];
    if (y <= 0.0) continue;
    const double e = cp_posterior_z_mean(y, {s.lambda[t], s.mu[t], s.omega[t]});
    z[std::size_t(t)] = std::max(1, int(std::floor(e + 0.5)));
  }
  return z;
}

}  // namespace cpt
