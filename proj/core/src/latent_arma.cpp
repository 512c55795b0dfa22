#include "cpt/latent_arma.hpp"

#include <cmath>
#include <string>

#include "cpt/errors.hpp"
#include "cpt/math_util.hpp"

namespace cpt {

ParamDims ModelParams::dims() const {
  return {int(beta_lambda.size()), int(phi_lambda.size()), int(gamma_lambda.size())};
}

ModelParams ModelParams::zeros(const ParamDims& d) {
  ModelParams th;
  th.beta_lambda = Eigen::VectorXd::Zero(d.n_inputs);
  th.beta_mu = Eigen::VectorXd::Zero(d.n_inputs);
  th.beta_omega = Eigen::VectorXd::Zero(d.n_inputs);
  th.phi_lambda = Eigen::VectorXd::Zero(d.ar_order);
  th.phi_mu = Eigen::VectorXd::Zero(d.ar_order);
  th.gamma_lambda = Eigen::VectorXd::Zero(d.ma_order);
  th.gamma_mu = Eigen::VectorXd::Zero(d.ma_order);
  return th;
}

Eigen::VectorXd ModelParams::to_vector() const {
  const ParamDims d = dims();
  Eigen::VectorXd v(d.param_count());
  int at = 0;
  v[at++] = k_lambda;
  v[at++] = k_mu;
  v[at++] = k_omega;
  auto put = [&](const Eigen::VectorXd& x) {
    v.segment(at, x.size()) = x;
    at += int(x.size());
  };
  put(beta_lambda);
  put(beta_mu);
  put(beta_omega);
  put(phi_lambda);
  put(phi_mu);
  put(gamma_lambda);
  put(gamma_mu);
  return v;
}

ModelParams ModelParams::from_vector(const ParamDims& d, const Eigen::VectorXd& v) {
  if (v.size() != d.param_count())
    throw domain_error("ModelParams::from_vector: wrong length " + std::to_string(v.size()));
  ModelParams th;
  int at = 0;
  th.k_lambda = v[at++];
  th.k_mu = v[at++];
  th.k_omega = v[at++];
  auto take = [&](int n) {
    Eigen::VectorXd x = v.segment(at, n);
    at += n;
    return x;
  };
  th.beta_lambda = take(d.n_inputs);
  th.beta_mu = take(d.n_inputs);
  th.beta_omega = take(d.n_inputs);
  th.phi_lambda = take(d.ar_order);
  th.phi_mu = take(d.ar_order);
  th.gamma_lambda = take(d.ma_order);
  th.gamma_mu = take(d.ma_order);
  return th;
}

void LocationData::validate() const {
  const int t = n_days();
  if (t < 1) throw data_error("LocationData: empty series");
  if (inputs.rows() != t) throw data_error("LocationData: inputs/precip length mismatch");
  if (int(calendar.size()) != t) throw data_error("LocationData: calendar length mismatch");
  if (!precip.allFinite() || (precip.array() < 0.0).any())
    throw domain_error("LocationData: precip must be finite and >= 0");
  if (!inputs.allFinite()) throw domain_error("LocationData: inputs must be finite");
}

ParamSeries UnrollTrace::series() const {
  return {log_lambda.exp(), log_mu.exp(), log_omega.exp()};
}

double ma_residual_count(double z, double lambda) { return (z - lambda) / std::sqrt(lambda); }

double ma_residual_amount(double y, double z, double mu, double omega) {
  if (z == 0.0) return 0.0;
  return (y - z * mu) / (mu * std::sqrt(z * omega));
}

namespace {

[[noreturn]] void diverged(int t) {
  throw divergence_error(
      "latent recursion produced a non-positive or non-finite parameter at index " +
          std::to_string(t),
      t);
}

struct DayLinksInternal {
  double log_lambda, log_mu, log_omega;
};

/// Linear predictors for day t; lagged values come through the accessors so
/// the same arithmetic serves full unrolls, suffix recomputations, and the
/// forward simulator.
template <class XRow, class LagLogLam, class LagLogMu, class LagEpsC, class LagEpsA>
DayLinksInternal day_links_impl(const ModelParams& th, const XRow& x, int t, LagLogLam log_lam_at,
                                LagLogMu log_mu_at, LagEpsC eps_c_at, LagEpsA eps_a_at) {
  double ll = th.k_lambda;
  double lm = th.k_mu;
  double lo = th.k_omega;
  if (th.beta_lambda.size() > 0) {
    ll += x.dot(th.beta_lambda);
    lm += x.dot(th.beta_mu);
    lo += x.dot(th.beta_omega);
  }
  const int p = int(th.phi_lambda.size());
  for (int i = 1; i <= p && t - i >= 0; ++i) {
    ll += th.phi_lambda[i - 1] * (log_lam_at(t - i) - th.k_lambda);
    lm += th.phi_mu[i - 1] * (log_mu_at(t - i) - th.k_mu);
  }
  const int q = int(th.gamma_lambda.size());
  for (int i = 1; i <= q && t - i >= 0; ++i) {
    ll += th.gamma_lambda[i - 1] * eps_c_at(t - i);
    lm += th.gamma_mu[i - 1] * eps_a_at(t - i);
  }
  return {ll, lm, lo};
}

}  // namespace

DayLinks arma_day_links(const ModelParams& theta, const Eigen::VectorXd& x_t,
                        std::span<const double> log_lambda_hist,
                        std::span<const double> log_mu_hist,
                        std::span<const double> eps_count_hist,
                        std::span<const double> eps_amount_hist, int t) {
  const DayLinksInternal lk = day_links_impl(
      theta, x_t, t, [&](int s) { return log_lambda_hist[std::size_t(s)]; },
      [&](int s) { return log_mu_hist[std::size_t(s)]; },
      [&](int s) { return eps_count_hist[std::size_t(s)]; },
      [&](int s) { return eps_amount_hist[std::size_t(s)]; });
  return {lk.log_lambda, lk.log_mu, lk.log_omega};
}

void refresh_trace_suffix(UnrollTrace& trace, const ModelParams& theta, const LocationData& data,
                          std::span<const int> z, int t_start) {
  const int t_total = data.n_days();
  for (int t = t_start; t < t_total; ++t) {
    const DayLinksInternal lk = day_links_impl(
        theta, data.inputs.row(t), t, [&](int s) { return trace.log_lambda[s]; },
        [&](int s) { return trace.log_mu[s]; }, [&](int s) { return trace.eps_count[s]; },
        [&](int s) { return trace.eps_amount[s]; });
    const double lambda = std::exp(lk.log_lambda);
    const double mu = std::exp(lk.log_mu);
    const double omega = std::exp(lk.log_omega);
    if (!std::isfinite(lambda) || lambda <= 0.0 || !std::isfinite(mu) || mu <= 0.0 ||
        !std::isfinite(omega) || omega <= 0.0)
      diverged(t);
    trace.log_lambda[t] = lk.log_lambda;
    trace.log_mu[t] = lk.log_mu;
    trace.log_omega[t] = lk.log_omega;
    trace.eps_count[t] = ma_residual_count(double(z[t]), lambda);
    trace.eps_amount[t] = ma_residual_amount(data.precip[t], double(z[t]), mu, omega);
  }
}

UnrollTrace unroll(const ModelParams& theta, const LocationData& data, std::span<const int> z) {
  data.validate();
  if (int(z.size()) != data.n_days()) throw data_error("unroll: z length mismatch");
  const int t_total = data.n_days();
  UnrollTrace trace;
  trace.log_lambda.resize(t_total);
  trace.log_mu.resize(t_total);
  trace.log_omega.resize(t_total);
  trace.eps_count.resize(t_total);
  trace.eps_amount.resize(t_total);
  refresh_trace_suffix(trace, theta, data, z, 0);
  return trace;
}

double day_log_likelihood(int z, double y, double lambda, double mu, double omega) {
  if (y > 0.0) {
    if (z < 1) return kNegInf;
    return poisson_log_pmf(double(z), lambda) +
           gamma_log_pdf(y, double(z) / omega, 1.0 / (omega * mu));
  }
  return z == 0 ? -lambda : kNegInf;
}

double log_likelihood(const ModelParams& theta, const LocationData& data,
                      std::span<const int> z) {
  const UnrollTrace trace = unroll(theta, data, z);
  const ParamSeries s = trace.series();
  double acc = 0.0;
  for (int t = 0; t < data.n_days(); ++t) {
    const double term = day_log_likelihood(z[t], data.precip[t], s.lambda[t], s.mu[t], s.omega[t]);
    if (term == kNegInf) return kNegInf;
    // Extreme parameter combinations can overflow a term (inf - inf) even
    // when each parameter is individually in range; that is a divergence.
    if (std::isnan(term)) diverged(t);
    acc += term;
  }
  return acc;
}

double suffix_log_likelihood(const ModelParams& theta, const LocationData& data,
                             std::span<const int> z, int t_start, int z_at_start,
                             const UnrollTrace& prefix, int horizon_days) {
  const int t_total = data.n_days();
  const int t_end =
      horizon_days > 0 ? std::min(t_total, t_start + horizon_days) : t_total;
  const int window = t_end - t_start;
  std::vector<double> w_log_lam(window), w_log_mu(window), w_eps_c(window), w_eps_a(window);

  auto pick = [&](const Eigen::ArrayXd& pre, const std::vector<double>& local, int s) {
    return s < t_start ? pre[s] : local[std::size_t(s - t_start)];
  };

  double acc = 0.0;
  for (int t = t_start; t < t_end; ++t) {
    const DayLinksInternal lk = day_links_impl(
        theta, data.inputs.row(t), t, [&](int s) { return pick(prefix.log_lambda, w_log_lam, s); },
        [&](int s) { return pick(prefix.log_mu, w_log_mu, s); },
        [&](int s) { return pick(prefix.eps_count, w_eps_c, s); },
        [&](int s) { return pick(prefix.eps_amount, w_eps_a, s); });
    const double lambda = std::exp(lk.log_lambda);
    const double mu = std::exp(lk.log_mu);
    const double omega = std::exp(lk.log_omega);
    if (!std::isfinite(lambda) || lambda <= 0.0 || !std::isfinite(mu) || mu <= 0.0 ||
        !std::isfinite(omega) || omega <= 0.0)
      diverged(t);

    const int zt = t == t_start ? z_at_start : z[t];
    const double term = day_log_likelihood(zt, data.precip[t], lambda, mu, omega);
    if (term == kNegInf) return kNegInf;
    if (std::isnan(term)) diverged(t);
    acc += term;

    const int w = t - t_start;
    w_log_lam[w] = lk.log_lambda;
    w_log_mu[w] = lk.log_mu;
    w_eps_c[w] = ma_residual_count(double(zt), lambda);
    w_eps_a[w] = ma_residual_amount(data.precip[t], double(zt), mu, omega);
  }
  return acc;
}

}  // namespace cpt
