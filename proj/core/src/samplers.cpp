#include "cpt/samplers.hpp"

#include <Eigen/Cholesky>
#include <cmath>

#include "cpt/errors.hpp"
#include "cpt/math_util.hpp"

namespace cpt {

AdaptState::AdaptState(int dim)
    : mean_(Eigen::VectorXd::Zero(dim)), m2_(Eigen::MatrixXd::Zero(dim, dim)) {}

void AdaptState::observe(const Eigen::VectorXd& x) {
  ++n_seen_;
  const Eigen::VectorXd delta = x - mean_;
  mean_ += delta / double(n_seen_);
  m2_ += delta * (x - mean_).transpose();
}

Eigen::MatrixXd AdaptState::covariance() const {
  if (n_seen_ < 2) return Eigen::MatrixXd::Zero(dim(), dim());
  // m2_ is symmetric up to rounding; symmetrize before factorization.
  return (m2_ + m2_.transpose()) / (2.0 * double(n_seen_ - 1));
}

AdaptState AdaptState::restore(long long n_seen, Eigen::VectorXd mean, Eigen::MatrixXd m2,
                               long long acceptance_count) {
  AdaptState s(int(mean.size()));
  s.n_seen_ = n_seen;
  s.mean_ = std::move(mean);
  s.m2_ = std::move(m2);
  s.acceptance_count = acceptance_count;
  return s;
}

Eigen::VectorXd ess_point_on_ellipse(const Eigen::VectorXd& current,
                                     const Eigen::VectorXd& prior_mean,
                                     const Eigen::VectorXd& prior_sample, double angle) {
  if (angle == 0.0) return current;
  return (current - prior_mean) * std::cos(angle) + (prior_sample - prior_mean) * std::sin(angle) +
         prior_mean;
}

EssResult elliptical_slice_step(const Eigen::VectorXd& current, const Eigen::VectorXd& prior_mean,
                                const Eigen::VectorXd& prior_sample, const LogDensityFn& log_lik,
                                Rng& rng) {
  const double ll0 = log_lik(current);
  if (std::isnan(ll0)) throw kernel_error("elliptical slice: NaN log-likelihood at current state");
  if (ll0 == kNegInf)
    throw kernel_error("elliptical slice: current state has zero likelihood");

  const double log_y = ll0 + std::log(rng.uniform());
  double angle = rng.uniform(0.0, 2.0 * kPi);
  double lo = angle - 2.0 * kPi;
  double hi = angle;

  int n_evals = 0;
  // The bracket shrinks toward 0 where the proposal equals `current`, whose
  // likelihood exceeds the slice height; termination is guaranteed.
  for (int iter = 0; iter < 1000; ++iter) {
    const Eigen::VectorXd proposal = ess_point_on_ellipse(current, prior_mean, prior_sample, angle);
    const double ll = log_lik(proposal);
    ++n_evals;
    if (std::isnan(ll)) throw kernel_error("elliptical slice: NaN log-likelihood at proposal");
    if (ll > log_y) return {proposal, n_evals};
    if (angle < 0.0)
      lo = angle;
    else
      hi = angle;
    angle = rng.uniform(lo, hi);
  }
  throw kernel_error("elliptical slice: bracket failed to shrink");
}

Eigen::VectorXd adaptive_mh_step(const Eigen::VectorXd& current, const LogDensityFn& log_target,
                                 AdaptState& adapt, Rng& rng) {
  const int d = int(current.size());
  const double fixed_sd = 0.1 / std::sqrt(double(d));

  Eigen::VectorXd noise(d);
  for (int i = 0; i < d; ++i) noise[i] = rng.normal();

  bool use_adapted = adapt.n_seen() > 2 * d;
  double mix = use_adapted ? rng.uniform() : 1.0;  // 1.0 forces the fixed component

  Eigen::VectorXd proposal;
  if (use_adapted && mix >= 0.05) {
    const Eigen::MatrixXd cov = adapt.covariance() * (2.38 * 2.38 / double(d));
    const Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() == Eigen::Success)
      proposal = current + llt.matrixL() * noise;
    else
      use_adapted = false;  // singular sample covariance: fall back
  }
  if (proposal.size() == 0) proposal = current + fixed_sd * noise;

  const double la = log_target(current);
  if (std::isnan(la)) throw kernel_error("adaptive MH: NaN log-target at current state");
  const double lb = log_target(proposal);

  Eigen::VectorXd next = current;
  if (!std::isnan(lb) && std::log(rng.uniform()) < lb - la) {
    next = proposal;
    ++adapt.acceptance_count;
  }
  adapt.observe(next);
  return next;
}

int integer_slice_step(int current, const LogPmfFn& log_pmf, int support_min, Rng& rng,
                       int bracket_cap) {
  const double l0 = log_pmf(current);
  if (std::isnan(l0) || l0 == kNegInf)
    throw kernel_error("integer slice: current point has no mass");

  const double log_y = l0 + std::log(rng.uniform());

  int lo = current - 1;
  int steps = 0;
  while (lo >= support_min && log_pmf(lo) > log_y) {
    --lo;
    if (++steps > bracket_cap) throw kernel_error("integer slice: unbounded lower bracket");
  }
  int hi = current + 1;
  while (log_pmf(hi) > log_y) {
    ++hi;
    if (++steps > bracket_cap) throw kernel_error("integer slice: unbounded upper bracket");
  }

  int a = std::max(lo + 1, support_min);
  int b = hi - 1;
  while (true) {
    const int cand = rng.uniform_int(a, b);
    if (log_pmf(cand) > log_y) return cand;
    if (cand < current)
      a = cand + 1;
    else
      b = cand - 1;
  }
}

}  // namespace cpt
