#pragma once

#include <Eigen/Core>
#include <functional>

#include "cpt/rng.hpp"

namespace cpt {

using LogDensityFn = std::function<double(const Eigen::VectorXd&)>;
using LogPmfFn = std::function<double(int)>;

/// Running statistics feeding the adaptive random-walk proposal.  The
/// covariance is maintained with a Welford rank-1 recursion; replaying a
/// sequence reproduces the batch covariance to rounding error.
class AdaptState {
 public:
  AdaptState() : AdaptState(1) {}
  explicit AdaptState(int dim);

  void observe(const Eigen::VectorXd& x);
  Eigen::MatrixXd covariance() const;  // zero matrix until n_seen >= 2

  int dim() const { return int(mean_.size()); }
  long long n_seen() const { return n_seen_; }
  const Eigen::VectorXd& mean() const { return mean_; }

  long long acceptance_count = 0;

  // Serialization hooks (checkpointing).
  const Eigen::MatrixXd& raw_m2() const { return m2_; }
  static AdaptState restore(long long n_seen, Eigen::VectorXd mean, Eigen::MatrixXd m2,
                            long long acceptance_count);

 private:
  long long n_seen_ = 0;
  Eigen::VectorXd mean_;
  Eigen::MatrixXd m2_;  // sum of outer products of deviations
};

struct EssResult {
  Eigen::VectorXd state;
  int n_evals;  // log-likelihood evaluations spent
};

/// Point on the slice ellipse at the given angle; angle == 0 returns
/// `current` exactly (the bracket-shrink fixed point).
Eigen::VectorXd ess_point_on_ellipse(const Eigen::VectorXd& current,
                                     const Eigen::VectorXd& prior_mean,
                                     const Eigen::VectorXd& prior_sample, double angle);

/// Elliptical slice sampling step for a Gaussian prior with arbitrary mean.
/// `prior_sample` must be a fresh draw from the same Gaussian prior
/// (including its mean).  Rejection-free: always returns an accepted state.
/// log_lik may return -inf (shrinks past it); NaN raises kernel_error.
EssResult elliptical_slice_step(const Eigen::VectorXd& current, const Eigen::VectorXd& prior_mean,
                                const Eigen::VectorXd& prior_sample, const LogDensityFn& log_lik,
                                Rng& rng);

/// Adaptive random-walk Metropolis step.  Once n_seen > 2d the proposal is
/// the mixture 0.95 N(x, 2.38^2/d * Cov) + 0.05 N(x, 0.1^2/d * I); before
/// that (or if the adapted covariance is not positive definite) only the
/// fixed component is used.  The adaptation statistics are updated with the
/// realized next state.
Eigen::VectorXd adaptive_mh_step(const Eigen::VectorXd& current, const LogDensityFn& log_target,
                                 AdaptState& adapt, Rng& rng);

/// Slice sampling on a non-negative integer domain: unit-step stepping out
/// from the current point, then uniform integer shrinkage.  Never returns a
/// value below support_min.  Raises kernel_error if the bracket exceeds
/// `bracket_cap` integers.
int integer_slice_step(int current, const LogPmfFn& log_pmf, int support_min, Rng& rng,
                       int bracket_cap = 1000);

}  // namespace cpt
