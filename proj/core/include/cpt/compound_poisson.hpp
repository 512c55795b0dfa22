#pragma once

#include "cpt/rng.hpp"

namespace cpt {

/// Daily compound Poisson parameters: a day's precipitation is the sum of a
/// Poisson(lambda) number of events, each event a Gamma amount.  The Gamma is
/// parameterized shape-rate with shape z/omega and rate 1/(omega*mu) so that
/// E[Y|Z=z] = z*mu and Var[Y|Z=z] = z*omega*mu^2.
struct CpParams {
  double lambda;  // expected rain-event count per day
  double mu;      // mm, mean rain per event
  double omega;   // dispersion, dimensionless

  void validate() const;  // throws domain_error unless all strictly positive and finite
};

/// Integer window of the event-count series outside which every term is
/// negligible relative to the maximal term.
struct TermRange {
  int z_lo;  // >= 1
  int z_hi;  // >= z_lo
};

struct CpDraw {
  int z;     // event count
  double y;  // precipitation, mm; y == 0 iff z == 0
};

/// Relative tolerance for dropping series terms and the hard cap on how far
/// the window may extend before the evaluation is declared failed.
inline constexpr double kSeriesRelTol = 1e-12;
inline constexpr int kSeriesMaxTerms = 10000;

/// Window of non-negligible terms for the series at y > 0.  Always contains
/// the term argmax.  Throws series_error if the window would pass the cap.
TermRange cp_term_range(double y, const CpParams& p);

/// Log density/mass of the day total.  y == 0 returns -lambda (the Poisson
/// zero atom); y > 0 sums the Gamma mixture over the truncated window in log
/// space.
double cp_log_density(double y, const CpParams& p);

/// One draw of (event count, day total).
CpDraw cp_sample(const CpParams& p, Rng& rng);

/// Log of the unnormalized joint mass P(Z = z, Y = y).  Structural zeros
/// (y = 0 with z > 0, or y > 0 with z = 0) give -inf, never an error.
double cp_z_log_conditional(int z, double y, const CpParams& p);

/// E[Z | Y = y]; 0 when y == 0, otherwise the ratio of truncated series.
double cp_posterior_z_mean(double y, const CpParams& p);

}  // namespace cpt
