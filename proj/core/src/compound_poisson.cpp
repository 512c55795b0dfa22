#include "cpt/compound_poisson.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "cpt/errors.hpp"
#include "cpt/math_util.hpp"

namespace cpt {

namespace {

bool positive_finite(double v) { return std::isfinite(v) && v > 0.0; }

std::string describe(double y, const CpParams& p) {
  std::ostringstream os;
  os << "y=" << y << " lambda=" << p.lambda << " mu=" << p.mu << " omega=" << p.omega;
  return os.str();
}

/// log of the z-th series term: Poisson(z; lambda) * Gamma(y; z/w, 1/(w*mu)).
double log_term(int z, double y, const CpParams& p) {
  const double shape = double(z) / p.omega;
  const double rate = 1.0 / (p.omega * p.mu);
  return poisson_log_pmf(double(z), p.lambda) + gamma_log_pdf(y, shape, rate);
}

[[noreturn]] void series_fail(double y, const CpParams& p) {
  throw series_error("compound Poisson series window exceeded " +
                     std::to_string(kSeriesMaxTerms) + " terms at " + describe(y, p));
}

}  // namespace

void CpParams::validate() const {
  if (!positive_finite(lambda) || !positive_finite(mu) || !positive_finite(omega))
    throw domain_error("CpParams must be strictly positive and finite: " + describe(0.0, *this));
}

TermRange cp_term_range(double y, const CpParams& p) {
  p.validate();
  if (!(y > 0.0) || !std::isfinite(y)) throw domain_error("cp_term_range requires y > 0");

  // The log terms are concave in z, so scanning up from z = 1 finds the mode.
  int mode = 1;
  double t_mode = log_term(1, y, p);
  while (true) {
    const double t_next = log_term(mode + 1, y, p);
    if (t_next <= t_mode) break;
    ++mode;
    t_mode = t_next;
    if (mode > kSeriesMaxTerms) series_fail(y, p);
  }

  const double cutoff = t_mode + std::log(kSeriesRelTol);

  int hi = mode;
  while (log_term(hi + 1, y, p) >= cutoff) {
    ++hi;
    if (hi >= kSeriesMaxTerms) series_fail(y, p);
  }
  int lo = mode;
  while (lo > 1 && log_term(lo - 1, y, p) >= cutoff) --lo;

  return {lo, hi};
}

double cp_log_density(double y, const CpParams& p) {
  p.validate();
  if (!std::isfinite(y) || y < 0.0) throw domain_error("cp_log_density requires y >= 0");
  if (y == 0.0) return -p.lambda;

  const TermRange r = cp_term_range(y, p);
  std::vector<double> terms;
  terms.reserve(std::size_t(r.z_hi - r.z_lo + 1));
  for (int z = r.z_lo; z <= r.z_hi; ++z) terms.push_back(log_term(z, y, p));
  return log_sum_exp(terms);
}

CpDraw cp_sample(const CpParams& p, Rng& rng) {
  p.validate();
  const int z = rng.poisson(p.lambda);
  if (z == 0) return {0, 0.0};
  double y = rng.gamma(double(z) / p.omega, 1.0 / (p.omega * p.mu));
  // A tiny-shape Gamma draw can underflow to exactly 0; keep y = 0 <=> z = 0.
  if (y <= 0.0) y = std::numeric_limits<double>::min();
  return {z, y};
}

double cp_z_log_conditional(int z, double y, const CpParams& p) {
  p.validate();
  if (!std::isfinite(y) || y < 0.0) throw domain_error("cp_z_log_conditional requires y >= 0");
  if (y == 0.0) return z == 0 ? -p.lambda : kNegInf;
  if (z < 1) return kNegInf;
  return log_term(z, y, p);
}

double cp_posterior_z_mean(double y, const CpParams& p) {
  p.validate();
  if (!std::isfinite(y) || y < 0.0) throw domain_error("cp_posterior_z_mean requires y >= 0");
  if (y == 0.0) return 0.0;

  const TermRange r = cp_term_range(y, p);
  double log_num = kNegInf;
  double log_den = kNegInf;
  for (int z = r.z_lo; z <= r.z_hi; ++z) {
    const double t = log_term(z, y, p);
    log_den = log_add_exp(log_den, t);
    log_num = log_add_exp(log_num, t + std::log(double(z)));
  }
  return std::exp(log_num - log_den);
}

}  // namespace cpt
