#pragma once

#include <cmath>
#include <limits>
#include <span>

namespace cpt {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kPi = 3.14159265358979323846;

/// log(exp(a) + exp(b)) without overflow; handles -inf operands.
inline double log_add_exp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = a > b ? a : b;
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

/// log sum of exponentials of a sequence; -inf for an empty or all -inf input.
inline double log_sum_exp(std::span<const double> xs) {
  double m = kNegInf;
  for (double x : xs)
    if (x > m) m = x;
  if (m == kNegInf) return kNegInf;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

/// log Poisson(k; lambda) for k >= 0, lambda > 0.
inline double poisson_log_pmf(double k, double lambda) {
  return k * std::log(lambda) - lambda - std::lgamma(k + 1.0);
}

/// log Gamma(y; shape, rate) for y > 0.  Shape-rate convention:
/// mean = shape/rate, variance = shape/rate^2.
inline double gamma_log_pdf(double y, double shape, double rate) {
  return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(y) - rate * y;
}

/// log N(x; mean, precision tau).
inline double normal_log_pdf_prec(double x, double mean, double tau) {
  const double d = x - mean;
  return 0.5 * std::log(tau / (2.0 * kPi)) - 0.5 * tau * d * d;
}

}  // namespace cpt
