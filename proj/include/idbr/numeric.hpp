#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>

namespace idbr {

/// Smallest interval probability admitted before taking logs.
inline constexpr double kProbabilityFloor = 1e-300;

namespace numeric {

/// ln Gamma(x) for finite x > 0.
double log_gamma(double x);

/// ln B(p, q) = lnGamma(p) + lnGamma(q) - lnGamma(p + q).
double log_beta(double p, double q);

/// Regularized incomplete beta function I_x(p, q), the Beta(p, q) CDF at x.
double reg_inc_beta(double x, double p, double q);

/**
 * Probability that a Beta(p, q) variate falls in (lo, hi].
 *
 * Both endpoints are evaluated on the same side of the symmetry switch when
 * possible, so upper-tail cells do not lose precision to 1 - I cancellation.
 * `log_beta_pq` lets callers that evaluate several cells for one (p, q)
 * share the normalizing constant.
 */
double beta_interval(double lo, double hi, double p, double q, double log_beta_pq);

/// An interval endpoint x with its precomputed log(x) and log(1 - x).
struct Endpoint {
  double x;
  double log_x;
  double log_1mx;

  static Endpoint at(double x) { return {x, std::log(x), std::log1p(-x)}; }
};

/// beta_interval with endpoint logs supplied by the caller (hot path of the likelihood).
double beta_interval(const Endpoint& lo, const Endpoint& hi, double p, double q, double log_beta_pq);

inline double beta_interval(double lo, double hi, double p, double q) {
  return beta_interval(lo, hi, p, q, log_beta(p, q));
}

/// max(prob, kProbabilityFloor), then log.
inline double floored_log(double prob) { return std::log(prob < kProbabilityFloor ? kProbabilityFloor : prob); }

}  // namespace numeric
}  // namespace idbr
