#include "idbr/numeric.hpp"

#include <math.h>

#include <string>

namespace idbr::numeric {

namespace {

[[noreturn]] void domain_fail(const char* what, double value) {
  throw std::domain_error(std::string(what) + ": argument out of domain (" + std::to_string(value) + ")");
}

// Modified Lentz evaluation of the incomplete beta continued fraction.
double beta_continued_fraction(double x, double p, double q) {
  constexpr int kMaxIter = 10000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;

  const double qab = p + q;
  const double qap = p + 1.0;
  const double qam = p - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (q - m) * x / ((qam + m2) * (p + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(p + m) * (qab + m) * x / ((p + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

// I_x(p, q) evaluated directly; accurate when x is below the switch point.
double lower_tail(const Endpoint& e, double p, double q, double log_beta_pq) {
  if (e.x <= 0.0) return 0.0;
  const double front = std::exp(p * e.log_x + q * e.log_1mx - log_beta_pq);
  return front * beta_continued_fraction(e.x, p, q) / p;
}

// 1 - I_x(p, q) = I_{1-x}(q, p); accurate when x is above the switch point.
double upper_tail(const Endpoint& e, double p, double q, double log_beta_pq) {
  if (e.x >= 1.0) return 0.0;
  const double front = std::exp(p * e.log_x + q * e.log_1mx - log_beta_pq);
  return front * beta_continued_fraction(1.0 - e.x, q, p) / q;
}

bool use_lower(double x, double p, double q) { return x < (p + 1.0) / (p + q + 2.0); }

void check_shape(double p, double q) {
  if (!(p > 0.0) || !std::isfinite(p)) domain_fail("beta shape p", p);
  if (!(q > 0.0) || !std::isfinite(q)) domain_fail("beta shape q", q);
}

}  // namespace

double log_gamma(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) domain_fail("log_gamma", x);
  int sign = 0;
  return ::lgamma_r(x, &sign);
}

double log_beta(double p, double q) {
  check_shape(p, q);
  return log_gamma(p) + log_gamma(q) - log_gamma(p + q);
}

double reg_inc_beta(double x, double p, double q) {
  if (!(x >= 0.0 && x <= 1.0)) domain_fail("reg_inc_beta x", x);
  check_shape(p, q);
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double lb = log_beta(p, q);
  const Endpoint e = Endpoint::at(x);
  double value = use_lower(x, p, q) ? lower_tail(e, p, q, lb) : 1.0 - upper_tail(e, p, q, lb);
  if (value < 0.0) value = 0.0;
  if (value > 1.0) value = 1.0;
  return value;
}

double beta_interval(double lo, double hi, double p, double q, double log_beta_pq) {
  if (!(lo >= 0.0 && hi <= 1.0 && lo <= hi)) domain_fail("beta_interval bounds", lo);
  return beta_interval(Endpoint::at(lo), Endpoint::at(hi), p, q, log_beta_pq);
}

double beta_interval(const Endpoint& lo_end, const Endpoint& hi_end, double p, double q, double log_beta_pq) {
  const double lo = lo_end.x;
  const double hi = hi_end.x;
  if (lo >= hi) return 0.0;
  const bool lo_lower = lo <= 0.0 || use_lower(lo, p, q);
  const bool hi_lower = hi < 1.0 && use_lower(hi, p, q);
  double prob;
  if (lo_lower && hi_lower) {
    prob = lower_tail(hi_end, p, q, log_beta_pq) - lower_tail(lo_end, p, q, log_beta_pq);
  } else if (!lo_lower && !hi_lower) {
    prob = upper_tail(lo_end, p, q, log_beta_pq) - upper_tail(hi_end, p, q, log_beta_pq);
  } else {
    prob = 1.0 - lower_tail(lo_end, p, q, log_beta_pq) - upper_tail(hi_end, p, q, log_beta_pq);
  }
  if (prob < 0.0) prob = 0.0;
  if (prob > 1.0) prob = 1.0;
  return prob;
}

}  // namespace idbr::numeric
