#include "idbr/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace idbr {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

// log of a Gamma(shape, 1) variate; stays finite for shapes far below 1.
double draw_log_gamma(RngState& rng, double shape) {
  if (shape < 1.0) {
    // Gamma(a) = Gamma(a + 1) * U^(1/a)
    double u = draw_uniform(rng);
    while (u == 0.0) u = draw_uniform(rng);
    return draw_log_gamma(rng, shape + 1.0) + std::log(u) / shape;
  }
  // Marsaglia & Tsang squeeze method.
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x;
    double v;
    do {
      x = draw_normal(rng);
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = draw_uniform(rng);
    if (u < 1.0 - 0.0331 * x * x * x * x) return std::log(d * v);
    if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return std::log(d * v);
  }
}

void require(bool ok, const char* what, double value) {
  if (!ok) throw std::domain_error(std::string(what) + ": invalid parameter (" + std::to_string(value) + ")");
}

}  // namespace

RngState::RngState(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {
  std::uint64_t mix = seed;
  const std::uint64_t a = splitmix64(mix);
  mix = stream ^ a;
  splitmix64(mix);
  for (auto& word : s_) word = splitmix64(mix);
}

RngState RngState::fork(std::uint64_t substream) const {
  std::uint64_t mix = stream_ * 0x9e3779b97f4a7c15ULL + substream + 1;
  return RngState(seed_ ^ splitmix64(mix), substream);
}

RngState::result_type RngState::operator()() {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double draw_uniform(RngState& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double draw_normal(RngState& rng, double mean, double sd) {
  require(sd >= 0.0 && std::isfinite(sd), "draw_normal sd", sd);
  // Box-Muller, one variate per call so the stream position is a pure function of call count.
  double u1 = draw_uniform(rng);
  while (u1 == 0.0) u1 = draw_uniform(rng);
  const double u2 = draw_uniform(rng);
  return mean + sd * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

int draw_bernoulli(RngState& rng, double prob) {
  require(prob >= 0.0 && prob <= 1.0, "draw_bernoulli prob", prob);
  return draw_uniform(rng) < prob ? 1 : 0;
}

double draw_gamma(RngState& rng, double shape) {
  require(shape > 0.0 && std::isfinite(shape), "draw_gamma shape", shape);
  return std::exp(draw_log_gamma(rng, shape));
}

double draw_beta(RngState& rng, double p, double q) {
  require(p > 0.0 && std::isfinite(p), "draw_beta p", p);
  require(q > 0.0 && std::isfinite(q), "draw_beta q", q);
  const double lg1 = draw_log_gamma(rng, p);
  const double lg2 = draw_log_gamma(rng, q);
  // G1 / (G1 + G2) computed as a logistic of the log ratio.
  return 1.0 / (1.0 + std::exp(lg2 - lg1));
}

}  // namespace idbr
