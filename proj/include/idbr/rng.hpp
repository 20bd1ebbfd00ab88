#pragma once

#include <cstdint>
#include <limits>

namespace idbr {

/**
 * xoshiro256** generator whose state is derived from a (seed, stream) pair
 * through SplitMix64, so every stream is reproducible bit-for-bit on any
 * platform. Distinct stream counters give statistically independent
 * sequences for parallel chains, replications and prediction rows.
 *
 * Satisfies UniformRandomBitGenerator, but the draw_* helpers below should be
 * preferred over <random> distributions, whose output is
 * implementation-defined.
 */
class RngState {
 public:
  using result_type = std::uint64_t;

  RngState(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  /// A new generator on a substream of this one; does not advance *this.
  RngState fork(std::uint64_t substream) const;

  result_type operator()();
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t s_[4];
};

double draw_uniform(RngState& rng);
double draw_normal(RngState& rng, double mean = 0.0, double sd = 1.0);
int draw_bernoulli(RngState& rng, double prob);
double draw_gamma(RngState& rng, double shape);
double draw_beta(RngState& rng, double p, double q);

}  // namespace idbr
