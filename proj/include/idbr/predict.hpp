#pragma once

#include <Eigen/Dense>

#include <vector>

#include "idbr/model.hpp"
#include "idbr/rng.hpp"

namespace idbr {

/// Grid position k with u in ((k-1)h, kh], i.e. kh = h ceil(u / h). u = 0 maps to the first point.
int round_up_to_grid(double u, int levels);

/// Outcome of one two-step predictive draw.
struct PredictiveDraw {
  int k;  // grid position, 1-based
  bool inflation_hit;  // taken by the inflation step rather than the beta step
};

/**
 * Two-step predictive sampler: with probability pi(w'gamma) return the
 * inflated level, otherwise draw u ~ Beta(p, q) and round it up to the grid.
 */
PredictiveDraw predictive_draw(const ParamVector& draw, const Design& design, long row, RngState& rng);

/**
 * A prediction set on the reduced grid: a contiguous interval [lo, hi]
 * (empty when lo == 0) plus, optionally, the inflated level.
 */
struct PredictionRegion {
  int lo = 0;
  int hi = 0;
  int inflated_k = 0;  // 0 when the inflated level was not added separately
  bool disjoint = false;
  double coverage = 0.0;  // predictive mass of the region

  bool contains(int k) const { return (lo > 0 && k >= lo && k <= hi) || (inflated_k > 0 && k == inflated_k); }
  std::vector<int> points() const;
};

struct PredictiveDistribution {
  Eigen::VectorXd mass;  // length K, sums to 1
  Eigen::VectorXd beta_mass;  // share of draws taken by the beta step, by level
  double pi_hat = 0.0;  // share of draws taken by the inflation step
  int inflated_k = 0;
  int mode = 1;
  PredictionRegion region;

  int levels() const { return static_cast<int>(mass.size()); }
};

/// Shortest contiguous window of `mass` reaching `need`; ties to fewer points, then the lowest start.
std::pair<int, int> shortest_window(const Eigen::VectorXd& mass, double need);

/// HPD prediction region; separates the inflated level when pi_hat exceeds 1 - level.
PredictionRegion hpd_region(const PredictiveDistribution& dist, double level);

/// (max - min) h of the interval part, plus h when the inflated level stands apart.
double region_length(const PredictionRegion& region, int levels);

/**
 * Empirical predictive law of design row `row`: one two-step draw per
 * posterior draw (rows of `posterior_draws`), mode ties broken toward the
 * lower level, and the HPD region at `level`.
 */
PredictiveDistribution predictive_distribution(const Eigen::MatrixXd& posterior_draws, const ModelSpec& spec,
                                               const Design& design, long row, RngState& rng, double level = 0.95);

/// predictive_distribution for every design row, row i drawing from rng.fork(i).
std::vector<PredictiveDistribution> predictive_distributions(const Eigen::MatrixXd& posterior_draws,
                                                             const ModelSpec& spec, const Design& design,
                                                             const RngState& rng, double level = 0.95);

}  // namespace idbr
