#include "idbr/predict.hpp"

#include <algorithm>
#include <cmath>

namespace idbr {

namespace {
constexpr double kMassTolerance = 1e-12;
}

int round_up_to_grid(double u, int levels) {
  if (!(u > 0.0)) return 1;
  const int k = static_cast<int>(std::ceil(u * levels));
  return std::clamp(k, 1, levels);
}

PredictiveDraw predictive_draw(const ParamVector& draw, const Design& design, long row, RngState& rng) {
  const Predictors pred = linear_predictors(draw, design, row);
  if (design.inflated_k > 0 && draw_uniform(rng) <= pred.pi) return {design.inflated_k, true};
  return {round_up_to_grid(draw_beta(rng, pred.p, pred.q), design.levels), false};
}

std::vector<int> PredictionRegion::points() const {
  std::vector<int> out;
  if (lo > 0) {
    for (int k = lo; k <= hi; ++k) out.push_back(k);
  }
  if (inflated_k > 0 && !(lo > 0 && inflated_k >= lo && inflated_k <= hi)) {
    out.insert(std::upper_bound(out.begin(), out.end(), inflated_k), inflated_k);
  }
  return out;
}

std::pair<int, int> shortest_window(const Eigen::VectorXd& mass, double need) {
  const int levels = static_cast<int>(mass.size());
  for (int width = 1; width <= levels; ++width) {
    for (int start = 1; start + width - 1 <= levels; ++start) {
      if (mass.segment(start - 1, width).sum() >= need - kMassTolerance) return {start, start + width - 1};
    }
  }
  return {1, levels};
}

PredictionRegion hpd_region(const PredictiveDistribution& dist, double level) {
  PredictionRegion region;
  if (dist.inflated_k > 0 && dist.pi_hat > 1.0 - level) {
    region.inflated_k = dist.inflated_k;
    const double need = level - dist.pi_hat;
    if (need > kMassTolerance) {
      std::tie(region.lo, region.hi) = shortest_window(dist.beta_mass, need);
      region.disjoint = dist.inflated_k < region.lo - 1 || dist.inflated_k > region.hi + 1;
    }
  } else {
    std::tie(region.lo, region.hi) = shortest_window(dist.mass, level);
  }
  for (int k : region.points()) region.coverage += dist.mass[k - 1];
  return region;
}

double region_length(const PredictionRegion& region, int levels) {
  const double h = 1.0 / levels;
  double length = region.lo > 0 ? (region.hi - region.lo) * h : 0.0;
  if (region.disjoint) length += h;
  return length;
}

PredictiveDistribution predictive_distribution(const Eigen::MatrixXd& posterior_draws, const ModelSpec& spec,
                                               const Design& design, long row, RngState& rng, double level) {
  const long draws = posterior_draws.rows();
  if (draws == 0) throw SpecificationError("predictive_distribution needs at least one posterior draw");
  const int levels = design.levels;
  Eigen::VectorXi counts = Eigen::VectorXi::Zero(levels);
  Eigen::VectorXi beta_counts = Eigen::VectorXi::Zero(levels);
  long hits = 0;
  ParamVector params(spec);
  for (long l = 0; l < draws; ++l) {
    params.values() = posterior_draws.row(l).transpose();
    const PredictiveDraw d = predictive_draw(params, design, row, rng);
    ++counts[d.k - 1];
    if (d.inflation_hit) ++hits;
    else ++beta_counts[d.k - 1];
  }
  PredictiveDistribution out;
  const double total = static_cast<double>(draws);
  out.mass = counts.cast<double>() / total;
  out.beta_mass = beta_counts.cast<double>() / total;
  out.pi_hat = static_cast<double>(hits) / total;
  out.inflated_k = design.inflated_k;
  out.mode = 1;
  for (int k = 2; k <= levels; ++k) {
    if (counts[k - 1] > counts[out.mode - 1]) out.mode = k;  // strict: ties stay on the lower level
  }
  out.region = hpd_region(out, level);
  return out;
}

std::vector<PredictiveDistribution> predictive_distributions(const Eigen::MatrixXd& posterior_draws,
                                                             const ModelSpec& spec, const Design& design,
                                                             const RngState& rng, double level) {
  std::vector<PredictiveDistribution> out;
  out.reserve(static_cast<std::size_t>(design.n()));
  for (long i = 0; i < design.n(); ++i) {
    RngState row_rng = rng.fork(static_cast<std::uint64_t>(i));
    out.push_back(predictive_distribution(posterior_draws, spec, design, i, row_rng, level));
  }
  return out;
}

}  // namespace idbr
