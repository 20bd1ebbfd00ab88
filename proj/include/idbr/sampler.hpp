#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "idbr/model.hpp"
#include "idbr/rng.hpp"

namespace idbr {

struct SamplerConfig {
  int burn_in = 1000;
  int keep = 1000;
  int n_chains = 3;
  double target_accept = 0.44;
  std::uint64_t seed = 1;
  int adapt_window = 50;
  double initial_scale = 0.1;
  double hpd_level = 0.95;
  /// Run chains on separate threads. Results do not depend on this flag.
  bool parallel = true;

  void validate() const;
};

/// Retained draws and proposal statistics of one chain.
struct ChainResult {
  Eigen::MatrixXd draws;  // keep x dim
  Eigen::VectorXd acceptance;  // post burn-in acceptance rate per coordinate
  Eigen::VectorXd last_batch_acceptance;  // acceptance over the final adaptation batch
  Eigen::VectorXd scales;  // proposal scales, frozen at the end of burn-in
  bool scales_frozen = true;  // scales never changed after burn-in
};

struct PosteriorSample {
  std::vector<std::string> names;
  std::vector<Eigen::MatrixXd> draws;  // one keep x dim block per chain
  Eigen::VectorXd acceptance;
  Eigen::VectorXd gelman;
  Eigen::VectorXd medians;
  Eigen::MatrixXd hpd;  // dim x 2
  Eigen::VectorXd effective_sizes;
  Eigen::VectorXd sign_p;
  double hpd_level = 0.95;
  std::vector<std::string> warnings;

  int dim() const { return static_cast<int>(names.size()); }
  long pooled_size() const;
  /// All chains stacked, chain-major.
  Eigen::MatrixXd pooled() const;
};

/**
 * Target density for coordinate-wise Metropolis updates. Implementations
 * keep whatever cache they need so that moving one coordinate is cheap.
 */
class MetropolisTarget {
 public:
  virtual ~MetropolisTarget() = default;
  virtual const Eigen::VectorXd& state() const = 0;
  virtual double log_density() const = 0;
  /// Log density with coordinate j set to value; pending until accept().
  virtual double propose(int j, double value) = 0;
  virtual void accept() = 0;
  /// The point recorded as a draw; defaults to state().
  virtual const Eigen::VectorXd& draw() const { return state(); }
};

/**
 * log_posterior of the IDBR model backed by IncrementalLikelihood.
 *
 * Proposals act on centered coordinates: in every submodel with a leading
 * all-ones column the other columns are centered at their means and the
 * intercept absorbs the shift. draw() and the prior box use the original
 * coefficients.
 */
class PosteriorTarget final : public MetropolisTarget {
 public:
  PosteriorTarget(const Design& design, const ParamVector& init);
  PosteriorTarget(const PosteriorTarget&) = delete;
  PosteriorTarget& operator=(const PosteriorTarget&) = delete;

  const Eigen::VectorXd& state() const override { return cache_.params().values(); }
  double log_density() const override { return cache_.log_likelihood(); }
  double propose(int j, double value) override;
  void accept() override;
  const Eigen::VectorXd& draw() const override { return original_; }

 private:
  Eigen::VectorXi intercept_of_;  // coordinate of the absorbing intercept, -1 if none
  Eigen::VectorXd shift_;         // column mean per coordinate, 0 for intercepts
  Design centered_;
  Eigen::VectorXd original_;
  Eigen::VectorXd pending_;
  IncrementalLikelihood cache_;
};

/// Wraps an arbitrary log density; re-evaluates it on every proposal.
class FunctionTarget final : public MetropolisTarget {
 public:
  using LogDensity = std::function<double(const Eigen::VectorXd&)>;
  FunctionTarget(LogDensity f, Eigen::VectorXd init);
  const Eigen::VectorXd& state() const override { return state_; }
  double log_density() const override { return current_; }
  double propose(int j, double value) override;
  void accept() override;

 private:
  LogDensity f_;
  Eigen::VectorXd state_;
  Eigen::VectorXd pending_;
  double current_;
  double pending_value_ = 0.0;
};

/// Marginal mean, variance and proportion estimates for the intercepts; zeros elsewhere.
ParamVector init_chain_1(const Dataset& data, const ModelSpec& spec, std::vector<std::string>* warnings = nullptr);
/// Approximately a uniform response without inflation.
ParamVector init_chain_2(const ModelSpec& spec);
/// `base` plus the given per-coordinate jitter, clipped to the prior box.
ParamVector init_chain_3(const ParamVector& base, const Eigen::VectorXd& jitter);
/// init_chain_1 plus uniform jitter on [-0.5, 0.5] drawn from rng.
ParamVector init_chain_3(const Dataset& data, const ModelSpec& spec, RngState& rng);

/**
 * Component-wise random-walk Metropolis with adaptive proposal scales.
 *
 * Every iteration sweeps all coordinates, proposing x_j + s_j N(0, 1).
 * During burn-in, after each batch of `adapt_window` iterations, log s_j is
 * moved by (batch acceptance - target) * 2 / sqrt(batch); scales are frozen
 * afterwards so the retained draws come from a fixed kernel.
 */
ChainResult run_chain(MetropolisTarget& target, const SamplerConfig& cfg, RngState& rng);
ChainResult run_chain(const ParamVector& init, const Design& design, const SamplerConfig& cfg, RngState& rng);

/// Potential scale reduction factor per parameter; chains are keep x dim.
Eigen::VectorXd gelman_rubin(const std::vector<Eigen::MatrixXd>& chains);

/// Shortest window of ceil(level * L) consecutive sorted draws; ties go to the lowest start.
std::pair<double, double> hpd_interval(const std::vector<double>& sorted_draws, double level);

/// Effective sample size from the initial positive sequence of autocorrelations, summed over chains.
double effective_size(const std::vector<Eigen::VectorXd>& chains);

/// Share of draws whose sign opposes the sign of the median (0.5 when the median is 0).
double sign_opposition(const Eigen::VectorXd& draws, double median);

/// Posterior summaries of already-run chains.
PosteriorSample summarize(std::vector<ChainResult> chains, const std::vector<std::string>& names, double hpd_level);

PosteriorSample fit(const Dataset& data, const ModelSpec& spec, const SamplerConfig& cfg);

}  // namespace idbr
