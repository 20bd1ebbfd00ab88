#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "idbr/model.hpp"
#include "idbr/predict.hpp"
#include "idbr/rng.hpp"
#include "idbr/sampler.hpp"

namespace idbr {

enum class Generator { Idbr, RoundedLinear };

/// Coefficients of the rounded-linear generator on (1, V1..V4, D1..D3) plus noise sd.
struct LinearTruth {
  Eigen::VectorXd coefficients;
  double noise_sd = 0.0;

  /// Arbitrary default: latent mean near 0.5, latent sd near 0.15.
  static LinearTruth standard();
};

struct SimDesign {
  int levels = 6;
  long n = 900;
  ParamVector truth;
  Generator generator = Generator::Idbr;
  LinearTruth linear = LinearTruth::standard();
  int replications = 50;
  std::uint64_t seed = 20150101;
  double prediction_level = 0.95;

  /// Scale 1..K with the first level inflated.
  ScaleSpec scale() const;
  /// Intercept plus V1..V4, D1..D3 in every submodel.
  ModelSpec model() const;
};

/// Column names of the simulated covariates: V1..V4 then D1..D3.
const std::vector<std::string>& simulated_columns();

/// Coefficients of the 6-level setting (inflation intercept -4.5).
ParamVector table1_truth();
/// Coefficients of the 11-level setting (inflation intercept -5).
ParamVector table2_truth();
SimDesign table1_design();
SimDesign table2_design();

/// V1..V4 ~ N(3, 1), D1..D3 ~ Bernoulli(0.5).
Eigen::MatrixXd gen_covariates(long n, RngState& rng);

/// Responses drawn by the two-step mechanism at the design's truth.
Dataset gen_idbr(const SimDesign& design, RngState& rng);
/// Also reports which responses came from the inflation step.
Dataset gen_idbr(const SimDesign& design, RngState& rng, std::vector<bool>* inflation_hits);

/// x'b + N(0, sd^2), clamped to [h, 1], rounded to the nearest level (ties down).
Dataset gen_rounded_linear(const SimDesign& design, RngState& rng);

/// Nearest grid position to y in [h, 1], ties toward the lower level.
int round_to_nearest_level(double y, int levels);

struct ParameterMetrics {
  std::string name;
  double truth = 0.0;
  double bias = 0.0;
  double emp_sd = 0.0;  // population (1/R) convention, so rmse^2 = bias^2 + emp_sd^2
  double rmse = 0.0;
  double hpd_coverage = 0.0;
  double hpd_length = 0.0;
};

struct PredictionMetrics {
  long predictions = 0;
  double percent_correct = 0.0;
  double region_coverage = 0.0;
  double mean_length = 0.0;  // reduced scale, contiguous span at most 1 - h
  double mean_scaled_length = 0.0;  // mean_length / (1 - h), at most 1
  double percent_disjoint = 0.0;
};

struct ReplicationRecord {
  int index = 0;
  bool fitted = false;
  std::string error;
  Eigen::VectorXd medians;
  Eigen::MatrixXd hpd;
  Eigen::VectorXd gelman;
  Eigen::VectorXd acceptance;
  int predicted_from = -1;  // replication whose fit produced the predictions
  PredictionMetrics prediction;
};

struct MetricsReport {
  int levels = 0;
  long n = 0;
  std::string generator;
  int replications = 0;
  int failed = 0;
  std::uint64_t seed = 0;
  std::uint64_t sampler_seed = 0;
  std::vector<ParameterMetrics> parameters;
  PredictionMetrics prediction;
  std::vector<ReplicationRecord> records;
};

/// Per-parameter bias, SD, RMSE, HPD coverage and length across replications.
std::vector<ParameterMetrics> parameter_metrics(const std::vector<std::string>& names, const Eigen::VectorXd& truth,
                                                const std::vector<Eigen::VectorXd>& medians,
                                                const std::vector<Eigen::MatrixXd>& hpds);

/**
 * Generate, fit and predict `replications` datasets. Dataset s + 1 is
 * predicted with the posterior of dataset s (cyclically, so every
 * replication is predicted once when at least two fits succeed).
 */
MetricsReport run_study(const SimDesign& design, const SamplerConfig& cfg);

/// Prediction metrics for `target` using the posterior draws of another fit.
PredictionMetrics predict_dataset(const Eigen::MatrixXd& posterior_draws, const ModelSpec& spec,
                                  const Dataset& target, RngState& rng, double level);

}  // namespace idbr
