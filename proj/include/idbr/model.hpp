#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "idbr/numeric.hpp"
#include "idbr/scale.hpp"

namespace idbr {

/// Bounds of the uniform prior on every regression coefficient.
inline constexpr double kPriorBound = 10.0;

/// Raised when the model specification is inconsistent with its data or scale.
class SpecificationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <typename Scalar>
Scalar inv_logit(Scalar v) {
  using std::exp;
  if (v >= Scalar(0)) return Scalar(1) / (Scalar(1) + exp(-v));
  const Scalar e = exp(v);
  return e / (Scalar(1) + e);
}

template <typename Scalar>
Scalar logit(Scalar u) {
  using std::log;
  const Scalar lo(1e-12);
  const Scalar hi = Scalar(1) - lo;
  if (u < lo) u = lo;
  if (u > hi) u = hi;
  return log(u / (Scalar(1) - u));
}

/// log(1 + exp(v)) without overflow.
template <typename Scalar>
Scalar softplus(Scalar v) {
  using std::exp;
  using std::log1p;
  return v > Scalar(35) ? v + log1p(exp(-v)) : log1p(exp(v));
}

/// Beta shapes for mean mu and dispersion phi, Var = mu (1 - mu) phi.
std::pair<double, double> mu_phi_to_pq(double mu, double phi);

/// Simas precision p + q = 1/phi - 1.
double dispersion_to_precision(double phi);

/// Columns and intercept flag of one submodel.
struct Submodel {
  std::vector<std::string> columns;
  bool intercept = true;

  int size() const { return static_cast<int>(columns.size()) + (intercept ? 1 : 0); }
};

/**
 * Column assignment for the inflation (W, gamma), location (X, beta) and
 * dispersion (Z, theta) submodels. The inflation submodel is active exactly
 * when the scale declares an inflated level; without it the model is a plain
 * discrete beta regression.
 */
struct ModelSpec {
  ScaleSpec scale;
  Submodel inflation;
  Submodel location;
  Submodel dispersion;

  bool inflated() const { return scale.inflated_k().has_value(); }
  int n_gamma() const { return inflated() ? inflation.size() : 0; }
  int n_beta() const { return location.size(); }
  int n_theta() const { return dispersion.size(); }
  int dim() const { return n_gamma() + n_beta() + n_theta(); }

  /// Throws SpecificationError on empty submodels or inflation columns without an inflated level.
  void validate() const;
  /// "inflation:(Intercept)", "location:V1", ... in ParamVector order.
  std::vector<std::string> parameter_names() const;
};

/// Concatenated (gamma, beta, theta) coefficient vector.
class ParamVector {
 public:
  ParamVector() = default;
  ParamVector(int n_gamma, int n_beta, int n_theta);
  ParamVector(const ModelSpec& spec) : ParamVector(spec.n_gamma(), spec.n_beta(), spec.n_theta()) {}
  ParamVector(const ModelSpec& spec, Eigen::VectorXd values);

  int n_gamma() const { return n_gamma_; }
  int n_beta() const { return n_beta_; }
  int n_theta() const { return n_theta_; }
  int dim() const { return static_cast<int>(values_.size()); }

  int gamma_offset() const { return 0; }
  int beta_offset() const { return n_gamma_; }
  int theta_offset() const { return n_gamma_ + n_beta_; }

  auto gamma() { return values_.segment(0, n_gamma_); }
  auto gamma() const { return values_.segment(0, n_gamma_); }
  auto beta() { return values_.segment(n_gamma_, n_beta_); }
  auto beta() const { return values_.segment(n_gamma_, n_beta_); }
  auto theta() { return values_.segment(n_gamma_ + n_beta_, n_theta_); }
  auto theta() const { return values_.segment(n_gamma_ + n_beta_, n_theta_); }

  double& operator[](int j) { return values_[j]; }
  double operator[](int j) const { return values_[j]; }
  const Eigen::VectorXd& values() const { return values_; }
  Eigen::VectorXd& values() { return values_; }

  bool in_prior_box() const { return (values_.array().abs() <= kPriorBound).all(); }
  void clip_to_prior_box() { values_ = values_.cwiseMax(-kPriorBound).cwiseMin(kPriorBound); }

 private:
  int n_gamma_ = 0;
  int n_beta_ = 0;
  int n_theta_ = 0;
  Eigen::VectorXd values_;
};

/// Responses on the reduced grid and a named covariate matrix.
struct Dataset {
  Eigen::VectorXd y;
  Eigen::MatrixXd covariates;
  std::vector<std::string> columns;

  long n() const { return static_cast<long>(y.size()); }
  /// Index of a named column; throws SpecificationError when missing.
  int column(const std::string& name) const;
};

/**
 * Design matrices (with leading intercept columns where enabled) and grid
 * positions of the responses, prebuilt for repeated likelihood evaluation.
 */
struct Design {
  Eigen::MatrixXd w;
  Eigen::MatrixXd x;
  Eigen::MatrixXd z;
  Eigen::VectorXi k;
  int levels = 0;
  int inflated_k = 0;  // 0 when the model has no inflation
  std::vector<numeric::Endpoint> grid;  // cell boundaries 0, h, ..., 1

  long n() const { return static_cast<long>(k.size()); }
};

Design build_design(const Dataset& data, const ModelSpec& spec);

/// Design rows for covariates that are not attached to a response.
Design build_design(const Eigen::MatrixXd& covariates, const std::vector<std::string>& columns,
                    const ModelSpec& spec);

/**
 * Checks W, X and Z for full column rank via the condition number of
 * their normal-equations matrices. Throws SpecificationError naming the
 * submodel and its most collinear columns.
 */
void check_full_rank(const Design& design, const ModelSpec& spec, double max_condition = 1e8);

struct Predictors {
  double pi;
  double mu;
  double phi;
  double p;
  double q;
};

/// Inflation probability, location, dispersion and beta shapes of design row i.
Predictors linear_predictors(const ParamVector& params, const Design& design, long i);

/// P(Y = kh) for k = 1..K under a discrete beta law.
Eigen::VectorXd dbr_pmf(double mu, double phi, const ScaleSpec& s);
Eigen::VectorXd dbr_pmf_pq(double p, double q, int levels);

/// Mixture of dbr_pmf and a point mass pi at the inflated level.
Eigen::VectorXd idbr_pmf(double pi, double mu, double phi, const ScaleSpec& s);

double log_likelihood(const ParamVector& params, const Design& design);
double log_likelihood(const ParamVector& params, const Dataset& data, const ModelSpec& spec);

/// Uniform prior on [-10, 10]^dim: log_likelihood inside the box, -inf outside.
double log_posterior(const ParamVector& params, const Design& design);
double log_posterior(const ParamVector& params, const Dataset& data, const ModelSpec& spec);

/**
 * Per-observation likelihood cache for coordinate-wise updates.
 *
 * Holds the three linear predictors and each observation's beta cell
 * probability, so a change to one gamma coefficient touches only the
 * mixture weights and a change to one beta or theta coefficient
 * re-evaluates cells only on rows where that column is nonzero.
 */
class IncrementalLikelihood {
 public:
  IncrementalLikelihood(const Design& design, const ParamVector& params);

  const ParamVector& params() const { return params_; }
  double log_likelihood() const { return total_; }

  /// Log-likelihood with coordinate j moved to `value`; staged until accept() or discarded.
  double propose(int j, double value);
  void accept();

 private:
  double contribution(long i, double eta_w, double cell) const;
  double cell(long i, double eta_x, double eta_z) const;

  const Design* design_;
  ParamVector params_;
  Eigen::VectorXd eta_w_;
  Eigen::VectorXd eta_x_;
  Eigen::VectorXd eta_z_;
  Eigen::VectorXd cell_;
  Eigen::VectorXd log_contrib_;
  double total_ = 0.0;

  // Staged proposal.
  int staged_j_ = -1;
  double staged_value_ = 0.0;
  double staged_total_ = 0.0;
  std::vector<long> staged_rows_;
  Eigen::VectorXd staged_eta_;
  Eigen::VectorXd staged_cell_;
  Eigen::VectorXd staged_log_;
};

}  // namespace idbr
