#include "idbr/model.hpp"

#include <algorithm>
#include <sstream>

namespace idbr {

namespace {

constexpr double kShapeLogBound = 700.0;

double clamp_exp(double v) { return std::exp(std::clamp(v, -kShapeLogBound, kShapeLogBound)); }

// Beta shapes from the location and dispersion linear predictors:
// p = exp(-z'theta) / (1 + exp(-x'beta)), q = exp(-z'theta) / (1 + exp(x'beta)).
std::pair<double, double> shapes(double eta_x, double eta_z) {
  // softplus(v) - softplus(-v) = v
  const double log_p = -eta_z - softplus(-eta_x);
  return {clamp_exp(log_p), clamp_exp(log_p - eta_x)};
}

double cell_probability(int k, const Design& d, double p, double q) {
  const std::size_t kk = static_cast<std::size_t>(k);
  return numeric::beta_interval(d.grid[kk - 1], d.grid[kk], p, q, numeric::log_beta(p, q));
}

std::vector<numeric::Endpoint> grid_endpoints(int levels) {
  std::vector<numeric::Endpoint> grid;
  grid.push_back({0.0, -INFINITY, 0.0});
  for (int k = 1; k < levels; ++k) grid.push_back(numeric::Endpoint::at(static_cast<double>(k) / levels));
  grid.push_back({1.0, 0.0, -INFINITY});
  return grid;
}

Eigen::MatrixXd submodel_matrix(const Eigen::MatrixXd& covariates, const std::vector<std::string>& names,
                                const Submodel& sub) {
  const long n = covariates.rows();
  Eigen::MatrixXd m(n, sub.size());
  int col = 0;
  if (sub.intercept) m.col(col++).setOnes();
  for (const auto& c : sub.columns) {
    auto it = std::find(names.begin(), names.end(), c);
    if (it == names.end()) throw SpecificationError("unknown covariate column '" + c + "'");
    m.col(col++) = covariates.col(std::distance(names.begin(), it));
  }
  return m;
}

std::vector<std::string> submodel_names(const Submodel& sub) {
  std::vector<std::string> out;
  if (sub.intercept) out.emplace_back("(Intercept)");
  out.insert(out.end(), sub.columns.begin(), sub.columns.end());
  return out;
}

void rank_check(const Eigen::MatrixXd& m, const std::vector<std::string>& names, const char* which,
                double max_condition) {
  if (m.cols() == 0) return;
  if (m.rows() < m.cols()) {
    throw SpecificationError(std::string(which) + " submodel has more columns than observations");
  }
  const Eigen::MatrixXd gram = m.transpose() * m;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  const auto& vals = eig.eigenvalues();
  const double lo = vals.minCoeff();
  const double hi = vals.maxCoeff();
  if (hi > 0.0 && lo > 0.0 && hi / lo <= max_condition) return;
  // The null-space direction identifies the collinear columns.
  Eigen::Index lo_idx;
  vals.minCoeff(&lo_idx);
  const Eigen::VectorXd dir = eig.eigenvectors().col(lo_idx).cwiseAbs();
  std::ostringstream os;
  os << which << " design is rank deficient (condition number " << (lo > 0.0 ? hi / lo : INFINITY)
     << "); collinear columns:";
  for (Eigen::Index j = 0; j < dir.size(); ++j) {
    if (dir[j] > 0.1) os << ' ' << names[static_cast<std::size_t>(j)];
  }
  throw SpecificationError(os.str());
}

}  // namespace

std::pair<double, double> mu_phi_to_pq(double mu, double phi) {
  if (!(mu > 0.0 && mu < 1.0) || !(phi > 0.0 && phi < 1.0)) {
    throw std::domain_error("mu_phi_to_pq: mu and phi must lie in (0, 1)");
  }
  const double precision = 1.0 / phi - 1.0;
  return {mu * precision, (1.0 - mu) * precision};
}

double dispersion_to_precision(double phi) {
  if (!(phi > 0.0 && phi < 1.0)) throw std::domain_error("dispersion_to_precision: phi must lie in (0, 1)");
  return 1.0 / phi - 1.0;
}

void ModelSpec::validate() const {
  if (location.size() == 0) throw SpecificationError("location submodel is empty");
  if (dispersion.size() == 0) throw SpecificationError("dispersion submodel is empty");
  if (!inflated() && !inflation.columns.empty()) {
    throw SpecificationError("inflation columns given but the scale has no inflated level");
  }
  if (inflated() && inflation.size() == 0) throw SpecificationError("inflation submodel is empty");
}

std::vector<std::string> ModelSpec::parameter_names() const {
  std::vector<std::string> out;
  auto append = [&out](const char* prefix, const Submodel& sub) {
    for (const auto& n : submodel_names(sub)) out.push_back(std::string(prefix) + ":" + n);
  };
  if (inflated()) append("inflation", inflation);
  append("location", location);
  append("dispersion", dispersion);
  return out;
}

ParamVector::ParamVector(int n_gamma, int n_beta, int n_theta)
    : n_gamma_(n_gamma), n_beta_(n_beta), n_theta_(n_theta), values_(Eigen::VectorXd::Zero(n_gamma + n_beta + n_theta)) {}

ParamVector::ParamVector(const ModelSpec& spec, Eigen::VectorXd values) : ParamVector(spec) {
  if (values.size() != values_.size()) {
    throw SpecificationError("parameter vector has " + std::to_string(values.size()) + " entries, model needs " +
                             std::to_string(values_.size()));
  }
  values_ = std::move(values);
}

int Dataset::column(const std::string& name) const {
  auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw SpecificationError("unknown covariate column '" + name + "'");
  return static_cast<int>(std::distance(columns.begin(), it));
}

Design build_design(const Eigen::MatrixXd& covariates, const std::vector<std::string>& columns,
                    const ModelSpec& spec) {
  spec.validate();
  Design d;
  if (spec.inflated()) d.w = submodel_matrix(covariates, columns, spec.inflation);
  else d.w.resize(covariates.rows(), 0);
  d.x = submodel_matrix(covariates, columns, spec.location);
  d.z = submodel_matrix(covariates, columns, spec.dispersion);
  d.k = Eigen::VectorXi::Ones(covariates.rows());
  d.levels = spec.scale.levels();
  d.inflated_k = spec.scale.inflated_k().value_or(0);
  d.grid = grid_endpoints(d.levels);
  return d;
}

Design build_design(const Dataset& data, const ModelSpec& spec) {
  if (data.covariates.rows() != data.n()) throw SpecificationError("covariate rows do not match response count");
  Design d = build_design(data.covariates, data.columns, spec);
  for (long i = 0; i < data.n(); ++i) d.k[i] = grid_index(data.y[i], spec.scale);
  return d;
}

void check_full_rank(const Design& design, const ModelSpec& spec, double max_condition) {
  if (spec.inflated()) rank_check(design.w, submodel_names(spec.inflation), "inflation", max_condition);
  rank_check(design.x, submodel_names(spec.location), "location", max_condition);
  rank_check(design.z, submodel_names(spec.dispersion), "dispersion", max_condition);
}

Predictors linear_predictors(const ParamVector& params, const Design& design, long i) {
  const double eta_x = design.x.row(i).dot(params.beta());
  const double eta_z = design.z.row(i).dot(params.theta());
  Predictors out;
  out.pi = design.inflated_k > 0 ? inv_logit(design.w.row(i).dot(params.gamma())) : 0.0;
  out.mu = inv_logit(eta_x);
  out.phi = inv_logit(eta_z);
  std::tie(out.p, out.q) = shapes(eta_x, eta_z);
  return out;
}

Eigen::VectorXd dbr_pmf_pq(double p, double q, int levels) {
  Eigen::VectorXd pmf(levels);
  const double lb = numeric::log_beta(p, q);
  for (int k = 1; k <= levels; ++k) {
    const double lo = static_cast<double>(k - 1) / levels;
    const double hi = k == levels ? 1.0 : static_cast<double>(k) / levels;
    pmf[k - 1] = numeric::beta_interval(lo, hi, p, q, lb);
  }
  return pmf;
}

Eigen::VectorXd dbr_pmf(double mu, double phi, const ScaleSpec& s) {
  const auto [p, q] = mu_phi_to_pq(mu, phi);
  return dbr_pmf_pq(p, q, s.levels());
}

Eigen::VectorXd idbr_pmf(double pi, double mu, double phi, const ScaleSpec& s) {
  if (!(pi >= 0.0 && pi <= 1.0)) throw std::domain_error("idbr_pmf: pi must lie in [0, 1]");
  Eigen::VectorXd pmf = dbr_pmf(mu, phi, s);
  if (pi == 0.0) return pmf;
  if (!s.inflated_k()) throw SpecificationError("inflation probability given for a scale without inflated level");
  pmf *= 1.0 - pi;
  pmf[*s.inflated_k() - 1] += pi;
  return pmf;
}

double log_likelihood(const ParamVector& params, const Design& design) {
  const Eigen::VectorXd eta_x = design.x * params.beta();
  const Eigen::VectorXd eta_z = design.z * params.theta();
  Eigen::VectorXd eta_w;
  if (design.inflated_k > 0) eta_w = design.w * params.gamma();
  double total = 0.0;
  for (long i = 0; i < design.n(); ++i) {
    const auto [p, q] = shapes(eta_x[i], eta_z[i]);
    const int k = design.k[i];
    const double cell = cell_probability(k, design, p, q);
    if (design.inflated_k == 0) {
      total += numeric::floored_log(cell);
    } else if (k == design.inflated_k) {
      total += numeric::floored_log(inv_logit(eta_w[i]) + inv_logit(-eta_w[i]) * cell);
    } else {
      total += -softplus(eta_w[i]) + numeric::floored_log(cell);
    }
  }
  return total;
}

double log_likelihood(const ParamVector& params, const Dataset& data, const ModelSpec& spec) {
  return log_likelihood(params, build_design(data, spec));
}

double log_posterior(const ParamVector& params, const Design& design) {
  if (!params.in_prior_box()) return -std::numeric_limits<double>::infinity();
  return log_likelihood(params, design);
}

double log_posterior(const ParamVector& params, const Dataset& data, const ModelSpec& spec) {
  if (!params.in_prior_box()) return -std::numeric_limits<double>::infinity();
  return log_likelihood(params, data, spec);
}

// IncrementalLikelihood

IncrementalLikelihood::IncrementalLikelihood(const Design& design, const ParamVector& params)
    : design_(&design), params_(params) {
  const long n = design.n();
  eta_x_ = design.x * params.beta();
  eta_z_ = design.z * params.theta();
  eta_w_ = design.inflated_k > 0 ? Eigen::VectorXd(design.w * params.gamma()) : Eigen::VectorXd::Zero(n);
  cell_.resize(n);
  log_contrib_.resize(n);
  for (long i = 0; i < n; ++i) {
    cell_[i] = cell(i, eta_x_[i], eta_z_[i]);
    log_contrib_[i] = contribution(i, eta_w_[i], cell_[i]);
  }
  total_ = log_contrib_.sum();
  staged_rows_.reserve(static_cast<std::size_t>(n));
  staged_eta_.resize(n);
  staged_cell_.resize(n);
  staged_log_.resize(n);
}

double IncrementalLikelihood::cell(long i, double eta_x, double eta_z) const {
  const auto [p, q] = shapes(eta_x, eta_z);
  return cell_probability(design_->k[i], *design_, p, q);
}

double IncrementalLikelihood::contribution(long i, double eta_w, double cell) const {
  if (design_->inflated_k == 0) return numeric::floored_log(cell);
  if (design_->k[i] == design_->inflated_k) return numeric::floored_log(inv_logit(eta_w) + inv_logit(-eta_w) * cell);
  return -softplus(eta_w) + numeric::floored_log(cell);
}

double IncrementalLikelihood::propose(int j, double value) {
  staged_j_ = j;
  staged_value_ = value;
  staged_rows_.clear();
  const double delta = value - params_[j];
  double total = total_;
  const Design& d = *design_;
  const long n = d.n();
  if (j < params_.beta_offset()) {
    const auto col = d.w.col(j);
    for (long i = 0; i < n; ++i) {
      if (col[i] == 0.0) continue;
      staged_rows_.push_back(i);
      staged_eta_[i] = eta_w_[i] + delta * col[i];
      staged_log_[i] = contribution(i, staged_eta_[i], cell_[i]);
      total += staged_log_[i] - log_contrib_[i];
    }
  } else if (j < params_.theta_offset()) {
    const auto col = d.x.col(j - params_.beta_offset());
    for (long i = 0; i < n; ++i) {
      if (col[i] == 0.0) continue;
      staged_rows_.push_back(i);
      staged_eta_[i] = eta_x_[i] + delta * col[i];
      staged_cell_[i] = cell(i, staged_eta_[i], eta_z_[i]);
      staged_log_[i] = contribution(i, eta_w_[i], staged_cell_[i]);
      total += staged_log_[i] - log_contrib_[i];
    }
  } else {
    const auto col = d.z.col(j - params_.theta_offset());
    for (long i = 0; i < n; ++i) {
      if (col[i] == 0.0) continue;
      staged_rows_.push_back(i);
      staged_eta_[i] = eta_z_[i] + delta * col[i];
      staged_cell_[i] = cell(i, eta_x_[i], staged_eta_[i]);
      staged_log_[i] = contribution(i, eta_w_[i], staged_cell_[i]);
      total += staged_log_[i] - log_contrib_[i];
    }
  }
  staged_total_ = total;
  return total;
}

void IncrementalLikelihood::accept() {
  if (staged_j_ < 0) return;
  const int j = staged_j_;
  Eigen::VectorXd* eta = j < params_.beta_offset() ? &eta_w_ : j < params_.theta_offset() ? &eta_x_ : &eta_z_;
  const bool touches_cells = j >= params_.beta_offset();
  for (long i : staged_rows_) {
    (*eta)[i] = staged_eta_[i];
    if (touches_cells) cell_[i] = staged_cell_[i];
    log_contrib_[i] = staged_log_[i];
  }
  params_[j] = staged_value_;
  // Recompute the sum from scratch so rounding error does not accumulate over long chains.
  total_ = log_contrib_.sum();
  staged_j_ = -1;
}

}  // namespace idbr
