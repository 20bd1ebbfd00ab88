#include "idbr/simulate.hpp"

#include <cmath>
#include <stdexcept>

namespace idbr {

namespace {

constexpr int kContinuous = 4;
constexpr int kDummies = 3;

Eigen::VectorXd stack(std::initializer_list<double> gamma, std::initializer_list<double> beta,
                      std::initializer_list<double> theta) {
  Eigen::VectorXd v(gamma.size() + beta.size() + theta.size());
  Eigen::Index i = 0;
  for (double x : gamma) v[i++] = x;
  for (double x : beta) v[i++] = x;
  for (double x : theta) v[i++] = x;
  return v;
}

ParamVector table_truth(double inflation_intercept) {
  const SimDesign shape;
  return ParamVector(shape.model(), stack({inflation_intercept, 1.0, 0.0, 0.3, -0.5, -0.5, 0.0, 0.0},
                                          {-1.0, -0.2, 0.9, 0.0, -0.4, 0.0, 0.7, 0.0},
                                          {-3.0, 0.0, -0.2, 0.4, -0.2, 0.0, 0.0, 0.5}));
}

const char* generator_name(Generator g) { return g == Generator::Idbr ? "IDBR" : "ROUNDED_LINEAR"; }

void accumulate(PredictionMetrics& total, const PredictionMetrics& part) {
  const double n = static_cast<double>(total.predictions);
  const double m = static_cast<double>(part.predictions);
  if (n + m == 0.0) return;
  auto mix = [&](double a, double b) { return (a * n + b * m) / (n + m); };
  total.percent_correct = mix(total.percent_correct, part.percent_correct);
  total.region_coverage = mix(total.region_coverage, part.region_coverage);
  total.mean_length = mix(total.mean_length, part.mean_length);
  total.mean_scaled_length = mix(total.mean_scaled_length, part.mean_scaled_length);
  total.percent_disjoint = mix(total.percent_disjoint, part.percent_disjoint);
  total.predictions += part.predictions;
}

}  // namespace

LinearTruth LinearTruth::standard() {
  // Slopes of 0.05 on each covariate give latent variance 0.0119; noise makes up the rest of 0.15^2.
  LinearTruth t;
  t.coefficients.resize(1 + kContinuous + kDummies);
  t.coefficients.setConstant(0.05);
  t.coefficients[0] = 0.5 - 0.05 * 3.0 * kContinuous - 0.05 * 0.5 * kDummies;
  t.noise_sd = std::sqrt(0.15 * 0.15 - 0.05 * 0.05 * kContinuous - 0.05 * 0.05 * 0.25 * kDummies);
  return t;
}

ScaleSpec SimDesign::scale() const { return ScaleSpec(1.0, static_cast<double>(levels), 1.0, 1.0); }

ModelSpec SimDesign::model() const {
  Submodel all{simulated_columns(), true};
  return ModelSpec{scale(), all, all, all};
}

const std::vector<std::string>& simulated_columns() {
  static const std::vector<std::string> names{"V1", "V2", "V3", "V4", "D1", "D2", "D3"};
  return names;
}

ParamVector table1_truth() { return table_truth(-4.5); }
ParamVector table2_truth() { return table_truth(-5.0); }

SimDesign table1_design() {
  SimDesign d;
  d.levels = 6;
  d.truth = table1_truth();
  return d;
}

SimDesign table2_design() {
  SimDesign d;
  d.levels = 11;
  d.truth = table2_truth();
  return d;
}

Eigen::MatrixXd gen_covariates(long n, RngState& rng) {
  if (n < 1) throw std::invalid_argument("gen_covariates: n must be positive");
  Eigen::MatrixXd m(n, kContinuous + kDummies);
  for (long i = 0; i < n; ++i) {
    for (int j = 0; j < kContinuous; ++j) m(i, j) = draw_normal(rng, 3.0, 1.0);
    for (int j = 0; j < kDummies; ++j) m(i, kContinuous + j) = draw_bernoulli(rng, 0.5);
  }
  return m;
}

Dataset gen_idbr(const SimDesign& design, RngState& rng, std::vector<bool>* inflation_hits) {
  Dataset data;
  data.columns = simulated_columns();
  data.covariates = gen_covariates(design.n, rng);
  const ModelSpec spec = design.model();
  const Design rows = build_design(data.covariates, data.columns, spec);
  data.y.resize(design.n);
  if (inflation_hits) inflation_hits->assign(static_cast<std::size_t>(design.n), false);
  for (long i = 0; i < design.n; ++i) {
    const PredictiveDraw d = predictive_draw(design.truth, rows, i, rng);
    data.y[i] = spec.scale.point(d.k);
    if (inflation_hits) (*inflation_hits)[static_cast<std::size_t>(i)] = d.inflation_hit;
  }
  return data;
}

Dataset gen_idbr(const SimDesign& design, RngState& rng) { return gen_idbr(design, rng, nullptr); }

int round_to_nearest_level(double y, int levels) {
  const double h = 1.0 / levels;
  y = std::clamp(y, h, 1.0);
  const double pos = y * levels;
  const double below = std::floor(pos);
  // Ties (and values within rounding noise of the midpoint) go to the lower level.
  int k = pos - below > 0.5 + 1e-12 ? static_cast<int>(below) + 1 : static_cast<int>(below);
  return std::clamp(k, 1, levels);
}

Dataset gen_rounded_linear(const SimDesign& design, RngState& rng) {
  const auto& coef = design.linear.coefficients;
  if (coef.size() != 1 + kContinuous + kDummies) {
    throw std::invalid_argument("rounded-linear generator needs 8 coefficients");
  }
  Dataset data;
  data.columns = simulated_columns();
  data.covariates = gen_covariates(design.n, rng);
  data.y.resize(design.n);
  const ScaleSpec scale = design.scale();
  for (long i = 0; i < design.n; ++i) {
    const double latent = coef[0] + data.covariates.row(i).dot(coef.tail(kContinuous + kDummies)) +
                          draw_normal(rng, 0.0, design.linear.noise_sd);
    data.y[i] = scale.point(round_to_nearest_level(latent, design.levels));
  }
  return data;
}

std::vector<ParameterMetrics> parameter_metrics(const std::vector<std::string>& names, const Eigen::VectorXd& truth,
                                                const std::vector<Eigen::VectorXd>& medians,
                                                const std::vector<Eigen::MatrixXd>& hpds) {
  std::vector<ParameterMetrics> out;
  const double r = static_cast<double>(medians.size());
  for (std::size_t j = 0; j < names.size(); ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    ParameterMetrics m;
    m.name = names[j];
    m.truth = truth[jj];
    if (medians.empty()) {
      out.push_back(m);
      continue;
    }
    double sum = 0.0;
    double sq = 0.0;
    double covered = 0.0;
    double length = 0.0;
    for (std::size_t s = 0; s < medians.size(); ++s) {
      const double err = medians[s][jj] - m.truth;
      sum += err;
      sq += err * err;
      const double lo = hpds[s](jj, 0);
      const double hi = hpds[s](jj, 1);
      covered += (m.truth >= lo && m.truth <= hi) ? 1.0 : 0.0;
      length += hi - lo;
    }
    m.bias = sum / r;
    m.rmse = std::sqrt(sq / r);
    m.emp_sd = std::sqrt(std::max(0.0, sq / r - m.bias * m.bias));
    m.hpd_coverage = covered / r;
    m.hpd_length = length / r;
    out.push_back(m);
  }
  return out;
}

PredictionMetrics predict_dataset(const Eigen::MatrixXd& posterior_draws, const ModelSpec& spec,
                                  const Dataset& target, RngState& rng, double level) {
  const Design rows = build_design(target, spec);
  PredictionMetrics m;
  const int levels = rows.levels;
  const double h = 1.0 / levels;
  double correct = 0.0;
  double covered = 0.0;
  double length = 0.0;
  double disjoint = 0.0;
  const auto dists = predictive_distributions(posterior_draws, spec, rows, rng, level);
  for (long i = 0; i < rows.n(); ++i) {
    const PredictiveDistribution& dist = dists[static_cast<std::size_t>(i)];
    const int observed = rows.k[i];
    correct += dist.mode == observed;
    covered += dist.region.contains(observed);
    length += region_length(dist.region, levels);
    disjoint += dist.region.disjoint;
  }
  const double n = static_cast<double>(rows.n());
  m.predictions = rows.n();
  m.percent_correct = 100.0 * correct / n;
  m.region_coverage = 100.0 * covered / n;
  m.mean_length = length / n;
  m.mean_scaled_length = m.mean_length / (1.0 - h);
  m.percent_disjoint = 100.0 * disjoint / n;
  return m;
}

MetricsReport run_study(const SimDesign& design, const SamplerConfig& cfg) {
  if (design.replications < 2) throw std::invalid_argument("run_study needs at least two replications");
  const ModelSpec spec = design.model();
  const auto names = spec.parameter_names();
  if (design.truth.dim() != spec.dim()) throw SpecificationError("truth does not match the simulated design");

  MetricsReport report;
  report.levels = design.levels;
  report.n = design.n;
  report.generator = generator_name(design.generator);
  report.replications = design.replications;
  report.seed = design.seed;
  report.sampler_seed = cfg.seed;

  std::vector<Dataset> datasets;
  std::vector<Eigen::MatrixXd> pooled(static_cast<std::size_t>(design.replications));
  for (int s = 0; s < design.replications; ++s) {
    RngState data_rng(design.seed, static_cast<std::uint64_t>(s));
    datasets.push_back(design.generator == Generator::Idbr ? gen_idbr(design, data_rng)
                                                           : gen_rounded_linear(design, data_rng));
    ReplicationRecord rec;
    rec.index = s;
    try {
      SamplerConfig rep_cfg = cfg;
      rep_cfg.seed = cfg.seed + 7919ULL * static_cast<std::uint64_t>(s);
      const PosteriorSample post = fit(datasets.back(), spec, rep_cfg);
      rec.fitted = true;
      rec.medians = post.medians;
      rec.hpd = post.hpd;
      rec.gelman = post.gelman;
      rec.acceptance = post.acceptance;
      pooled[static_cast<std::size_t>(s)] = post.pooled();
    } catch (const std::exception& e) {
      rec.error = e.what();
      ++report.failed;
    }
    report.records.push_back(std::move(rec));
  }

  std::vector<Eigen::VectorXd> medians;
  std::vector<Eigen::MatrixXd> hpds;
  for (const auto& rec : report.records) {
    if (!rec.fitted) continue;
    medians.push_back(rec.medians);
    hpds.push_back(rec.hpd);
  }
  report.parameters = parameter_metrics(names, design.truth.values(), medians, hpds);

  // Rotate by one: the most recent successful fit before s (cyclically) predicts dataset s.
  const int reps = design.replications;
  if (static_cast<int>(medians.size()) >= 2) {
    for (int s = 0; s < reps; ++s) {
      int source = -1;
      for (int back = 1; back < reps; ++back) {
        const int cand = (s - back + reps) % reps;
        if (report.records[static_cast<std::size_t>(cand)].fitted) {
          source = cand;
          break;
        }
      }
      if (source < 0) continue;
      RngState pred_rng(design.seed, 1'000'000ULL + static_cast<std::uint64_t>(s));
      auto& rec = report.records[static_cast<std::size_t>(s)];
      rec.predicted_from = source;
      rec.prediction = predict_dataset(pooled[static_cast<std::size_t>(source)], spec,
                                       datasets[static_cast<std::size_t>(s)], pred_rng, design.prediction_level);
      accumulate(report.prediction, rec.prediction);
    }
  }
  return report;
}

}  // namespace idbr
