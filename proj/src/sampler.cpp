#include "idbr/sampler.hpp"

#include <algorithm>
#include <future>
#include <limits>
#include <numeric>
#include <sstream>

namespace idbr {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kInitClamp = 1e-6;
constexpr double kConvergenceThreshold = 1.1;

double clamped_logit(double u) { return std::clamp(logit(std::clamp(u, kInitClamp, 1.0 - kInitClamp)), -kPriorBound, kPriorBound); }

}  // namespace

void SamplerConfig::validate() const {
  if (burn_in < 1) throw SpecificationError("burn_in must be at least 1");
  if (keep < 1) throw SpecificationError("keep must be at least 1");
  if (n_chains < 2) throw SpecificationError("n_chains must be at least 2");
  if (adapt_window < 1) throw SpecificationError("adapt_window must be at least 1");
  if (!(target_accept > 0.0 && target_accept < 1.0)) throw SpecificationError("target_accept must lie in (0, 1)");
  if (!(hpd_level > 0.0 && hpd_level < 1.0)) throw SpecificationError("hpd level must lie in (0, 1)");
  if (!(initial_scale > 0.0)) throw SpecificationError("initial proposal scale must be positive");
}

long PosteriorSample::pooled_size() const {
  long n = 0;
  for (const auto& d : draws) n += d.rows();
  return n;
}

Eigen::MatrixXd PosteriorSample::pooled() const {
  Eigen::MatrixXd out(pooled_size(), dim());
  long row = 0;
  for (const auto& d : draws) {
    out.middleRows(row, d.rows()) = d;
    row += d.rows();
  }
  return out;
}

namespace {

bool leading_ones(const Eigen::MatrixXd& m) { return m.cols() > 0 && (m.col(0).array() == 1.0).all(); }

// Centers the non-intercept columns of one block and records the coordinate map.
void center_block(Eigen::MatrixXd& m, int offset, Eigen::VectorXi& intercept_of, Eigen::VectorXd& shift) {
  if (!leading_ones(m) || m.rows() == 0) return;
  for (Eigen::Index c = 1; c < m.cols(); ++c) {
    const double mean = m.col(c).mean();
    m.col(c).array() -= mean;
    intercept_of[offset + c] = offset;
    shift[offset + c] = mean;
  }
}

ParamVector centered_params(const ParamVector& init, const Eigen::VectorXi& intercept_of, const Eigen::VectorXd& shift) {
  ParamVector out = init;
  for (int j = 0; j < init.dim(); ++j) {
    if (intercept_of[j] >= 0) out[intercept_of[j]] += shift[j] * init[j];
  }
  return out;
}

}  // namespace

PosteriorTarget::PosteriorTarget(const Design& design, const ParamVector& init)
    : intercept_of_(Eigen::VectorXi::Constant(init.dim(), -1)),
      shift_(Eigen::VectorXd::Zero(init.dim())),
      centered_([&] {
        Design d = design;
        center_block(d.w, init.gamma_offset(), intercept_of_, shift_);
        center_block(d.x, init.beta_offset(), intercept_of_, shift_);
        center_block(d.z, init.theta_offset(), intercept_of_, shift_);
        return d;
      }()),
      original_(init.values()),
      pending_(init.values()),
      cache_(centered_, centered_params(init, intercept_of_, shift_)) {}

double PosteriorTarget::propose(int j, double value) {
  const double delta = value - state()[j];
  pending_ = original_;
  pending_[j] += delta;
  const int a = intercept_of_[j];
  if (a >= 0) pending_[a] = original_[a] - delta * shift_[j];
  const bool inside = std::fabs(pending_[j]) <= kPriorBound && (a < 0 || std::fabs(pending_[a]) <= kPriorBound);
  if (!inside) return kNegInf;
  return cache_.propose(j, value);
}

void PosteriorTarget::accept() {
  cache_.accept();
  original_ = pending_;
}

FunctionTarget::FunctionTarget(LogDensity f, Eigen::VectorXd init)
    : f_(std::move(f)), state_(std::move(init)), pending_(state_), current_(f_(state_)) {}

double FunctionTarget::propose(int j, double value) {
  pending_ = state_;
  pending_[j] = value;
  pending_value_ = f_(pending_);
  return pending_value_;
}

void FunctionTarget::accept() {
  state_ = pending_;
  current_ = pending_value_;
}

ParamVector init_chain_1(const Dataset& data, const ModelSpec& spec, std::vector<std::string>* warnings) {
  const long n = data.n();
  const double mean = n > 0 ? data.y.mean() : 0.0;
  const double var = n > 1 ? (data.y.array() - mean).square().sum() / static_cast<double>(n - 1) : 0.0;
  const bool constant = n < 2 || data.y.maxCoeff() == data.y.minCoeff();
  ParamVector init = constant ? init_chain_2(spec) : ParamVector(spec);
  if (spec.inflated() && spec.inflation.intercept && n > 0) {
    // The inflation share stays defined for a constant response.
    const int inflated = *spec.scale.inflated_k();
    long hits = 0;
    for (long i = 0; i < n; ++i) hits += grid_index(data.y[i], spec.scale) == inflated;
    init[init.gamma_offset()] = clamped_logit(static_cast<double>(hits) / static_cast<double>(n));
  }
  if (constant) {
    if (warnings) warnings->emplace_back("constant response: location and dispersion start from the uniform initialization");
    init.clip_to_prior_box();
    return init;
  }
  if (spec.location.intercept) init[init.beta_offset()] = clamped_logit(mean);
  if (spec.dispersion.intercept) init[init.theta_offset()] = clamped_logit(var / (mean * (1.0 - mean)));
  return init;
}

ParamVector init_chain_2(const ModelSpec& spec) {
  ParamVector init(spec);
  if (spec.inflated() && spec.inflation.intercept) init[init.gamma_offset()] = -9.0;
  if (spec.location.intercept) init[init.beta_offset()] = logit(0.5);
  if (spec.dispersion.intercept) init[init.theta_offset()] = logit(1.0 / 3.0);
  return init;
}

ParamVector init_chain_3(const ParamVector& base, const Eigen::VectorXd& jitter) {
  ParamVector out = base;
  out.values() += jitter;
  out.clip_to_prior_box();
  return out;
}

ParamVector init_chain_3(const Dataset& data, const ModelSpec& spec, RngState& rng) {
  const ParamVector base = init_chain_1(data, spec);
  Eigen::VectorXd jitter(base.dim());
  for (int j = 0; j < base.dim(); ++j) jitter[j] = draw_uniform(rng) - 0.5;
  return init_chain_3(base, jitter);
}

ChainResult run_chain(MetropolisTarget& target, const SamplerConfig& cfg, RngState& rng) {
  cfg.validate();
  const int dim = static_cast<int>(target.state().size());
  ChainResult out;
  out.draws.resize(cfg.keep, dim);
  Eigen::VectorXd log_scale = Eigen::VectorXd::Constant(dim, std::log(cfg.initial_scale));
  Eigen::VectorXi batch_accepts = Eigen::VectorXi::Zero(dim);
  Eigen::VectorXi kept_accepts = Eigen::VectorXi::Zero(dim);
  out.last_batch_acceptance = Eigen::VectorXd::Zero(dim);
  int batch = 0;
  int in_batch = 0;
  double current = target.log_density();
  Eigen::VectorXd frozen_scale;

  const int total = cfg.burn_in + cfg.keep;
  for (int it = 0; it < total; ++it) {
    const bool burning = it < cfg.burn_in;
    if (!burning && frozen_scale.size() == 0) frozen_scale = log_scale;
    for (int j = 0; j < dim; ++j) {
      const double proposal = target.state()[j] + std::exp(log_scale[j]) * draw_normal(rng);
      const double candidate = target.propose(j, proposal);
      const double log_ratio = candidate - current;
      bool accepted = false;
      if (log_ratio >= 0.0) {
        accepted = true;
      } else if (std::isfinite(candidate)) {
        accepted = std::log(draw_uniform(rng)) < log_ratio;
      }
      if (accepted) {
        target.accept();
        current = candidate;
      }
      if (burning) batch_accepts[j] += accepted;
      else kept_accepts[j] += accepted;
    }
    if (burning && ++in_batch == cfg.adapt_window) {
      ++batch;
      const double gain = 2.0 / std::sqrt(static_cast<double>(batch));
      for (int j = 0; j < dim; ++j) {
        const double rate = static_cast<double>(batch_accepts[j]) / in_batch;
        out.last_batch_acceptance[j] = rate;
        log_scale[j] += gain * (rate - cfg.target_accept);
      }
      batch_accepts.setZero();
      in_batch = 0;
    }
    if (!burning) out.draws.row(it - cfg.burn_in) = target.draw().transpose();
  }
  if (in_batch > 0 && batch == 0) {
    for (int j = 0; j < dim; ++j) out.last_batch_acceptance[j] = static_cast<double>(batch_accepts[j]) / in_batch;
  }
  out.acceptance = kept_accepts.cast<double>() / static_cast<double>(cfg.keep);
  out.scales = log_scale.array().exp();
  out.scales_frozen = frozen_scale.size() == 0 || frozen_scale == log_scale;
  return out;
}

ChainResult run_chain(const ParamVector& init, const Design& design, const SamplerConfig& cfg, RngState& rng) {
  if (!init.in_prior_box()) throw SpecificationError("chain initialization lies outside the prior box");
  PosteriorTarget target(design, init);
  return run_chain(target, cfg, rng);
}

Eigen::VectorXd gelman_rubin(const std::vector<Eigen::MatrixXd>& chains) {
  if (chains.size() < 2) throw SpecificationError("gelman_rubin needs at least two chains");
  const long n = chains.front().rows();
  const long dim = chains.front().cols();
  if (n < 2) throw SpecificationError("gelman_rubin needs chains of length at least 2");
  for (const auto& c : chains) {
    if (c.rows() != n || c.cols() != dim) throw SpecificationError("gelman_rubin needs chains of equal shape");
  }
  const double m = static_cast<double>(chains.size());
  const double len = static_cast<double>(n);
  Eigen::VectorXd rhat(dim);
  for (long j = 0; j < dim; ++j) {
    Eigen::VectorXd means(chains.size());
    double within = 0.0;
    for (std::size_t c = 0; c < chains.size(); ++c) {
      const auto col = chains[c].col(j);
      means[static_cast<Eigen::Index>(c)] = col.mean();
      within += (col.array() - col.mean()).square().sum() / (len - 1.0);
    }
    within /= m;
    const double between_over_n = (means.array() - means.mean()).square().sum() / (m - 1.0);
    if (within == 0.0) {
      rhat[j] = between_over_n == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
      continue;
    }
    rhat[j] = std::sqrt(((len - 1.0) / len * within + between_over_n) / within);
  }
  return rhat;
}

std::pair<double, double> hpd_interval(const std::vector<double>& sorted_draws, double level) {
  const std::size_t n = sorted_draws.size();
  if (n < 10) throw SpecificationError("hpd_interval needs at least 10 draws");
  if (!(level > 0.0 && level < 1.0)) throw SpecificationError("hpd level must lie in (0, 1)");
  auto m = static_cast<std::size_t>(std::ceil(level * static_cast<double>(n) - 1e-9));
  m = std::clamp<std::size_t>(m, 1, n);
  std::size_t best = 0;
  double width = sorted_draws[m - 1] - sorted_draws[0];
  for (std::size_t i = 1; i + m <= n; ++i) {
    const double w = sorted_draws[i + m - 1] - sorted_draws[i];
    if (w < width) {
      width = w;
      best = i;
    }
  }
  return {sorted_draws[best], sorted_draws[best + m - 1]};
}

double effective_size(const std::vector<Eigen::VectorXd>& chains) {
  double total = 0.0;
  for (const auto& c : chains) {
    const long n = c.size();
    if (n < 4) {
      total += static_cast<double>(n);
      continue;
    }
    const Eigen::ArrayXd x = c.array() - c.mean();
    const double var = x.square().sum() / static_cast<double>(n);
    if (var == 0.0) {
      total += static_cast<double>(n);
      continue;
    }
    auto rho = [&](long lag) { return (x.head(n - lag) * x.tail(n - lag)).sum() / (static_cast<double>(n) * var); };
    // Geyer initial positive sequence: sum pairs while they stay positive.
    double tau = -1.0;
    for (long lag = 0; lag + 1 < n; lag += 2) {
      const double pair = rho(lag) + rho(lag + 1);
      if (pair <= 0.0) break;
      tau += 2.0 * pair;
    }
    total += static_cast<double>(n) / std::max(tau, 1e-12);
  }
  return total;
}

double sign_opposition(const Eigen::VectorXd& draws, double median) {
  if (draws.size() == 0) return 0.0;
  if (median == 0.0) return 0.5;
  const long opposed = median > 0.0 ? (draws.array() < 0.0).count() : (draws.array() > 0.0).count();
  return static_cast<double>(opposed) / static_cast<double>(draws.size());
}

PosteriorSample summarize(std::vector<ChainResult> chains, const std::vector<std::string>& names, double hpd_level) {
  PosteriorSample out;
  out.names = names;
  out.hpd_level = hpd_level;
  const int dim = static_cast<int>(names.size());
  out.acceptance = Eigen::VectorXd::Zero(dim);
  for (auto& c : chains) {
    out.acceptance += c.acceptance;
    out.draws.push_back(std::move(c.draws));
  }
  out.acceptance /= static_cast<double>(chains.size());
  const Eigen::MatrixXd pooled = out.pooled();

  out.medians.resize(dim);
  out.hpd.resize(dim, 2);
  out.sign_p.resize(dim);
  out.effective_sizes.resize(dim);
  for (int j = 0; j < dim; ++j) {
    std::vector<double> col(pooled.col(j).data(), pooled.col(j).data() + pooled.rows());
    std::sort(col.begin(), col.end());
    const std::size_t n = col.size();
    out.medians[j] = n % 2 == 1 ? col[n / 2] : 0.5 * (col[n / 2 - 1] + col[n / 2]);
    if (n >= 10) {
      const auto [lo, hi] = hpd_interval(col, hpd_level);
      out.hpd(j, 0) = lo;
      out.hpd(j, 1) = hi;
    } else {
      out.hpd(j, 0) = col.front();
      out.hpd(j, 1) = col.back();
    }
    out.sign_p[j] = sign_opposition(pooled.col(j), out.medians[j]);
    std::vector<Eigen::VectorXd> per_chain;
    for (const auto& d : out.draws) per_chain.emplace_back(d.col(j));
    out.effective_sizes[j] = effective_size(per_chain);
  }
  if (out.draws.size() >= 2 && out.draws.front().rows() >= 2) {
    out.gelman = gelman_rubin(out.draws);
  } else {
    out.gelman = Eigen::VectorXd::Constant(dim, std::numeric_limits<double>::quiet_NaN());
  }

  std::ostringstream unconverged;
  for (int j = 0; j < dim; ++j) {
    if (out.gelman[j] > kConvergenceThreshold) unconverged << ' ' << names[static_cast<std::size_t>(j)];
  }
  if (!unconverged.str().empty()) out.warnings.push_back("Gelman-Rubin R-hat above 1.1 for:" + unconverged.str());
  std::ostringstream boundary;
  for (int j = 0; j < dim; ++j) {
    if (std::fabs(out.medians[j]) >= 0.98 * kPriorBound) boundary << ' ' << names[static_cast<std::size_t>(j)];
  }
  if (!boundary.str().empty()) {
    out.warnings.push_back("posterior median within 2% of the prior bound for:" + boundary.str());
  }
  return out;
}

PosteriorSample fit(const Dataset& data, const ModelSpec& spec, const SamplerConfig& cfg) {
  cfg.validate();
  spec.validate();
  const Design design = build_design(data, spec);
  check_full_rank(design, spec);

  std::vector<std::string> warnings;
  const RngState root(cfg.seed, 0);
  std::vector<ParamVector> inits;
  const ParamVector first = init_chain_1(data, spec, &warnings);
  for (int c = 0; c < cfg.n_chains; ++c) {
    if (c == 0) {
      inits.push_back(first);
    } else if (c == 1) {
      inits.push_back(init_chain_2(spec));
    } else {
      RngState jitter_rng = root.fork(1000 + static_cast<std::uint64_t>(c));
      Eigen::VectorXd jitter(first.dim());
      for (int j = 0; j < first.dim(); ++j) jitter[j] = draw_uniform(jitter_rng) - 0.5;
      inits.push_back(init_chain_3(first, jitter));
    }
  }

  auto run_one = [&](int c) {
    RngState rng = root.fork(static_cast<std::uint64_t>(c));
    return run_chain(inits[static_cast<std::size_t>(c)], design, cfg, rng);
  };
  std::vector<ChainResult> chains;
  if (cfg.parallel && cfg.n_chains > 1) {
    std::vector<std::future<ChainResult>> futures;
    for (int c = 0; c < cfg.n_chains; ++c) futures.push_back(std::async(std::launch::async, run_one, c));
    for (auto& f : futures) chains.push_back(f.get());
  } else {
    for (int c = 0; c < cfg.n_chains; ++c) chains.push_back(run_one(c));
  }
  PosteriorSample out = summarize(std::move(chains), spec.parameter_names(), cfg.hpd_level);
  out.warnings.insert(out.warnings.begin(), warnings.begin(), warnings.end());
  return out;
}

}  // namespace idbr
