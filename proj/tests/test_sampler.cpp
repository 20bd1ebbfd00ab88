#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "idbr/sampler.hpp"
#include "idbr/simulate.hpp"

using namespace idbr;

namespace {

Dataset response_only(const std::vector<double>& y) {
  Dataset d;
  d.y = Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size()));
  d.covariates.resize(static_cast<Eigen::Index>(y.size()), 0);
  return d;
}

ModelSpec intercept_only(int levels, std::optional<double> inflated = std::nullopt) {
  return ModelSpec{ScaleSpec(1, levels, 1, inflated), Submodel{{}, true}, Submodel{{}, true}, Submodel{{}, true}};
}

ChainResult normal_chain(std::uint64_t seed, int keep, double start = 0.0) {
  FunctionTarget target([](const Eigen::VectorXd& x) { return -0.5 * x.squaredNorm(); },
                        Eigen::VectorXd::Constant(1, start));
  SamplerConfig cfg;
  cfg.burn_in = 1000;
  cfg.keep = keep;
  RngState rng(seed, 0);
  return run_chain(target, cfg, rng);
}

double sd(const Eigen::VectorXd& v) { return std::sqrt((v.array() - v.mean()).square().mean()); }

}  // namespace

TEST_SUITE("sampler") {

TEST_CASE("config validation") {
  SamplerConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.burn_in = 0;
  CHECK_THROWS_AS(cfg.validate(), SpecificationError);
  cfg = SamplerConfig{};
  cfg.keep = 0;
  CHECK_THROWS_AS(cfg.validate(), SpecificationError);
  cfg = SamplerConfig{};
  cfg.n_chains = 1;
  CHECK_THROWS_AS(cfg.validate(), SpecificationError);
  cfg = SamplerConfig{};
  cfg.hpd_level = 1.0;
  CHECK_THROWS_AS(cfg.validate(), SpecificationError);
}

TEST_CASE("chain-1 initialization from marginal moments") {
  const Dataset data = response_only({0.2, 0.4, 0.6, 0.8, 1.0});
  const ParamVector init = init_chain_1(data, intercept_only(5));
  CHECK(init.beta()[0] == doctest::Approx(0.405465).epsilon(1e-6));
  CHECK(init.theta()[0] == doctest::Approx(-0.336472).epsilon(1e-6));

  const ModelSpec inf = intercept_only(5, 1.0);
  std::vector<std::string> warnings;
  const ParamVector all_inflated = init_chain_1(response_only({0.2, 0.2, 0.2}), inf, &warnings);
  // Constant response: chain-2 location and dispersion, inflation share clamped to the bound.
  CHECK(!warnings.empty());
  CHECK(all_inflated.gamma()[0] == 10.0);
  CHECK(all_inflated.beta()[0] == 0.0);
  CHECK(all_inflated.theta()[0] == doctest::Approx(logit(1.0 / 3)));
  warnings.clear();
  const ParamVector elsewhere = init_chain_1(response_only({0.6, 0.6}), inf, &warnings);
  CHECK(elsewhere.gamma()[0] == -10.0);
  CHECK(!warnings.empty());

  const ParamVector mostly = init_chain_1(response_only({0.2, 0.2, 0.2, 0.4}), inf);
  CHECK(mostly.gamma()[0] == doctest::Approx(logit(0.75)));
  const ParamVector none = init_chain_1(response_only({0.4, 0.6, 0.8}), inf);
  CHECK(none.gamma()[0] == -10.0);
}

TEST_CASE("proportion one clamps to the prior bound") {
  std::vector<double> y(20, 0.2);
  y.push_back(0.4);
  const ModelSpec inf = intercept_only(5, 1.0);
  ParamVector v = init_chain_1(response_only(y), inf);
  CHECK(v.gamma()[0] == doctest::Approx(logit(20.0 / 21)));
  std::vector<double> y2(2000000, 0.2);
  y2.push_back(0.4);
  v = init_chain_1(response_only(y2), inf);
  CHECK(v.gamma()[0] <= 10.0);
}

TEST_CASE("chain-2 initialization") {
  const ParamVector v = init_chain_2(table1_design().model());
  CHECK(v.gamma()[0] == -9.0);
  CHECK(v.beta()[0] == 0.0);
  CHECK(v.theta()[0] == doctest::Approx(-0.693147).epsilon(1e-6));
  CHECK(v.values().cwiseAbs().sum() == doctest::Approx(9.0 + std::log(2.0)));
  const ParamVector plain = init_chain_2(intercept_only(6));
  CHECK(plain.dim() == 2);
  CHECK(plain.beta()[0] == 0.0);
}

TEST_CASE("chain-3 initialization") {
  SimDesign sim = table1_design();
  sim.n = 300;
  RngState data_rng(1, 0);
  const Dataset data = gen_idbr(sim, data_rng);
  const ModelSpec spec = sim.model();
  const ParamVector base = init_chain_1(data, spec);
  const ParamVector same = init_chain_3(base, Eigen::VectorXd::Zero(base.dim()));
  CHECK(same.values() == base.values());
  RngState a(5, 0);
  RngState b(5, 0);
  const ParamVector j1 = init_chain_3(data, spec, a);
  const ParamVector j2 = init_chain_3(data, spec, b);
  CHECK(j1.values() == j2.values());
  CHECK((j1.values() - base.values()).cwiseAbs().maxCoeff() <= 0.5);
  CHECK(j1.in_prior_box());
}

TEST_CASE("standard normal stub: acceptance, sd, adaptation, freezing") {
  const ChainResult r = normal_chain(3, 10000);
  CHECK(r.acceptance[0] >= 0.30);
  CHECK(r.acceptance[0] <= 0.55);
  const double s = sd(r.draws.col(0));
  CHECK(s >= 0.9);
  CHECK(s <= 1.1);
  CHECK(std::fabs(r.last_batch_acceptance[0] - 0.44) <= 0.15);
  CHECK(r.scales_frozen);
}

TEST_CASE("deterministic replay") {
  const ChainResult a = normal_chain(17, 500);
  const ChainResult b = normal_chain(17, 500);
  CHECK(a.draws == b.draws);
  const ChainResult c = normal_chain(18, 500);
  CHECK(a.draws != c.draws);
}

TEST_CASE("out-of-box proposals are rejected") {
  FunctionTarget target(
      [](const Eigen::VectorXd& x) {
        return std::fabs(x[0]) <= 1.0 ? 0.0 : -std::numeric_limits<double>::infinity();
      },
      Eigen::VectorXd::Zero(1));
  SamplerConfig cfg;
  cfg.keep = 2000;
  RngState rng(2, 0);
  const ChainResult r = run_chain(target, cfg, rng);
  CHECK(r.draws.cwiseAbs().maxCoeff() <= 1.0);
}

TEST_CASE("posterior target proposes in centered coordinates") {
  SimDesign sim = table1_design();
  sim.n = 60;
  RngState data_rng(21, 0);
  const Dataset data = gen_idbr(sim, data_rng);
  const ModelSpec spec = sim.model();
  const Design d = build_design(data, spec);
  PosteriorTarget target(d, sim.truth);
  CHECK(target.draw() == sim.truth.values());
  CHECK(target.log_density() == doctest::Approx(log_likelihood(sim.truth, d)).epsilon(1e-12));

  RngState rng(22, 0);
  for (int step = 0; step < 200; ++step) {
    const int j = static_cast<int>(draw_uniform(rng) * spec.dim());
    const double value = target.state()[j] + draw_normal(rng, 0.0, 0.05);
    const double proposed = target.propose(j, value);
    if (draw_uniform(rng) < 0.5) continue;
    target.accept();
    const ParamVector now(spec, target.draw());
    CHECK(target.log_density() == doctest::Approx(proposed).epsilon(1e-12));
    CHECK(proposed == doctest::Approx(log_likelihood(now, d)).epsilon(1e-9));
  }

  // Moving a slope shifts the original intercept by the column mean.
  const int slope = sim.truth.beta_offset() + 2;
  const double mean = d.x.col(2).mean();
  const ParamVector before(spec, target.draw());
  target.propose(slope, target.state()[slope] + 0.1);
  target.accept();
  CHECK(target.draw()[slope] == doctest::Approx(before[slope] + 0.1).epsilon(1e-12));
  CHECK(target.draw()[sim.truth.beta_offset()] == doctest::Approx(before.beta()[0] - 0.1 * mean).epsilon(1e-12));

  // The box applies to the original intercept, not the centered one.
  const double push = (before.beta()[0] + 10.5) / mean;
  CHECK(target.propose(slope, target.state()[slope] + push) == -std::numeric_limits<double>::infinity());
}

TEST_CASE("gelman_rubin") {
  Eigen::MatrixXd a(1000, 1);
  RngState rng(6, 0);
  for (int i = 0; i < 1000; ++i) a(i, 0) = draw_normal(rng);
  CHECK(gelman_rubin({a, a})[0] == doctest::Approx(std::sqrt(999.0 / 1000)).epsilon(1e-12));
  Eigen::MatrixXd b = a.array() + 10.0;
  CHECK(gelman_rubin({a, b})[0] > 1.1);
  Eigen::MatrixXd c = Eigen::MatrixXd::Constant(100, 2, 3.0);
  CHECK(gelman_rubin({c, c})[0] == 1.0);
  CHECK(std::isinf(gelman_rubin({c, Eigen::MatrixXd::Constant(100, 2, 4.0)})[0]));
  CHECK_THROWS_AS(gelman_rubin({a}), SpecificationError);
  CHECK_THROWS_AS(gelman_rubin({a, Eigen::MatrixXd(500, 1)}), SpecificationError);

  const ChainResult x = normal_chain(31, 1000);
  const ChainResult y = normal_chain(32, 1000, 2.0);
  CHECK(gelman_rubin({x.draws, y.draws})[0] < 1.1);
}

TEST_CASE("hpd_interval examples") {
  std::vector<double> seq(1000);
  for (int i = 0; i < 1000; ++i) seq[i] = i;
  const auto [lo, hi] = hpd_interval(seq, 0.95);
  CHECK(lo == 0.0);
  CHECK(hi == 949.0);
  std::vector<double> flat(50, 2.5);
  CHECK(hpd_interval(flat, 0.9) == std::make_pair(2.5, 2.5));
  CHECK_THROWS_AS(hpd_interval(std::vector<double>(9, 0.0), 0.95), SpecificationError);

  RngState rng(8, 0);
  std::vector<double> z(3000);
  for (auto& v : z) v = draw_normal(rng);
  std::sort(z.begin(), z.end());
  const auto [zl, zh] = hpd_interval(z, 0.95);
  CHECK(std::fabs((zh - zl) - 3.92) <= 0.392);
}

TEST_CASE("hpd_interval is the shortest admissible window") {
  RngState rng(9, 0);
  for (int t = 0; t < 200; ++t) {
    const int n = 10 + static_cast<int>(draw_uniform(rng) * 300);
    const double level = 0.5 + 0.49 * draw_uniform(rng);
    std::vector<double> d(static_cast<std::size_t>(n));
    for (auto& v : d) v = std::exp(draw_normal(rng));
    std::sort(d.begin(), d.end());
    const auto [lo, hi] = hpd_interval(d, level);
    const long inside = std::count_if(d.begin(), d.end(), [&](double v) { return v >= lo && v <= hi; });
    CHECK(inside >= static_cast<long>(std::ceil(level * n - 1e-9)));
    const int m = static_cast<int>(std::ceil(level * n - 1e-9));
    double best = INFINITY;
    for (int s = 0; s + m <= n; ++s) best = std::min(best, d[s + m - 1] - d[s]);
    CHECK(hi - lo == best);
  }
}

TEST_CASE("effective_size and sign_opposition") {
  RngState rng(10, 0);
  Eigen::VectorXd iid(4000);
  for (int i = 0; i < iid.size(); ++i) iid[i] = draw_normal(rng);
  const double ess = effective_size({iid});
  CHECK(ess > 3000);
  CHECK(ess < 5500);
  const ChainResult r = normal_chain(11, 4000);
  CHECK(effective_size({r.draws.col(0)}) < 2000);

  Eigen::VectorXd pos = Eigen::VectorXd::LinSpaced(100, 0.1, 5.0);
  CHECK(sign_opposition(pos, 2.0) == 0.0);
  Eigen::VectorXd mixed = Eigen::VectorXd::LinSpaced(100, -1.975, 2.975);
  CHECK(sign_opposition(mixed, 0.5) == doctest::Approx(0.40));
  CHECK(sign_opposition(-mixed, -0.5) == doctest::Approx(0.40));
  CHECK(sign_opposition(mixed, 0.0) == 0.5);
}

TEST_CASE("1-parameter posterior matches the grid density") {
  // Location intercept of an intercept-only DBR with fixed dispersion.
  SimDesign sim = table1_design();
  RngState data_rng(41, 0);
  const int n = 200;
  std::vector<double> y;
  for (int i = 0; i < n; ++i) y.push_back(round_up_to_grid(draw_beta(data_rng, 2.0, 3.0), 6) / 6.0);
  const ModelSpec spec = intercept_only(6);
  const Dataset data = response_only(y);
  const Design design = build_design(data, spec);
  auto logpost = [&](const Eigen::VectorXd& b) {
    ParamVector p(spec);
    p.beta()[0] = b[0];
    p.theta()[0] = -1.5;
    return log_posterior(p, design);
  };
  FunctionTarget target(logpost, Eigen::VectorXd::Zero(1));
  SamplerConfig cfg;
  cfg.keep = 30000;
  RngState rng(42, 0);
  const ChainResult r = run_chain(target, cfg, rng);

  const double lo = -1.5;
  const double hi = 0.5;
  const int bins = 40;
  const double w = (hi - lo) / bins;
  Eigen::VectorXd grid(bins);
  // Fine midpoint rule within each bin.
  std::vector<double> logs;
  for (int b = 0; b < bins; ++b) {
    for (int s = 0; s < 20; ++s) logs.push_back(logpost(Eigen::VectorXd::Constant(1, lo + (b + (s + 0.5) / 20) * w)));
  }
  const double top = *std::max_element(logs.begin(), logs.end());
  for (int b = 0; b < bins; ++b) {
    double s = 0.0;
    for (int k = 0; k < 20; ++k) s += std::exp(logs[static_cast<std::size_t>(b * 20 + k)] - top);
    grid[b] = s;
  }
  grid /= grid.sum();
  Eigen::VectorXd hist = Eigen::VectorXd::Zero(bins);
  for (int i = 0; i < r.draws.rows(); ++i) {
    const int b = static_cast<int>(std::floor((r.draws(i, 0) - lo) / w));
    if (b >= 0 && b < bins) hist[b] += 1.0;
  }
  hist /= static_cast<double>(r.draws.rows());
  const double tv = 0.5 * (hist - grid).cwiseAbs().sum() + 0.5 * (1.0 - hist.sum());
  CHECK(tv < 0.05);
}

TEST_CASE("fit on a small intercept-only problem") {
  RngState data_rng(51, 0);
  std::vector<double> y;
  for (int i = 0; i < 300; ++i) y.push_back(round_up_to_grid(draw_beta(data_rng, 1.0, 1.0), 6) / 6.0);
  const ModelSpec spec = intercept_only(6);
  SamplerConfig cfg;
  cfg.burn_in = 300;
  cfg.keep = 300;
  const PosteriorSample post = fit(response_only(y), spec, cfg);
  REQUIRE(post.dim() == 2);
  CHECK(post.draws.size() == 3);
  CHECK(post.pooled_size() == 900);
  CHECK(std::fabs(post.medians[0]) < 0.3);
  CHECK(post.medians[1] == doctest::Approx(logit(1.0 / 3)).epsilon(0.3));
  CHECK(post.gelman.maxCoeff() < 1.1);
  for (int j = 0; j < 2; ++j) {
    CHECK(post.hpd(j, 0) <= post.medians[j]);
    CHECK(post.hpd(j, 1) >= post.medians[j]);
    CHECK(std::fabs(post.hpd(j, 0)) <= kPriorBound);
    CHECK(std::fabs(post.hpd(j, 1)) <= kPriorBound);
  }
  // Medians are those of the pooled draws.
  Eigen::MatrixXd pooled = post.pooled();
  std::vector<double> col(pooled.col(1).data(), pooled.col(1).data() + pooled.rows());
  std::sort(col.begin(), col.end());
  CHECK(post.medians[1] == 0.5 * (col[449] + col[450]));
  CHECK(post.sign_p[1] == 0.0);

  SamplerConfig serial = cfg;
  serial.parallel = false;
  const PosteriorSample again = fit(response_only(y), spec, serial);
  CHECK(again.pooled() == post.pooled());
}

TEST_CASE("fit rejects rank-deficient designs") {
  Dataset data = response_only({0.2, 0.4, 0.6, 0.8, 1.0, 0.4});
  data.covariates = Eigen::MatrixXd::Ones(6, 1);
  data.columns = {"one"};
  const ModelSpec spec{ScaleSpec(1, 5, 1), Submodel{{}, true}, Submodel{{"one"}, true}, Submodel{{}, true}};
  CHECK_THROWS_AS(fit(data, spec, SamplerConfig{}), SpecificationError);
}

TEST_CASE("summarize warns on poor mixing and boundary medians") {
  std::vector<ChainResult> chains(2);
  for (int c = 0; c < 2; ++c) {
    chains[c].draws = Eigen::MatrixXd(100, 2);
    for (int i = 0; i < 100; ++i) {
      chains[c].draws(i, 0) = c * 5.0 + 0.01 * i;
      chains[c].draws(i, 1) = 9.9;
    }
    chains[c].acceptance = Eigen::VectorXd::Constant(2, 0.4);
  }
  const PosteriorSample s = summarize(chains, {"a", "b"}, 0.95);
  REQUIRE(s.warnings.size() == 2);
  CHECK(s.warnings[0].find("a") != std::string::npos);
  CHECK(s.warnings[1].find("b") != std::string::npos);
}

}  // TEST_SUITE
