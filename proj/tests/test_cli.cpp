#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "idbr/cli.hpp"
#include "idbr/predict.hpp"

using namespace idbr;
using namespace idbr::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "idbr_cli_tests";
  fs::create_directories(dir);
  return dir / name;
}

std::string write_file(const std::string& name, const std::string& text) {
  const fs::path p = scratch(name);
  std::ofstream(p) << text;
  return p.string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunConfig base_config(const std::string& data) {
  Json doc = Json::parse(R"({
    "response": "y",
    "scale": {"a": 0, "b": 10, "h_star": 1},
    "location": {"columns": ["x"]},
    "dispersion": {"columns": []}
  })");
  doc["data"] = data;
  return parse_config(doc);
}

std::string write_dataset_csv(const std::string& name, const Dataset& data, const ScaleSpec& s) {
  std::ostringstream os;
  os.precision(17);
  os << "y";
  for (const auto& c : data.columns) os << "," << c;
  os << "\n";
  for (long i = 0; i < data.n(); ++i) {
    os << from_reduced(data.y[i], s);
    for (Eigen::Index j = 0; j < data.covariates.cols(); ++j) os << "," << data.covariates(i, j);
    os << "\n";
  }
  return write_file(name, os.str());
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("listwise deletion counts dropped rows") {
  const std::string path = write_file("three.csv", "y,x,unused\n3,0.5,\n4,,1\n10,1.5,NA\n");
  const Ingested ing = ingest_csv(path, base_config(path));
  CHECK(ing.data.n() == 2);
  CHECK(ing.dropped == 1);
  CHECK(ing.rows == std::vector<long>{1, 3});
  CHECK(ing.scale.levels() == 11);
  CHECK(ing.scale.h() == doctest::Approx(1.0 / 11));
  CHECK(ing.data.y[0] == 4.0 / 11);
  CHECK(ing.data.y[1] == 1.0);
}

TEST_CASE("off-support response names the row") {
  const std::string path = write_file("off.csv", "y,x\n3,0.5\n11,1.0\n");
  try {
    ingest_csv(path, base_config(path));
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("row 2") != std::string::npos);
  }
}

TEST_CASE("ingestion errors") {
  const std::string empty = write_file("empty.csv", "y,x\n,1\n");
  CHECK_THROWS_AS(ingest_csv(empty, base_config(empty)), ValidationError);
  const std::string no_col = write_file("nocol.csv", "y,z\n1,1\n");
  CHECK_THROWS_AS(ingest_csv(no_col, base_config(no_col)), ValidationError);
  const std::string text = write_file("text.csv", "y,x\n1,abc\n");
  CHECK_THROWS_AS(ingest_csv(text, base_config(text)), ValidationError);
  const std::string ragged = write_file("ragged.csv", "y,x\n1,2,3\n");
  CHECK_THROWS_AS(ingest_csv(ragged, base_config(ragged)), ValidationError);
  CHECK_THROWS_AS(ingest_csv(scratch("missing.csv").string(), base_config("x")), ValidationError);
}

TEST_CASE("dummy columns must be 0 or 1") {
  const std::string path = write_file("dummy.csv", "y,x\n1,0\n2,1\n3,2\n");
  RunConfig cfg = base_config(path);
  cfg.dummies = {"x"};
  CHECK_THROWS_AS(ingest_csv(path, cfg), ValidationError);
  cfg.dummies = {"other"};
  CHECK_THROWS_AS(ingest_csv(path, cfg), ValidationError);
}

TEST_CASE("labels map by declared order and quoted fields parse") {
  const std::string path = write_file("labels.csv", "\xEF\xBB\xBFy,x\nnever,1\n\"often\",2\r\n3,\"3.5\"\n");
  Json doc = Json::parse(R"({"response": "y", "scale": {"a": 1, "b": 4, "h_star": 1, "inflated_level": 1,
      "labels": ["never", "sometimes", "3", "often"]}, "location": {"columns": ["x"]}})");
  const RunConfig cfg = parse_config(doc);
  const Ingested ing = ingest_csv(path, cfg);
  REQUIRE(ing.data.n() == 3);
  CHECK(ing.data.y[0] == 0.25);
  CHECK(ing.data.y[1] == 1.0);
  CHECK(ing.data.y[2] == 0.75);
  CHECK(ing.data.covariates(2, 0) == 3.5);
}

TEST_CASE("standardization parameters are estimated and reapplied") {
  const std::string path = write_file("std.csv", "y,x,d\n1,1,0\n2,2,1\n3,3,0\n4,6,1\n");
  RunConfig cfg = base_config(path);
  cfg.location.columns = {"x", "d"};
  cfg.dummies = {"d"};
  cfg.standardize = true;
  const Ingested ing = ingest_csv(path, cfg);
  CHECK(ing.standardization.columns.count("d") == 0);
  const auto [mean, sd] = ing.standardization.columns.at("x");
  CHECK(mean == 3.0);
  CHECK(sd == doctest::Approx(std::sqrt(14.0 / 3)));
  CHECK(ing.data.covariates.col(0).mean() == doctest::Approx(0.0).epsilon(1e-12));
  const Standardization back = Standardization::from_json(ing.standardization.to_json());
  const Ingested again = ingest_csv(path, cfg, true, &back);
  CHECK(again.data.covariates == ing.data.covariates);
}

TEST_CASE("config parsing and overrides") {
  CHECK_THROWS_AS(parse_config(Json::parse(R"({"bogus": 1})")), ValidationError);
  CHECK_THROWS_AS(parse_config(Json::parse(R"({"sampler": {"keep": "many"}})")), ValidationError);
  CHECK_THROWS_AS(parse_config(Json::parse(R"({"scale": {"a": 0, "b": 10, "inflated_level": 12}})")), ValidationError);
  CHECK_THROWS_AS(parse_config(Json::parse(R"({"sampler": {"chains": 1}})")), ValidationError);
  RunConfig cfg = parse_config(Json::parse(R"({"sampler": {"seed": 9}})"));
  CHECK(cfg.sampler.burn_in == 1000);
  CHECK(cfg.sampler.keep == 1000);
  CHECK(cfg.sampler.n_chains == 3);
  CHECK(cfg.sampler.hpd_level == 0.95);
  Overrides o;
  o.seed = 4;
  o.keep = 10;
  o.replications = 3;
  o.out = "x.json";
  apply_overrides(cfg, o);
  CHECK(cfg.sampler.seed == 4);
  CHECK(cfg.sampler.keep == 10);
  CHECK(cfg.simulation.replications == 3);
  CHECK(cfg.output_path == "x.json");
  o.hpd_level = 1.5;
  CHECK_THROWS_AS(apply_overrides(cfg, o), ValidationError);
  const RunConfig round = parse_config(to_json(cfg));
  CHECK(to_json(round).dump() == to_json(cfg).dump());
}

TEST_CASE("fit, predict and the in-sample round trip") {
  SimDesign sim = table1_design();
  sim.n = 120;
  RngState data_rng(77, 0);
  const Dataset data = gen_idbr(sim, data_rng);
  const std::string csv = write_dataset_csv("train.csv", data, sim.scale());
  Json doc = Json::parse(R"({
    "response": "y",
    "scale": {"a": 1, "b": 6, "h_star": 1, "inflated_level": 1},
    "inflation": {"columns": ["V1"]},
    "location": {"columns": ["V1", "V2", "D1"]},
    "dispersion": {"columns": ["V3"]},
    "dummies": ["D1"],
    "sampler": {"burn_in": 200, "keep": 150, "seed": 5}
  })");
  doc["data"] = csv;
  const RunConfig cfg = parse_config(doc);
  const Json fitted = fit_command(cfg);
  const Json refit = fit_command(cfg);
  CHECK(fitted.dump() == refit.dump());
  CHECK(fitted["metadata"]["n"] == 120);
  CHECK(fitted["metadata"]["inflated_level"]["value"] == 1.0);
  CHECK(fitted["metadata"]["inflated_level"]["label"] == "1");
  REQUIRE(fitted["parameters"].size() == 8);
  for (const auto& p : fitted["parameters"]) {
    CHECK(p["hpd_low"].get<double>() <= p["estimate"].get<double>());
    CHECK(p["p"].get<double>() >= 0.0);
    CHECK(p["p"].get<double>() <= 0.5);
  }
  CHECK(fitted["draws"].size() == 3);
  CHECK(fitted["draws"][0].size() == 150);

  const std::string model_path = scratch("model.json").string();
  write_document(fitted, model_path);
  const std::string written = slurp(model_path);
  write_document(refit, model_path);
  CHECK(slurp(model_path) == written);

  Json pdoc = Json::parse(R"({"sampler": {"seed": 12}})");
  pdoc["data"] = csv;
  pdoc["model"] = model_path;
  const RunConfig pcfg = parse_config(pdoc);
  const Json pred = predict_command(pcfg);
  REQUIRE(pred["rows"].size() == 120);
  for (const auto& row : pred["rows"]) {
    double total = 0.0;
    for (const auto& cell : row["mass"]) {
      const double pr = cell["probability"].get<double>();
      CHECK(pr >= 0.0);
      CHECK(pr <= 1.0);
      CHECK(cell["value"].get<double>() >= 1.0);
      CHECK(cell["value"].get<double>() <= 6.0);
      total += pr;
    }
    CHECK(std::fabs(total - 1.0) < 1e-9);
    CHECK(row["region"]["length"].get<double>() <= 1.0);
    CHECK(row["region"]["coverage"].get<double>() >= 0.95 - 1e-12);
  }

  // The same draws, rows and stream give the masses used by the study metrics.
  const ModelSpec spec = cfg.model();
  Eigen::MatrixXd pooled(450, spec.dim());
  long r = 0;
  for (const auto& chain : fitted["draws"]) {
    for (const auto& draw : chain) {
      for (int j = 0; j < spec.dim(); ++j) pooled(r, j) = draw[static_cast<std::size_t>(j)].get<double>();
      ++r;
    }
  }
  const Design design = build_design(data, spec);
  const RngState rng(12, kPredictStream);
  const auto dists = predictive_distributions(pooled, spec, design, rng, 0.95);
  double correct = 0.0;
  for (std::size_t i = 0; i < dists.size(); ++i) {
    for (int k = 1; k <= 6; ++k) {
      CHECK(pred["rows"][i]["mass"][static_cast<std::size_t>(k - 1)]["probability"].get<double>() ==
            dists[i].mass[k - 1]);
    }
    correct += pred["rows"][i]["mode"]["value"] == pred["rows"][i]["observed"]["value"];
  }
  RngState metric_rng = rng;
  const PredictionMetrics m = predict_dataset(pooled, spec, data, metric_rng, 0.95);
  CHECK(m.percent_correct == doctest::Approx(100.0 * correct / 120.0));

  // Columns the model needs must be present in new data.
  const std::string partial = write_file("partial.csv", "V1,V2\n1,2\n");
  pdoc["data"] = partial;
  CHECK_THROWS_AS(predict_command(parse_config(pdoc)), ValidationError);
}

TEST_CASE("degenerate inflation posterior predicts the inflated point alone") {
  Json model = Json::parse(R"({"kind": "idbr-fit", "standardization": {}})");
  Json cfg = Json::parse(R"({"response": "y", "scale": {"a": 0, "b": 4, "h_star": 1, "inflated_level": 2},
      "location": {"columns": []}, "dispersion": {"columns": []}})");
  model["config"] = cfg;
  Json chain = Json::array();
  for (int i = 0; i < 20; ++i) chain.push_back(Json::array({1000.0, 0.0, 0.0}));
  model["draws"] = Json::array({chain, chain});
  const std::string model_path = scratch("degenerate.json").string();
  write_document(model, model_path);
  const std::string rows = write_file("rows.csv", "id\n1\n2\n");
  Json pdoc;
  pdoc["data"] = rows;
  pdoc["model"] = model_path;
  const Json pred = predict_command(parse_config(pdoc));
  REQUIRE(pred["rows"].size() == 2);
  CHECK(pred["rows"][0]["region"]["values"] == Json::array({2.0}));
  CHECK(pred["rows"][0]["pi_hat"] == 1.0);
  CHECK(pred["rows"][0]["mode"]["value"] == 2.0);
  CHECK(pred["rows"][0]["region"]["length"] == 0.0);
  CHECK(!pred["rows"][0].contains("observed"));
}

TEST_CASE("predict rejects documents that are not fitted models") {
  const std::string bad = write_file("bad.json", R"({"kind": "something"})");
  Json pdoc;
  pdoc["data"] = bad;
  pdoc["model"] = bad;
  CHECK_THROWS_AS(predict_command(parse_config(pdoc)), ValidationError);
}

TEST_CASE("simulate smoke run emits both replication records") {
  Json doc = Json::parse(R"({"simulation": {"n": 100, "replications": 2, "seed": 3},
      "sampler": {"burn_in": 60, "keep": 60}})");
  const RunConfig cfg = parse_config(doc);
  const Json a = simulate_command(cfg);
  const Json b = simulate_command(cfg);
  CHECK(a.dump() == b.dump());
  CHECK(a["records"].size() == 2);
  CHECK(a["parameters"].size() == 24);
  CHECK(a["records"][0].contains("prediction"));
  CHECK(a["levels"] == 6);
  Json eleven = doc;
  eleven["simulation"]["truth"] = "table2";
  CHECK(parse_config(eleven).simulation.design(0.95).levels == 11);
  eleven["simulation"]["truth"] = "nope";
  CHECK_THROWS_AS(parse_config(eleven).simulation.design(0.95), ValidationError);
}

TEST_CASE("full-size fit covers the generating parameters") {
  SimDesign sim = table1_design();
  RngState data_rng(sim.seed, 0);
  const Dataset data = gen_idbr(sim, data_rng);
  const std::string csv = write_dataset_csv("full.csv", data, sim.scale());
  Json doc = Json::parse(R"({
    "response": "y",
    "scale": {"a": 1, "b": 6, "h_star": 1, "inflated_level": 1},
    "inflation": {"columns": ["V1", "V2", "V3", "V4", "D1", "D2", "D3"]},
    "location": {"columns": ["V1", "V2", "V3", "V4", "D1", "D2", "D3"]},
    "dispersion": {"columns": ["V1", "V2", "V3", "V4", "D1", "D2", "D3"]},
    "dummies": ["D1", "D2", "D3"]
  })");
  doc["data"] = csv;
  const Json fitted = fit_command(parse_config(doc));
  REQUIRE(fitted["parameters"].size() == 24);
  int covered = 0;
  for (int j = 0; j < 24; ++j) {
    const Json& p = fitted["parameters"][static_cast<std::size_t>(j)];
    const double truth = sim.truth[j];
    covered += p["hpd_low"].get<double>() <= truth && truth <= p["hpd_high"].get<double>();
  }
  CHECK(covered >= 22);
}

}  // TEST_SUITE
