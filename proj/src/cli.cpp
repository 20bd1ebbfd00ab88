#include "idbr/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "idbr/predict.hpp"
#include "idbr/rng.hpp"

namespace idbr::cli {

namespace {

[[noreturn]] void config_fail(const std::string& what) { throw ValidationError("config: " + what); }

void check_keys(const Json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) config_fail(where + " must be an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* k) { return it.key() == k; })) {
      config_fail("unknown key '" + it.key() + "' in " + where);
    }
  }
}

template <typename T>
T get_or(const Json& obj, const char* key, T fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    config_fail(where + "." + key + " has the wrong type");
  }
}

Submodel parse_submodel(const Json& doc, const char* key) {
  Submodel sub;
  if (!doc.contains(key)) return sub;
  const Json& obj = doc.at(key);
  check_keys(obj, key, {"columns", "intercept"});
  sub.columns = get_or<std::vector<std::string>>(obj, "columns", {}, key);
  sub.intercept = get_or<bool>(obj, "intercept", true, key);
  return sub;
}

Json submodel_json(const Submodel& sub) { return Json{{"columns", sub.columns}, {"intercept", sub.intercept}}; }

std::string trim(std::string_view s) {
  auto issp = [](char c) { return c == ' ' || c == '\t' || c == '\r'; };
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && issp(s[b])) ++b;
  while (e > b && issp(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_csv_line(const std::string& line, long row) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) throw ValidationError("csv: unterminated quote at row " + std::to_string(row));
  fields.push_back(trim(cur));
  return fields;
}

bool is_missing(const std::string& s) {
  return s.empty() || s == "NA" || s == "NaN" || s == "nan" || s == "." || s == "null";
}

std::optional<double> parse_number(const std::string& s) {
  double v = 0.0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  if (begin != end && *begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::vector<std::string> used_columns(const RunConfig& config, bool inflated) {
  std::vector<std::string> out;
  auto add = [&out](const Submodel& sub) {
    for (const auto& c : sub.columns) {
      if (std::find(out.begin(), out.end(), c) == out.end()) out.push_back(c);
    }
  };
  if (inflated) add(config.inflation);
  add(config.location);
  add(config.dispersion);
  return out;
}

Json level_json(const ScaleSpec& s, int k) { return Json{{"value", s.original(k)}, {"label", s.label(k)}}; }

Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

std::pair<std::string, std::string> split_name(const std::string& name) {
  const auto colon = name.find(':');
  return {name.substr(0, colon), name.substr(colon + 1)};
}

Json prediction_json(const PredictionMetrics& m) {
  return Json{{"predictions", m.predictions},
              {"percent_correct", m.percent_correct},
              {"region_coverage", m.region_coverage},
              {"mean_length", m.mean_length},
              {"mean_scaled_length", m.mean_scaled_length},
              {"percent_disjoint", m.percent_disjoint}};
}

Json vector_json(const Eigen::VectorXd& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(finite_or_null(v[i]));
  return out;
}

Eigen::MatrixXd pooled_draws(const Json& chains, int dim) {
  if (!chains.is_array() || chains.empty()) throw ValidationError("fitted model: no draws");
  long rows = 0;
  for (const auto& c : chains) rows += static_cast<long>(c.size());
  Eigen::MatrixXd out(rows, dim);
  long r = 0;
  for (const auto& c : chains) {
    for (const auto& draw : c) {
      if (!draw.is_array() || static_cast<int>(draw.size()) != dim) {
        throw ValidationError("fitted model: draw has the wrong length");
      }
      for (int j = 0; j < dim; ++j) out(r, j) = draw[static_cast<std::size_t>(j)].get<double>();
      ++r;
    }
  }
  return out;
}

Json read_json_file(const std::string& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw ValidationError(std::string("cannot open ") + what + " '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string(what) + " '" + path + "' is not valid JSON: " + e.what());
  }
}

}  // namespace

SimDesign SimulationBlock::design(double prediction_level) const {
  SimDesign d;
  if (truth == "table1") {
    d = table1_design();
  } else if (truth == "table2") {
    d = table2_design();
  } else if (truth == "custom") {
    d = table1_design();
    if (levels) d.levels = *levels;
    const ModelSpec spec = d.model();
    if (static_cast<int>(coefficients.size()) != spec.dim()) {
      config_fail("simulation.coefficients needs " + std::to_string(spec.dim()) + " values");
    }
    d.truth = ParamVector(spec, Eigen::Map<const Eigen::VectorXd>(coefficients.data(), spec.dim()));
  } else {
    config_fail("simulation.truth must be table1, table2 or custom");
  }
  if (levels) {
    if (*levels < 3) config_fail("simulation.levels must be at least 3");
    d.levels = *levels;
  }
  if (n < 1) config_fail("simulation.n must be positive");
  if (replications < 2) config_fail("simulation.replications must be at least 2");
  d.n = n;
  d.replications = replications;
  d.seed = seed;
  if (generator == "idbr") d.generator = Generator::Idbr;
  else if (generator == "rounded-linear") d.generator = Generator::RoundedLinear;
  else config_fail("simulation.generator must be idbr or rounded-linear");
  d.prediction_level = prediction_level;
  return d;
}

ModelSpec RunConfig::model() const {
  if (!scale) config_fail("scale block is required");
  ModelSpec spec{scale->spec(), inflation, location, dispersion};
  spec.validate();
  return spec;
}

RunConfig parse_config(const Json& doc) {
  check_keys(doc, "config", {"command", "data", "response", "scale", "inflation", "location", "dispersion", "dummies",
                             "sampler", "standardize", "output", "model", "simulation"});
  RunConfig c;
  c.command = get_or<std::string>(doc, "command", "", "config");
  c.data_path = get_or<std::string>(doc, "data", "", "config");
  c.response = get_or<std::string>(doc, "response", "", "config");
  if (doc.contains("scale")) {
    const Json& s = doc.at("scale");
    check_keys(s, "scale", {"a", "b", "h_star", "inflated_level", "labels"});
    if (!s.contains("a") || !s.contains("b")) config_fail("scale needs a and b");
    ScaleBlock block;
    block.a = get_or<double>(s, "a", 0.0, "scale");
    block.b = get_or<double>(s, "b", 0.0, "scale");
    block.h_star = get_or<double>(s, "h_star", 1.0, "scale");
    if (s.contains("inflated_level") && !s.at("inflated_level").is_null()) {
      block.inflated_level = get_or<double>(s, "inflated_level", 0.0, "scale");
    }
    block.labels = get_or<std::vector<std::string>>(s, "labels", {}, "scale");
    block.spec();  // validates support, labels and the inflated level
    c.scale = block;
  }
  c.inflation = parse_submodel(doc, "inflation");
  c.location = parse_submodel(doc, "location");
  c.dispersion = parse_submodel(doc, "dispersion");
  c.dummies = get_or<std::vector<std::string>>(doc, "dummies", {}, "config");
  if (doc.contains("sampler")) {
    const Json& s = doc.at("sampler");
    check_keys(s, "sampler", {"seed", "burn_in", "keep", "chains", "hpd_level", "target_accept", "adapt_window",
                              "initial_scale", "parallel"});
    SamplerConfig& sc = c.sampler;
    sc.seed = get_or<std::uint64_t>(s, "seed", sc.seed, "sampler");
    sc.burn_in = get_or<int>(s, "burn_in", sc.burn_in, "sampler");
    sc.keep = get_or<int>(s, "keep", sc.keep, "sampler");
    sc.n_chains = get_or<int>(s, "chains", sc.n_chains, "sampler");
    sc.hpd_level = get_or<double>(s, "hpd_level", sc.hpd_level, "sampler");
    sc.target_accept = get_or<double>(s, "target_accept", sc.target_accept, "sampler");
    sc.adapt_window = get_or<int>(s, "adapt_window", sc.adapt_window, "sampler");
    sc.initial_scale = get_or<double>(s, "initial_scale", sc.initial_scale, "sampler");
    sc.parallel = get_or<bool>(s, "parallel", sc.parallel, "sampler");
  }
  c.standardize = get_or<bool>(doc, "standardize", false, "config");
  c.output_path = get_or<std::string>(doc, "output", "", "config");
  c.model_path = get_or<std::string>(doc, "model", "", "config");
  if (doc.contains("simulation")) {
    const Json& s = doc.at("simulation");
    check_keys(s, "simulation", {"truth", "coefficients", "levels", "n", "replications", "seed", "generator"});
    SimulationBlock& b = c.simulation;
    b.truth = get_or<std::string>(s, "truth", b.truth, "simulation");
    b.coefficients = get_or<std::vector<double>>(s, "coefficients", {}, "simulation");
    if (s.contains("levels") && !s.at("levels").is_null()) b.levels = get_or<int>(s, "levels", 0, "simulation");
    b.n = get_or<long>(s, "n", b.n, "simulation");
    b.replications = get_or<int>(s, "replications", b.replications, "simulation");
    b.seed = get_or<std::uint64_t>(s, "seed", b.seed, "simulation");
    b.generator = get_or<std::string>(s, "generator", b.generator, "simulation");
  }
  try {
    c.sampler.validate();
  } catch (const std::exception& e) {
    config_fail(e.what());
  }
  return c;
}

RunConfig load_config(const std::string& path) { return parse_config(read_json_file(path, "config")); }

Json to_json(const RunConfig& c) {
  Json doc;
  doc["command"] = c.command;
  doc["data"] = c.data_path;
  doc["response"] = c.response;
  if (c.scale) {
    Json s{{"a", c.scale->a}, {"b", c.scale->b}, {"h_star", c.scale->h_star}};
    s["inflated_level"] = c.scale->inflated_level ? Json(*c.scale->inflated_level) : Json(nullptr);
    s["labels"] = c.scale->labels;
    doc["scale"] = s;
  }
  doc["inflation"] = submodel_json(c.inflation);
  doc["location"] = submodel_json(c.location);
  doc["dispersion"] = submodel_json(c.dispersion);
  doc["dummies"] = c.dummies;
  const SamplerConfig& sc = c.sampler;
  doc["sampler"] = Json{{"seed", sc.seed},
                        {"burn_in", sc.burn_in},
                        {"keep", sc.keep},
                        {"chains", sc.n_chains},
                        {"hpd_level", sc.hpd_level},
                        {"target_accept", sc.target_accept},
                        {"adapt_window", sc.adapt_window},
                        {"initial_scale", sc.initial_scale},
                        {"parallel", sc.parallel}};
  doc["standardize"] = c.standardize;
  doc["output"] = c.output_path;
  doc["model"] = c.model_path;
  const SimulationBlock& b = c.simulation;
  doc["simulation"] = Json{{"truth", b.truth},
                           {"coefficients", b.coefficients},
                           {"levels", b.levels ? Json(*b.levels) : Json(nullptr)},
                           {"n", b.n},
                           {"replications", b.replications},
                           {"seed", b.seed},
                           {"generator", b.generator}};
  return doc;
}

void apply_overrides(RunConfig& config, const Overrides& o) {
  RunConfig next = config;
  if (o.seed) next.sampler.seed = *o.seed;
  if (o.chains) next.sampler.n_chains = *o.chains;
  if (o.burn_in) next.sampler.burn_in = *o.burn_in;
  if (o.keep) next.sampler.keep = *o.keep;
  if (o.hpd_level) next.sampler.hpd_level = *o.hpd_level;
  if (o.replications) next.simulation.replications = *o.replications;
  if (o.out) next.output_path = *o.out;
  try {
    next.sampler.validate();
  } catch (const std::exception& e) {
    throw ValidationError(std::string("flags: ") + e.what());
  }
  config = std::move(next);
}

void Standardization::apply(Eigen::MatrixXd& covariates, const std::vector<std::string>& names) const {
  for (std::size_t j = 0; j < names.size(); ++j) {
    auto it = columns.find(names[j]);
    if (it == columns.end()) continue;
    const auto [mean, sd] = it->second;
    covariates.col(static_cast<Eigen::Index>(j)).array() -= mean;
    covariates.col(static_cast<Eigen::Index>(j)).array() /= sd;
  }
}

Json Standardization::to_json() const {
  Json out = Json::object();
  for (const auto& [name, ms] : columns) out[name] = Json{{"mean", ms.first}, {"sd", ms.second}};
  return out;
}

Standardization Standardization::from_json(const Json& doc) {
  Standardization s;
  if (doc.is_null()) return s;
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    s.columns[it.key()] = {it.value().at("mean").get<double>(), it.value().at("sd").get<double>()};
  }
  return s;
}

Ingested ingest_csv(const std::string& path, const RunConfig& config, bool response_required,
                    const Standardization* fixed) {
  if (!config.scale) config_fail("scale block is required");
  const ScaleSpec scale = config.scale->spec();
  const bool inflated = scale.inflated_k().has_value();
  const std::vector<std::string> used = used_columns(config, inflated);
  for (const auto& d : config.dummies) {
    if (std::find(used.begin(), used.end(), d) == used.end()) {
      config_fail("dummy column '" + d + "' is not used by any submodel");
    }
  }
  if (config.response.empty()) config_fail("response column is not named");

  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open data file '" + path + "'");
  std::string line;
  std::vector<std::string> header;
  while (header.empty() && std::getline(in, line)) {
    if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (trim(line).empty()) continue;
    header = split_csv_line(line, 0);
  }
  if (header.empty()) throw ValidationError("csv: '" + path + "' has no header row");
  std::set<std::string> seen;
  for (const auto& name : header) {
    if (!seen.insert(name).second) throw ValidationError("csv: duplicate column '" + name + "'");
  }
  auto find_col = [&header](const std::string& name) -> int {
    auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : static_cast<int>(std::distance(header.begin(), it));
  };
  std::vector<int> cols;
  for (const auto& name : used) {
    const int idx = find_col(name);
    if (idx < 0) throw ValidationError("csv: column '" + name + "' used by the model is missing from '" + path + "'");
    cols.push_back(idx);
  }
  const int response_col = find_col(config.response);
  if (response_col < 0 && response_required) {
    throw ValidationError("csv: response column '" + config.response + "' is missing from '" + path + "'");
  }
  std::vector<bool> is_dummy(used.size(), false);
  for (std::size_t j = 0; j < used.size(); ++j) {
    is_dummy[j] = std::find(config.dummies.begin(), config.dummies.end(), used[j]) != config.dummies.end();
  }

  std::vector<double> ys;
  std::vector<std::vector<double>> xs;
  Ingested out{Dataset{}, scale, 0, {}, {}, {}};
  long row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    const auto fields = split_csv_line(line, row);
    if (fields.size() != header.size()) {
      throw ValidationError("csv: row " + std::to_string(row) + " has " + std::to_string(fields.size()) +
                            " fields, header has " + std::to_string(header.size()));
    }
    bool missing = false;
    for (int idx : cols) missing = missing || is_missing(fields[static_cast<std::size_t>(idx)]);
    const bool response_missing = response_col < 0 || is_missing(fields[static_cast<std::size_t>(response_col)]);
    if (missing || (response_required && response_missing)) {
      ++out.dropped;
      continue;
    }
    std::vector<double> x(used.size());
    for (std::size_t j = 0; j < used.size(); ++j) {
      const std::string& tok = fields[static_cast<std::size_t>(cols[j])];
      const auto v = parse_number(tok);
      if (!v) {
        throw ValidationError("csv: row " + std::to_string(row) + ", column '" + used[j] + "': '" + tok +
                              "' is not a number");
      }
      if (is_dummy[j] && *v != 0.0 && *v != 1.0) {
        throw ValidationError("csv: row " + std::to_string(row) + ", dummy column '" + used[j] + "' must be 0 or 1");
      }
      x[j] = *v;
    }
    double y = std::numeric_limits<double>::quiet_NaN();
    if (!response_missing) {
      const std::string& tok = fields[static_cast<std::size_t>(response_col)];
      if (const auto v = parse_number(tok)) {
        y = to_reduced(*v, scale, row);
      } else {
        const auto& labels = scale.labels();
        auto it = std::find(labels.begin(), labels.end(), tok);
        if (it == labels.end()) {
          throw ValidationError("csv: row " + std::to_string(row) + ": response '" + tok +
                                "' is neither a number nor a declared label");
        }
        y = scale.point(static_cast<int>(std::distance(labels.begin(), it)) + 1);
      }
    }
    ys.push_back(y);
    xs.push_back(std::move(x));
    out.rows.push_back(row);
    out.has_response.push_back(!response_missing);
  }
  if (ys.empty()) throw ValidationError("csv: no usable rows in '" + path + "'");

  const long n = static_cast<long>(ys.size());
  out.data.y = Eigen::Map<Eigen::VectorXd>(ys.data(), n);
  out.data.columns = used;
  out.data.covariates.resize(n, static_cast<Eigen::Index>(used.size()));
  for (long i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < used.size(); ++j) out.data.covariates(i, static_cast<Eigen::Index>(j)) = xs[i][j];
  }
  if (fixed) {
    out.standardization = *fixed;
  } else if (config.standardize) {
    for (std::size_t j = 0; j < used.size(); ++j) {
      if (is_dummy[j]) continue;
      const auto col = out.data.covariates.col(static_cast<Eigen::Index>(j));
      const double mean = col.mean();
      const double sd = n > 1 ? std::sqrt((col.array() - mean).square().sum() / static_cast<double>(n - 1)) : 0.0;
      if (!(sd > 0.0)) throw ValidationError("cannot standardize constant column '" + used[j] + "'");
      out.standardization.columns[used[j]] = {mean, sd};
    }
  }
  out.standardization.apply(out.data.covariates, out.data.columns);
  return out;
}

Json fit_command(const RunConfig& config) {
  if (config.data_path.empty()) config_fail("data path is required for fit");
  const ModelSpec spec = config.model();
  const Ingested ing = ingest_csv(config.data_path, config);
  const PosteriorSample post = fit(ing.data, spec, config.sampler);
  const ScaleSpec& scale = spec.scale;

  Json params = Json::array();
  for (int j = 0; j < post.dim(); ++j) {
    const auto [submodel, term] = split_name(post.names[static_cast<std::size_t>(j)]);
    params.push_back(Json{{"name", post.names[static_cast<std::size_t>(j)]},
                          {"submodel", submodel},
                          {"term", term},
                          {"estimate", post.medians[j]},
                          {"hpd_low", post.hpd(j, 0)},
                          {"hpd_high", post.hpd(j, 1)},
                          {"p", post.sign_p[j]},
                          {"rhat", finite_or_null(post.gelman[j])},
                          {"acceptance", post.acceptance[j]},
                          {"ess", post.effective_sizes[j]}});
  }

  Json levels = Json::array();
  for (int k = 1; k <= scale.levels(); ++k) levels.push_back(level_json(scale, k));
  Json metadata;
  metadata["seed"] = config.sampler.seed;
  metadata["n"] = ing.data.n();
  metadata["dropped"] = ing.dropped;
  metadata["chains"] = config.sampler.n_chains;
  metadata["burn_in"] = config.sampler.burn_in;
  metadata["keep"] = config.sampler.keep;
  metadata["hpd_level"] = post.hpd_level;
  metadata["levels"] = scale.levels();
  metadata["inflated_level"] = scale.inflated_k() ? level_json(scale, *scale.inflated_k()) : Json(nullptr);
  metadata["converged"] = (post.gelman.array() <= 1.1).all();
  metadata["warnings"] = post.warnings;

  Json chains = Json::array();
  for (const auto& block : post.draws) {
    Json rows = Json::array();
    for (Eigen::Index r = 0; r < block.rows(); ++r) {
      Json draw = Json::array();
      for (Eigen::Index j = 0; j < block.cols(); ++j) draw.push_back(block(r, j));
      rows.push_back(std::move(draw));
    }
    chains.push_back(std::move(rows));
  }

  Json doc;
  doc["kind"] = "idbr-fit";
  doc["metadata"] = metadata;
  doc["parameters"] = params;
  doc["scale"] = levels;
  doc["standardization"] = ing.standardization.to_json();
  doc["config"] = to_json(config);
  doc["draws"] = chains;
  return doc;
}

Json predict_command(const RunConfig& config) {
  if (config.model_path.empty()) config_fail("model path is required for predict");
  if (config.data_path.empty()) config_fail("data path is required for predict");
  const Json model = read_json_file(config.model_path, "fitted model");
  if (!model.is_object() || model.value("kind", "") != "idbr-fit") {
    throw ValidationError("'" + config.model_path + "' is not a fitted model document");
  }
  RunConfig trained = parse_config(model.at("config"));
  const ModelSpec spec = trained.model();
  const auto names = spec.parameter_names();
  const Eigen::MatrixXd draws = pooled_draws(model.at("draws"), spec.dim());
  const Standardization st = Standardization::from_json(model.at("standardization"));

  trained.data_path = config.data_path;
  const Ingested ing = ingest_csv(config.data_path, trained, false, &st);
  const Design design = build_design(ing.data.covariates, ing.data.columns, spec);
  const ScaleSpec& scale = spec.scale;
  const double level = config.sampler.hpd_level;
  const RngState rng(config.sampler.seed, kPredictStream);
  const auto dists = predictive_distributions(draws, spec, design, rng, level);
  const double h = scale.h();

  Json rows = Json::array();
  for (std::size_t i = 0; i < dists.size(); ++i) {
    const PredictiveDistribution& d = dists[i];
    Json mass = Json::array();
    for (int k = 1; k <= d.levels(); ++k) {
      Json cell = level_json(scale, k);
      cell["probability"] = d.mass[k - 1];
      mass.push_back(std::move(cell));
    }
    Json values = Json::array();
    Json labels = Json::array();
    for (int k : d.region.points()) {
      values.push_back(scale.original(k));
      labels.push_back(scale.label(k));
    }
    Json region;
    region["values"] = values;
    region["labels"] = labels;
    region["coverage"] = d.region.coverage;
    region["disjoint"] = d.region.disjoint;
    region["length"] = region_length(d.region, d.levels()) / (1.0 - h);
    Json entry;
    entry["row"] = ing.rows[i];
    entry["mass"] = mass;
    entry["mode"] = level_json(scale, d.mode);
    entry["region"] = region;
    entry["pi_hat"] = d.pi_hat;
    if (ing.has_response[i]) entry["observed"] = level_json(scale, grid_index(ing.data.y[static_cast<Eigen::Index>(i)], scale));
    rows.push_back(std::move(entry));
  }

  Json doc;
  doc["kind"] = "idbr-predict";
  doc["metadata"] = Json{{"model", config.model_path},
                         {"data", config.data_path},
                         {"seed", config.sampler.seed},
                         {"hpd_level", level},
                         {"n", ing.data.n()},
                         {"dropped", ing.dropped},
                         {"posterior_draws", draws.rows()}};
  doc["rows"] = rows;
  return doc;
}

Json report_to_json(const MetricsReport& report, const std::vector<std::string>& names) {
  Json params = Json::array();
  for (const auto& p : report.parameters) {
    params.push_back(Json{{"name", p.name},
                          {"truth", p.truth},
                          {"bias", p.bias},
                          {"emp_sd", p.emp_sd},
                          {"rmse", p.rmse},
                          {"hpd_coverage", p.hpd_coverage},
                          {"hpd_length", p.hpd_length}});
  }
  Json records = Json::array();
  for (const auto& rec : report.records) {
    Json r;
    r["index"] = rec.index;
    r["fitted"] = rec.fitted;
    r["error"] = rec.error;
    r["predicted_from"] = rec.predicted_from;
    if (rec.fitted) {
      r["medians"] = vector_json(rec.medians);
      Json hpd = Json::array();
      for (Eigen::Index j = 0; j < rec.hpd.rows(); ++j) hpd.push_back(Json::array({rec.hpd(j, 0), rec.hpd(j, 1)}));
      r["hpd"] = hpd;
      r["rhat"] = vector_json(rec.gelman);
      r["acceptance"] = vector_json(rec.acceptance);
    }
    if (rec.predicted_from >= 0) r["prediction"] = prediction_json(rec.prediction);
    records.push_back(std::move(r));
  }
  Json doc;
  doc["kind"] = "idbr-simulate";
  doc["levels"] = report.levels;
  doc["n"] = report.n;
  doc["generator"] = report.generator;
  doc["replications"] = report.replications;
  doc["failed"] = report.failed;
  doc["seed"] = report.seed;
  doc["sampler_seed"] = report.sampler_seed;
  doc["parameter_names"] = names;
  doc["parameters"] = params;
  doc["prediction"] = prediction_json(report.prediction);
  doc["records"] = records;
  return doc;
}

Json simulate_command(const RunConfig& config) {
  const SimDesign design = config.simulation.design(config.sampler.hpd_level);
  const MetricsReport report = run_study(design, config.sampler);
  return report_to_json(report, design.model().parameter_names());
}

void write_document(const Json& doc, const std::string& path) {
  const std::string text = doc.dump(2) + "\n";
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  out << text;
  if (!out) throw ValidationError("failed writing '" + path + "'");
}

}  // namespace idbr::cli
