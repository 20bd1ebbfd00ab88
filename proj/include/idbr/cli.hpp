#pragma once

#include <json.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "idbr/model.hpp"
#include "idbr/sampler.hpp"
#include "idbr/scale.hpp"
#include "idbr/simulate.hpp"

namespace idbr::cli {

using Json = nlohmann::ordered_json;

struct ScaleBlock {
  double a = 0.0;
  double b = 0.0;
  double h_star = 1.0;
  std::optional<double> inflated_level;  // original support
  std::vector<std::string> labels;

  ScaleSpec spec() const { return ScaleSpec(a, b, h_star, inflated_level, labels); }
};

struct SimulationBlock {
  std::string truth = "table1";  // "table1", "table2" or "custom"
  std::vector<double> coefficients;  // used when truth is "custom"
  std::optional<int> levels;  // defaults to the truth's setting
  long n = 900;
  int replications = 50;
  std::uint64_t seed = 20150101;
  std::string generator = "idbr";  // or "rounded-linear"

  SimDesign design(double prediction_level) const;
};

struct RunConfig {
  std::string command;
  std::string data_path;
  std::string response;
  std::optional<ScaleBlock> scale;
  Submodel inflation;
  Submodel location;
  Submodel dispersion;
  std::vector<std::string> dummies;
  SamplerConfig sampler;
  bool standardize = false;
  std::string output_path;
  std::string model_path;
  SimulationBlock simulation;

  ModelSpec model() const;
};

/// Command-line values that take precedence over the config file.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> chains;
  std::optional<int> burn_in;
  std::optional<int> keep;
  std::optional<double> hpd_level;
  std::optional<int> replications;
  std::optional<std::string> out;
};

/// Throws ValidationError on unknown keys, wrong types or out-of-range values.
RunConfig parse_config(const Json& doc);
RunConfig load_config(const std::string& path);
Json to_json(const RunConfig& config);
void apply_overrides(RunConfig& config, const Overrides& overrides);

/// Per-column mean and sd applied to non-dummy covariates.
struct Standardization {
  std::map<std::string, std::pair<double, double>> columns;

  void apply(Eigen::MatrixXd& covariates, const std::vector<std::string>& names) const;
  Json to_json() const;
  static Standardization from_json(const Json& doc);
};

struct Ingested {
  Dataset data;
  ScaleSpec scale;
  long dropped = 0;
  std::vector<long> rows;  // 1-based data line of every kept row
  std::vector<bool> has_response;  // only false when the response is optional
  Standardization standardization;
};

/**
 * Reads a comma-separated file with a header row. Rows with a missing value
 * in any used column are dropped and counted. Responses are validated against
 * the declared support (numbers, or labels in declared order) and rescaled to
 * the reduced grid. With `fixed`, covariates are standardized with the given
 * parameters instead of estimated ones. When `response_required` is false,
 * rows may omit the response and the column itself may be absent.
 */
Ingested ingest_csv(const std::string& path, const RunConfig& config, bool response_required = true,
                    const Standardization* fixed = nullptr);

Json fit_command(const RunConfig& config);
Json predict_command(const RunConfig& config);
Json simulate_command(const RunConfig& config);

/// Stream that seeds predict_command's draws, shared with in-sample checks.
inline constexpr std::uint64_t kPredictStream = 0x70726564ULL;

Json report_to_json(const MetricsReport& report, const std::vector<std::string>& names);

/// Pretty-printed document followed by a newline; "-" or empty writes to stdout.
void write_document(const Json& doc, const std::string& path);

}  // namespace idbr::cli
