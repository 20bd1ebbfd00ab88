#include <CLI11.hpp>

#include <iostream>

#include "idbr/cli.hpp"

namespace {

struct Options {
  std::string config;
  idbr::cli::Overrides overrides;
};

void add_flags(CLI::App* cmd, Options& opt) {
  cmd->add_option("--config", opt.config, "Configuration file (JSON)")->required();
  cmd->add_option("--seed", opt.overrides.seed, "Sampler seed (also seeds prediction draws)");
  cmd->add_option("--chains", opt.overrides.chains, "Number of chains");
  cmd->add_option("--burn-in", opt.overrides.burn_in, "Burn-in iterations per chain");
  cmd->add_option("--keep", opt.overrides.keep, "Retained iterations per chain");
  cmd->add_option("--hpd-level", opt.overrides.hpd_level, "HPD level for intervals and prediction regions");
  cmd->add_option("--replications", opt.overrides.replications, "Simulation replications");
  cmd->add_option("--out", opt.overrides.out, "Output path (stdout when absent or '-')");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Inflated discrete beta regression for bounded ordinal responses"};
  app.require_subcommand(1);
  Options opt;
  CLI::App* fit = app.add_subcommand("fit", "Fit the model to a CSV file");
  CLI::App* predict = app.add_subcommand("predict", "Predict new rows from a fitted model");
  CLI::App* simulate = app.add_subcommand("simulate", "Run a simulation study");
  for (CLI::App* cmd : {fit, predict, simulate}) add_flags(cmd, opt);
  CLI11_PARSE(app, argc, argv);

  try {
    idbr::cli::RunConfig config = idbr::cli::load_config(opt.config);
    idbr::cli::apply_overrides(config, opt.overrides);
    idbr::cli::Json doc;
    if (fit->parsed()) {
      config.command = "fit";
      doc = idbr::cli::fit_command(config);
    } else if (predict->parsed()) {
      config.command = "predict";
      doc = idbr::cli::predict_command(config);
    } else {
      config.command = "simulate";
      doc = idbr::cli::simulate_command(config);
    }
    idbr::cli::write_document(doc, config.output_path);
  } catch (const idbr::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
