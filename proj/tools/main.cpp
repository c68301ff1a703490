#include <CLI11.hpp>

#include <optional>
#include <string>
#include <vector>

#include "mgcrnn/cli/commands.hpp"
#include "mgcrnn/core/errors.hpp"
#include "mgcrnn/core/log.hpp"

int main(int argc, char** argv) {
  mgcrnn::configure_logging_from_env();
  CLI::App app{"Multi-graph convolutional seq2seq forecasting of metro station inflow and outflow.\n"
               "Log level: MGCRNN_LOG_LEVEL=trace|debug|info|warn|error|off"};
  app.require_subcommand(1);
  std::string config_file;
  std::vector<std::string> overrides;
  app.add_option("-c,--config", config_file, "flat key = value config file");
  app.add_option("-s,--set", overrides, "override a config key, key=value (repeatable)");

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"synth", "write the synthetic two-line desk dataset to data_dir"},
      {"ingest", "aggregate an AFC transaction log into 15-minute station flows"},
      {"graphs", "build the static and recent-flow graphs into output_dir/graphs.json"},
      {"train", "train the model and write output_dir/model.ckpt.json"},
      {"predict", "forecast every test window into output_dir/predictions.csv"},
      {"evaluate", "compare HA, LASSO and the trained model on the test day"},
      {"ablate", "train one model per ablation spec and tabulate the errors"},
      {"export-weights", "write every adjacency matrix as CSV under output_dir/weights"},
  };
  app.fallthrough();  // lets --config/--set follow the subcommand name
  for (const auto& [name, help] : commands) app.add_subcommand(name, help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  mgcrnn::cli::RunConfig config;
  try {
    config = mgcrnn::cli::load_run_config(
        config_file.empty() ? std::nullopt : std::optional<std::filesystem::path>(config_file), overrides);
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return mgcrnn::cli::exit_code_for(e);
  }
  return mgcrnn::cli::run_command(app.get_subcommands().front()->get_name(), config);
}
