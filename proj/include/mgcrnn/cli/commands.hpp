#pragma once

#include <string_view>

#include "mgcrnn/cli/run_config.hpp"

namespace mgcrnn::cli {

// Each command reads and writes the files named by the config; failures
// surface as the library's exceptions.
void cmd_synth(const RunConfig& config);
void cmd_ingest(const RunConfig& config);
void cmd_graphs(const RunConfig& config);
void cmd_train(const RunConfig& config);
void cmd_predict(const RunConfig& config);
void cmd_evaluate(const RunConfig& config);
void cmd_ablate(const RunConfig& config);
void cmd_export_weights(const RunConfig& config);

/// Exit status for an exception escaping a command: 2 config, 3 data or I/O,
/// 4 numeric, 5 contract or dimension, 1 anything else.
int exit_code_for(const std::exception& e);

/// Runs the named command, logging the error and returning its exit status.
int run_command(std::string_view name, const RunConfig& config);

}  // namespace mgcrnn::cli
