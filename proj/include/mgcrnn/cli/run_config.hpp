#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mgcrnn/data/calendar.hpp"
#include "mgcrnn/data/synthetic.hpp"
#include "mgcrnn/eval/experiment.hpp"
#include "mgcrnn/graph/graph_set.hpp"
#include "mgcrnn/model/seq_model.hpp"
#include "mgcrnn/model/trainer.hpp"

namespace mgcrnn::cli {

/// Every knob of a run. The config file is flat `key = value` lines with `#`
/// comments; keys match the field names below.
struct RunConfig {
  // paths; empty file paths default to data_dir/<standard name>
  std::filesystem::path data_dir = "data";
  std::filesystem::path stations, edges, poi, structure, operational, flows, holidays;
  std::filesystem::path afc;  // transaction log for `ingest`
  std::filesystem::path output_dir = "out";

  // model and training
  std::size_t input_len = 16;
  std::size_t horizon = 4;
  std::size_t gcn_units = 64;
  std::size_t gcn_depth = 1;
  std::size_t lstm_units = 200;
  std::size_t embed_dim = 8;
  std::size_t batch_size = 16;
  std::size_t epochs = 50;
  double lr0 = 0.002;
  double decay = 0.002;
  double dropout = 0.2;
  double recurrent_dropout = 0.2;
  double huber_delta = 1.0;
  graph::GraphMask graph_mask = graph::GraphMask::all();
  bool exogenous = false;
  bool preprocessing = true;

  // graphs
  double rho1 = 0.1;
  double rho2 = 0.01;
  unsigned graph_threads = 1;

  // data split and seeds
  std::optional<Date> split_date;  // first test day; default the last day
  std::uint64_t seed = 7;

  // baselines and experiments
  double lasso_lambda = 1e-4;
  std::vector<AblationSpec> ablation_specs = default_ablation_specs();
  /// "YYYY-MM-DD HH:MM" stamps whose recent-flow graph export-weights writes;
  /// default: 08:00 and 18:00 of the split day.
  std::vector<std::string> export_slots;

  // synthetic generator
  std::size_t synth_stations = 12;
  std::size_t synth_days = 14;
  Date synth_start = parse_date("2013-09-12");

  /// Parses one `key = value` assignment; throws ConfigError naming the key.
  void set(std::string_view key, std::string_view value);
  /// Throws ConfigError when a hyperparameter is out of range.
  void validate() const;
  /// Every key with its effective value, one per line, in fixed order.
  [[nodiscard]] std::string to_text() const;

  [[nodiscard]] DatasetPaths dataset_paths() const;
  [[nodiscard]] std::filesystem::path graphs_path() const { return output_dir / "graphs.json"; }
  [[nodiscard]] std::filesystem::path checkpoint_path() const { return output_dir / "model.ckpt.json"; }
  [[nodiscard]] ModelConfig model_config(std::size_t stations) const;
  [[nodiscard]] TrainOptions train_options() const;
  [[nodiscard]] PrepareOptions prepare_options() const;
  [[nodiscard]] SyntheticConfig synthetic_config() const;
};

/// Defaults overlaid with the file (if any) and then with `key=value` overrides.
RunConfig load_run_config(const std::optional<std::filesystem::path>& file,
                          const std::vector<std::string>& overrides = {});
RunConfig parse_run_config(std::string_view text, std::string_view source = "config");

}  // namespace mgcrnn::cli
