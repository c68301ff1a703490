#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "mgcrnn/data/pipeline.hpp"
#include "mgcrnn/data/synthetic.hpp"
#include "mgcrnn/eval/baselines.hpp"
#include "mgcrnn/eval/metrics.hpp"
#include "mgcrnn/graph/graph_set.hpp"
#include "mgcrnn/model/seq_model.hpp"
#include "mgcrnn/model/trainer.hpp"

namespace mgcrnn {

/// Everything read from a dataset directory.
struct Dataset {
  graph::StationNetwork network;
  graph::FeatureMatrix poi;
  graph::FeatureMatrix structure;
  graph::FeatureMatrix operational;
  SlotSeries flows;  // raw 66-slot days
  std::set<Date> holidays;
};

Dataset load_dataset(const DatasetPaths& paths);
Dataset to_dataset(const SyntheticDataset& synthetic);

struct PrepareOptions {
  std::optional<Date> split_date;  // first test day; default the last day of the flows
  std::size_t input_len = 16;
  std::size_t horizon = 4;
  PipelineOptions pipeline;
  graph::GraphBuildOptions graphs;
};

/// Preprocessed series, windows and the graph set for one dataset.
struct Prepared {
  Preprocessed data;
  WindowSet windows;
  graph::GraphSet graphs;  // recent-flow graphs keyed by rolled slot
  std::size_t input_len = 0;
  std::size_t horizon = 0;
};

/// Recent-flow graphs cover every rolled slot that can appear as a window input.
graph::RecentFlowRange recent_flow_range(const Preprocessed& data);
/// `graphs` skips the graph build (e.g. when loaded from the graphs command).
Prepared prepare(const Dataset& dataset, const PrepareOptions& options,
                 const graph::GraphSet* graphs = nullptr);

/// Test-window forecasts in passengers per rolling hour. Rows are w·p + k.
struct Forecasts {
  std::size_t horizon = 0;
  std::vector<std::size_t> anchors;       // scaled anchor row per window
  std::vector<std::size_t> target_slots;  // rolled slot of every row
  Matrix predicted;
  Matrix truth;
};

/// Passenger-space truth for every test window; predicted left empty.
Forecasts test_truth(const Prepared& prepared);
/// Maps (W·p)×C scaled forecasts of the test windows through inverse_pipeline.
Forecasts from_scaled(const Prepared& prepared, const Matrix& scaled);

Forecasts model_forecasts(MgcRnn& model, const Prepared& prepared, const GraphCache& graphs);
/// HA(63) on the rolled passenger series.
Forecasts ha_forecasts(const Prepared& prepared);
/// Recursive LASSO in scaled space, then inverse_pipeline.
Forecasts lasso_forecasts(const LassoModel& model, const Prepared& prepared);

/// Per-station prediction dump: date,slot_index,station_id,step,channel-wise truth and prediction.
void write_forecasts_csv(const Forecasts& forecasts, const Prepared& prepared, const std::filesystem::path& path);

struct ModelRun {
  MgcRnn model;
  TrainResult training;
  Forecasts forecasts;
};

/// Builds a model for config (stations and horizon taken from prepared),
/// trains it on the training windows and forecasts the test windows.
ModelRun train_and_forecast(const Prepared& prepared, ModelConfig config, TrainOptions train, std::uint64_t seed);

/// One ablation row: graph mask, exogenous inputs, preprocessing on/off.
struct AblationSpec {
  graph::GraphMask mask = graph::GraphMask::all();
  bool exogenous = false;
  bool preprocessing = true;

  /// e.g. "M1+M3+M5", "M1+M3+M5+exo", "M1+M3+M5-nopre".
  [[nodiscard]] std::string label() const;
  /// Inverse of label(); throws ConfigError.
  static AblationSpec parse(std::string_view text);
};

/// Rows 1–7 of the graph-combination table plus {M1,M3,M5} without log and
/// differencing.
std::vector<AblationSpec> default_ablation_specs();

struct AblationRow {
  AblationSpec spec;
  MetricReport overall;
  std::vector<MetricReport> steps;
};

/// One model per spec with identical hyperparameters and seed; only the mask,
/// exogenous flag and preprocessing differ. `graphs` as in prepare().
std::vector<AblationRow> run_ablation(std::span<const AblationSpec> specs, const Dataset& dataset,
                                      const PrepareOptions& prepare_options, const ModelConfig& base,
                                      const TrainOptions& train, std::uint64_t seed,
                                      const graph::GraphSet* graphs = nullptr);

/// Overall and per-step rows for every spec.
std::vector<ReportRow> ablation_report(std::span<const AblationRow> rows);

}  // namespace mgcrnn
