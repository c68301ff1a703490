#include "mgcrnn/eval/experiment.hpp"

#include <fstream>
#include <map>

#include "mgcrnn/core/csv.hpp"
#include "mgcrnn/core/errors.hpp"
#include "mgcrnn/core/layout.hpp"
#include "mgcrnn/core/log.hpp"

namespace mgcrnn {

Dataset load_dataset(const DatasetPaths& paths) {
  for (const auto* p : {&paths.stations, &paths.edges, &paths.poi, &paths.structure, &paths.operational, &paths.flows})
    if (!std::filesystem::exists(*p)) throw DataError("missing input file '" + p->string() + "'");
  Dataset d;
  d.network = graph::read_network(paths.stations, paths.edges);
  d.poi = graph::read_features(paths.poi, d.network);
  d.structure = graph::read_features(paths.structure, d.network);
  d.operational = graph::read_features(paths.operational, d.network);
  d.flows = read_flows(paths.flows, d.network.ids());
  if (!paths.holidays.empty() && std::filesystem::exists(paths.holidays)) d.holidays = read_holidays(paths.holidays);
  return d;
}

Dataset to_dataset(const SyntheticDataset& s) {
  return Dataset{s.network, s.poi, s.structure, s.operational, s.flows, s.holidays};
}

graph::RecentFlowRange recent_flow_range(const Preprocessed& data) {
  if (data.rows() == 0) throw ContractError("recent_flow_range: no preprocessed rows");
  return {data.rolled_slot(0), data.rolled_slot(data.rows() - 1)};
}

Prepared prepare(const Dataset& dataset, const PrepareOptions& options, const graph::GraphSet* graphs) {
  const auto days = dataset.flows.days();
  if (days.size() < 2) throw DataError("prepare: need at least two days of flows");
  const Date split = options.split_date.value_or(days.back());
  Prepared out;
  out.input_len = options.input_len;
  out.horizon = options.horizon;
  out.data = forward_pipeline(dataset.flows, dataset.holidays, split, options.pipeline);
  out.windows = make_windows(out.data, options.input_len, options.horizon);
  if (out.windows.train.empty() || out.windows.test.empty())
    throw DataError("prepare: split " + format_date(split) + " leaves " + std::to_string(out.windows.train.size()) +
                    " training and " + std::to_string(out.windows.test.size()) + " test windows");
  if (graphs != nullptr) {
    out.graphs = *graphs;
    out.graphs.validate();
    if (out.graphs.station_ids != dataset.network.ids())
      throw DataError("prepare: graph set stations do not match the network");
  } else {
    out.graphs = graph::build_graph_set(dataset.network, dataset.poi, dataset.structure, dataset.operational,
                                        out.data.rolled.values, recent_flow_range(out.data), options.graphs);
  }
  return out;
}

Forecasts test_truth(const Prepared& prepared) {
  const auto& test = prepared.windows.test;
  const std::size_t p = prepared.horizon;
  Forecasts f;
  f.horizon = p;
  f.truth = Matrix(test.size() * p, prepared.data.rolled.values.cols());
  for (std::size_t w = 0; w < test.size(); ++w) {
    f.anchors.push_back(test[w].anchor);
    for (std::size_t k = 0; k < p; ++k) {
      const std::size_t slot = prepared.data.rolled_slot(test[w].target_row(k));
      f.target_slots.push_back(slot);
      const auto src = prepared.data.rolled.values.row(slot);
      std::copy(src.begin(), src.end(), f.truth.row(w * p + k).begin());
    }
  }
  return f;
}

Forecasts from_scaled(const Prepared& prepared, const Matrix& scaled) {
  Forecasts f = test_truth(prepared);
  if (scaled.rows() != f.truth.rows() || scaled.cols() != f.truth.cols())
    throw DimensionError("from_scaled: forecasts " + scaled.shape_string() + " for truth " + f.truth.shape_string());
  std::vector<std::size_t> rows;
  for (std::size_t slot : f.target_slots) rows.push_back(slot - prepared.data.offset);
  f.predicted = inverse_pipeline(scaled, rows, prepared.data);
  return f;
}

Forecasts model_forecasts(MgcRnn& model, const Prepared& prepared, const GraphCache& graphs) {
  return from_scaled(prepared, predict_windows(model, prepared.windows.test, graphs));
}

Forecasts ha_forecasts(const Prepared& prepared) {
  Forecasts f = test_truth(prepared);
  f.predicted = Matrix(f.truth.rows(), f.truth.cols());
  for (std::size_t r = 0; r < f.target_slots.size(); ++r) {
    const Matrix row = ha_forecast(prepared.data.rolled.values, f.target_slots[r], kRolledSlotsPerDay);
    std::copy(row.values().begin(), row.values().end(), f.predicted.row(r).begin());
  }
  return f;
}

Forecasts lasso_forecasts(const LassoModel& model, const Prepared& prepared) {
  const auto& test = prepared.windows.test;
  const std::size_t p = prepared.horizon;
  Matrix scaled(test.size() * p, model.outputs());
  for (std::size_t w = 0; w < test.size(); ++w) {
    const Matrix y = lasso_recursive_forecast(model, test[w].inputs, p);
    for (std::size_t k = 0; k < p; ++k) std::copy(y.row(k).begin(), y.row(k).end(), scaled.row(w * p + k).begin());
  }
  return from_scaled(prepared, scaled);
}

void write_forecasts_csv(const Forecasts& f, const Prepared& prepared, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  const auto& rolled = prepared.data.rolled;
  out << "window,date,slot_index,station_id,step,inflow,outflow,inflow_pred,outflow_pred\n";
  for (std::size_t r = 0; r < f.target_slots.size(); ++r) {
    const SlotStamp& stamp = rolled.calendar.at(f.target_slots[r]);
    for (std::size_t i = 0; i < rolled.stations(); ++i) {
      out << r / f.horizon << ',' << format_date(stamp.date) << ',' << stamp.slot << ',' << csv::escape(rolled.station_ids[i])
          << ',' << r % f.horizon + 1 << ',' << csv::format_double(f.truth(r, flow_col(i, kInflow))) << ','
          << csv::format_double(f.truth(r, flow_col(i, kOutflow)));
      if (f.predicted.rows() == f.truth.rows())
        out << ',' << csv::format_double(f.predicted(r, flow_col(i, kInflow))) << ','
            << csv::format_double(f.predicted(r, flow_col(i, kOutflow)));
      else
        out << ",,";
      out << '\n';
    }
  }
}

ModelRun train_and_forecast(const Prepared& prepared, ModelConfig config, TrainOptions train, std::uint64_t seed) {
  config.stations = prepared.graphs.stations();
  config.input_len = prepared.input_len;
  config.horizon = prepared.horizon;
  ModelRun run{MgcRnn(config, seed), {}, {}};
  const GraphCache cache(prepared.graphs, config.mask);
  if (train.seed == 0) train.seed = mix64(seed);
  run.training = train_model(run.model, prepared.windows.train, cache, train);
  run.forecasts = model_forecasts(run.model, prepared, cache);
  return run;
}

std::string AblationSpec::label() const {
  return mask.label() + (exogenous ? "+exo" : "") + (preprocessing ? "" : "-nopre");
}

AblationSpec AblationSpec::parse(std::string_view text) {
  AblationSpec s;
  std::string t(text);
  auto strip = [&t](std::string_view suffix) {
    if (t.size() >= suffix.size() && t.compare(t.size() - suffix.size(), suffix.size(), suffix) == 0) {
      t.erase(t.size() - suffix.size());
      return true;
    }
    return false;
  };
  s.preprocessing = !strip("-nopre");
  s.exogenous = strip("+exo");
  std::string list;
  for (char ch : t) list.push_back(ch == '+' ? ',' : ch);
  s.mask = graph::GraphMask::parse(list);
  return s;
}

std::vector<AblationSpec> default_ablation_specs() {
  auto spec = [](const char* mask, bool exo = false, bool pre = true) {
    return AblationSpec{graph::GraphMask::parse(mask), exo, pre};
  };
  return {spec("1,2,3,4,5"), spec("1,3,4,5"), spec("1,2,3,5"), spec("1,2,3,5", true),
          spec("1,3,5"),     spec("1,3,5", true), spec("1,5"),  spec("1,3,5", false, false)};
}

std::vector<AblationRow> run_ablation(std::span<const AblationSpec> specs, const Dataset& dataset,
                                      const PrepareOptions& prepare_options, const ModelConfig& base,
                                      const TrainOptions& train, std::uint64_t seed, const graph::GraphSet* graphs) {
  std::map<bool, Prepared> prepared;
  auto prepared_for = [&](bool preprocessing) -> const Prepared& {
    auto it = prepared.find(preprocessing);
    if (it != prepared.end()) return it->second;
    PrepareOptions opt = prepare_options;
    opt.pipeline.log = opt.pipeline.difference = preprocessing;
    // The graph inputs do not depend on preprocessing; build them once.
    const graph::GraphSet* shared = graphs != nullptr ? graphs : (prepared.empty() ? nullptr : &prepared.begin()->second.graphs);
    return prepared.emplace(preprocessing, prepare(dataset, opt, shared)).first->second;
  };
  std::vector<AblationRow> rows;
  for (const auto& spec : specs) {
    if (spec.mask.empty()) throw ConfigError("ablation spec with an empty graph mask");
    const Prepared& data = prepared_for(spec.preprocessing);
    ModelConfig config = base;
    config.mask = spec.mask;
    config.exogenous = spec.exogenous;
    spdlog::info("ablation: training {}", spec.label());
    const ModelRun run = train_and_forecast(data, config, train, seed);
    AblationRow row;
    row.spec = spec;
    row.overall = overall_report(run.forecasts.predicted, run.forecasts.truth);
    row.steps = per_step_report(run.forecasts.predicted, run.forecasts.truth, run.forecasts.horizon);
    spdlog::info("ablation: {} rmse {:.4f} mae {:.4f} smape {:.4f}", spec.label(), row.overall.rmse, row.overall.mae,
                 row.overall.smape);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<ReportRow> ablation_report(std::span<const AblationRow> rows) {
  std::vector<ReportRow> out;
  for (const auto& r : rows) {
    out.push_back({r.spec.label(), r.overall});
    for (const auto& s : r.steps) out.push_back({r.spec.label(), s});
  }
  return out;
}

}  // namespace mgcrnn
