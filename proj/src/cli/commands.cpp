#include "mgcrnn/cli/commands.hpp"

#include <cstdio>
#include <fstream>

#include "mgcrnn/core/errors.hpp"
#include "mgcrnn/core/log.hpp"
#include "mgcrnn/data/afc.hpp"

namespace mgcrnn::cli {

namespace {

void ensure_dir(const std::filesystem::path& dir) {
  if (dir.empty()) return;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create directory '" + dir.string() + "': " + ec.message());
}

void write_effective_config(const RunConfig& c, std::string_view command) {
  ensure_dir(c.output_dir);
  std::ofstream out(c.output_dir / ("config." + std::string(command) + ".txt"));
  out << c.to_text();
}

struct Loaded {
  Dataset dataset;
  Prepared prepared;
};

Loaded load_prepared(const RunConfig& c) {
  Loaded l{load_dataset(c.dataset_paths()), {}};
  if (std::filesystem::exists(c.graphs_path())) {
    const graph::GraphSet graphs = graph::load_graph_set(c.graphs_path());
    l.prepared = prepare(l.dataset, c.prepare_options(), &graphs);
  } else {
    spdlog::warn("{} not found; building graphs in memory", c.graphs_path().string());
    l.prepared = prepare(l.dataset, c.prepare_options());
  }
  spdlog::info("{} training and {} test windows", l.prepared.windows.train.size(), l.prepared.windows.test.size());
  return l;
}

MgcRnn load_model(const RunConfig& c, const Prepared& prepared) {
  if (!std::filesystem::exists(c.checkpoint_path()))
    throw DataError("missing checkpoint '" + c.checkpoint_path().string() + "'; run train first");
  MgcRnn model(c.model_config(prepared.graphs.stations()), c.seed);
  load_checkpoint(model, c.checkpoint_path());
  return model;
}

void append_rows(std::vector<ReportRow>& rows, const std::string& name, const Forecasts& f) {
  rows.push_back({name, overall_report(f.predicted, f.truth)});
  for (const auto& s : per_step_report(f.predicted, f.truth, f.horizon)) rows.push_back({name, s});
}

void print_rows(const std::vector<ReportRow>& rows) {
  std::printf("%-22s %-8s %12s %12s %10s\n", "spec", "step", "rmse", "mae", "smape");
  for (const auto& r : rows)
    std::printf("%-22s %-8s %12.4f %12.4f %10.4f\n", r.spec.c_str(), r.report.scope_label().c_str(), r.report.rmse,
                r.report.mae, r.report.smape);
}

}  // namespace

void cmd_synth(const RunConfig& c) {
  const SyntheticConfig sc = c.synthetic_config();
  const SyntheticDataset data = generate_synthetic(sc);
  const DatasetPaths paths = c.dataset_paths();
  for (const auto* p : {&paths.stations, &paths.edges, &paths.poi, &paths.structure, &paths.operational, &paths.flows,
                        &paths.holidays})
    ensure_dir(p->parent_path());
  write_dataset(data, paths);
  spdlog::info("synthetic dataset: {} stations, {} days, seed {} -> {}", sc.stations, sc.days, sc.seed,
               c.data_dir.string());
}

void cmd_ingest(const RunConfig& c) {
  if (c.afc.empty()) throw ConfigError("ingest needs config key 'afc' (transaction CSV)");
  if (!std::filesystem::exists(c.afc)) throw DataError("missing input file '" + c.afc.string() + "'");
  const DatasetPaths paths = c.dataset_paths();
  const auto net = graph::read_network(paths.stations, paths.edges);
  const AfcResult r = parse_afc(c.afc, net);
  ensure_dir(paths.flows.parent_path());
  write_flows(r.flows, paths.flows);
  ensure_dir(c.output_dir);
  write_rejections(r.rejected, c.output_dir / "rejected.csv");
  spdlog::info("ingest: {} tap-ins, {} tap-outs, {} rejected -> {}", r.accepted_in, r.accepted_out, r.rejected.size(),
               paths.flows.string());
}

void cmd_graphs(const RunConfig& c) {
  write_effective_config(c, "graphs");
  const Dataset d = load_dataset(c.dataset_paths());
  const Prepared p = prepare(d, c.prepare_options());
  graph::save_graph_set(p.graphs, c.graphs_path());
  spdlog::info("graphs: 4 static and {} recent-flow matrices -> {}", p.graphs.recent_flow.size(),
               c.graphs_path().string());
}

void cmd_train(const RunConfig& c) {
  write_effective_config(c, "train");
  const Loaded l = load_prepared(c);
  MgcRnn model(c.model_config(l.prepared.graphs.stations()), c.seed);
  TrainOptions opt = c.train_options();
  opt.log_path = c.output_dir / "train_log.jsonl";
  opt.checkpoint_path = c.output_dir / "model.lastgood.json";
  opt.on_epoch = [](const EpochRecord& r) {
    spdlog::info("epoch {:3d}  loss {:.6f}  lr {:.6f}  {:.1f}s", r.epoch, r.loss, r.lr, r.seconds);
  };
  const GraphCache cache(l.prepared.graphs, model.config().mask);
  const TrainResult result = train_model(model, l.prepared.windows.train, cache, opt);
  save_checkpoint(model, c.checkpoint_path(), &result.adam);
  spdlog::info("train: {} epochs, final loss {:.6f} -> {}", result.epochs.size(), result.epochs.back().loss,
               c.checkpoint_path().string());
}

void cmd_predict(const RunConfig& c) {
  const Loaded l = load_prepared(c);
  MgcRnn model = load_model(c, l.prepared);
  const GraphCache cache(l.prepared.graphs, model.config().mask);
  const Forecasts f = model_forecasts(model, l.prepared, cache);
  ensure_dir(c.output_dir);
  write_forecasts_csv(f, l.prepared, c.output_dir / "predictions.csv");
  spdlog::info("predict: {} windows x {} steps x {} stations -> {}", l.prepared.windows.test.size(), f.horizon,
               l.prepared.graphs.stations(), (c.output_dir / "predictions.csv").string());
}

void cmd_evaluate(const RunConfig& c) {
  const Loaded l = load_prepared(c);
  std::vector<ReportRow> rows;
  append_rows(rows, "HA", ha_forecasts(l.prepared));
  LassoOptions lo;
  lo.lambda = c.lasso_lambda;
  const LassoModel lasso = lasso_fit(l.prepared.windows.train, lo);
  append_rows(rows, "LASSO", lasso_forecasts(lasso, l.prepared));
  if (std::filesystem::exists(c.checkpoint_path())) {
    MgcRnn model = load_model(c, l.prepared);
    const GraphCache cache(l.prepared.graphs, model.config().mask);
    append_rows(rows, "MGC-RNN " + model.config().mask.label(), model_forecasts(model, l.prepared, cache));
  } else {
    spdlog::warn("no checkpoint at {}; evaluating baselines only", c.checkpoint_path().string());
  }
  ensure_dir(c.output_dir);
  write_report_csv(rows, c.output_dir / "evaluation.csv");
  write_report_json(rows, c.output_dir / "evaluation.json");
  print_rows(rows);
}

void cmd_ablate(const RunConfig& c) {
  write_effective_config(c, "ablate");
  const Dataset d = load_dataset(c.dataset_paths());
  std::optional<graph::GraphSet> graphs;
  if (std::filesystem::exists(c.graphs_path())) graphs = graph::load_graph_set(c.graphs_path());
  const auto rows = run_ablation(c.ablation_specs, d, c.prepare_options(), c.model_config(d.network.size()),
                                 c.train_options(), c.seed, graphs ? &*graphs : nullptr);
  const auto report = ablation_report(rows);
  write_report_csv(report, c.output_dir / "ablation.csv");
  write_report_json(report, c.output_dir / "ablation.json");
  print_rows(report);
}

void cmd_export_weights(const RunConfig& c) {
  const Loaded l = load_prepared(c);
  const auto& g = l.prepared.graphs;
  const auto dir = c.output_dir / "weights";
  ensure_dir(dir);
  for (std::size_t k = 0; k < graph::kStaticGraphCount; ++k) {
    const auto name = "M" + std::to_string(k + 1) + "_" + std::string(graph::kind_name(static_cast<graph::GraphKind>(k))) + ".csv";
    graph::write_adjacency_csv(g.static_graphs[k], g.station_ids, dir / name);
  }
  std::vector<std::string> stamps = c.export_slots;
  if (stamps.empty()) {
    const auto& cal = l.prepared.data.rolled.calendar;
    const std::string day = format_date(cal.at(l.prepared.data.rolled_slot(l.prepared.data.split)).date);
    stamps = {day + " 08:00", day + " 18:00"};
  }
  const auto& cal = l.prepared.data.rolled.calendar;
  for (const auto& stamp : stamps) {
    if (stamp.size() != 16 || stamp[10] != ' ' || stamp[13] != ':')
      throw ConfigError("export slot '" + stamp + "' is not 'YYYY-MM-DD HH:MM'");
    const Date date = parse_date(stamp.substr(0, 10));
    const int minutes = std::stoi(stamp.substr(11, 2)) * 60 + std::stoi(stamp.substr(14, 2));
    const auto raw = slot_of_time(minutes * 60);
    if (!raw) throw ConfigError("export slot '" + stamp + "' is outside operating hours");
    std::optional<std::size_t> rolled;
    for (std::size_t t = 0; t < cal.size(); ++t)
      if (cal[t].date == date && cal[t].slot == *raw) rolled = t;
    if (!rolled || !g.has_slot(*rolled))
      throw DataError("no recent-flow graph for '" + stamp + "' (slot not in the preprocessed range)");
    std::string tag = stamp;
    tag[10] = '_';
    tag.erase(13, 1);
    graph::write_adjacency_csv(g.get(graph::GraphKind::recent_flow, *rolled), g.station_ids, dir / ("M5_" + tag + ".csv"));
  }
  spdlog::info("export-weights: {} static and {} recent-flow matrices -> {}", graph::kStaticGraphCount, stamps.size(),
               dir.string());
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return 2;
  if (dynamic_cast<const DataError*>(&e)) return 3;
  if (dynamic_cast<const NumericError*>(&e)) return 4;
  if (dynamic_cast<const ContractError*>(&e) || dynamic_cast<const DimensionError*>(&e)) return 5;
  return 1;
}

int run_command(std::string_view name, const RunConfig& c) {
  static const std::vector<std::pair<std::string_view, void (*)(const RunConfig&)>> table = {
      {"synth", cmd_synth},   {"ingest", cmd_ingest},     {"graphs", cmd_graphs}, {"train", cmd_train},
      {"predict", cmd_predict}, {"evaluate", cmd_evaluate}, {"ablate", cmd_ablate}, {"export-weights", cmd_export_weights}};
  for (const auto& [n, fn] : table) {
    if (n != name) continue;
    try {
      fn(c);
      return 0;
    } catch (const std::exception& e) {
      spdlog::error("{}: {}", name, e.what());
      return exit_code_for(e);
    }
  }
  spdlog::error("unknown command '{}'", name);
  return 2;
}

}  // namespace mgcrnn::cli
