#include "mgcrnn/cli/run_config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "mgcrnn/core/csv.hpp"
#include "mgcrnn/core/errors.hpp"

namespace mgcrnn::cli {

namespace {

std::string trim(std::string_view s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string_view::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return std::string(s.substr(a, b - a + 1));
}

std::vector<std::string> split_list(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss{std::string(s)};
  for (std::string item; std::getline(ss, item, sep);)
    if (auto t = trim(item); !t.empty()) out.push_back(std::move(t));
  return out;
}

[[noreturn]] void bad(std::string_view key, std::string_view value, std::string_view why) {
  throw ConfigError("config key '" + std::string(key) + "': value '" + std::string(value) + "' " + std::string(why));
}

std::size_t to_size(std::string_view key, std::string_view v) {
  std::size_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) bad(key, v, "is not a nonnegative integer");
  return out;
}

double to_double(std::string_view key, std::string_view v) {
  try {
    return csv::parse_double(v, key);
  } catch (const DataError&) {
    bad(key, v, "is not a number");
  }
}

bool to_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad(key, v, "is not a boolean");
}

Date to_date(std::string_view key, std::string_view v) {
  try {
    return parse_date(v);
  } catch (const DataError&) {
    bad(key, v, "is not a YYYY-MM-DD date");
  }
}

std::string join(const std::vector<std::string>& items, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? std::string(sep) : "") + items[i];
  return out;
}

struct Key {
  std::function<void(RunConfig&, std::string_view key, std::string_view value)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <class T>
Key size_key(T RunConfig::*field) {
  return {[field](RunConfig& c, std::string_view k, std::string_view v) { c.*field = static_cast<T>(to_size(k, v)); },
          [field](const RunConfig& c) { return std::to_string(c.*field); }};
}

Key double_key(double RunConfig::*field) {
  return {[field](RunConfig& c, std::string_view k, std::string_view v) { c.*field = to_double(k, v); },
          [field](const RunConfig& c) { return csv::format_double(c.*field); }};
}

Key bool_key(bool RunConfig::*field) {
  return {[field](RunConfig& c, std::string_view k, std::string_view v) { c.*field = to_bool(k, v); },
          [field](const RunConfig& c) { return std::string(c.*field ? "true" : "false"); }};
}

Key path_key(std::filesystem::path RunConfig::*field) {
  return {[field](RunConfig& c, std::string_view, std::string_view v) { c.*field = std::filesystem::path(v); },
          [field](const RunConfig& c) { return (c.*field).string(); }};
}

const std::vector<std::pair<std::string, Key>>& keys() {
  static const std::vector<std::pair<std::string, Key>> table = {
      {"data_dir", path_key(&RunConfig::data_dir)},
      {"stations", path_key(&RunConfig::stations)},
      {"edges", path_key(&RunConfig::edges)},
      {"poi", path_key(&RunConfig::poi)},
      {"structure", path_key(&RunConfig::structure)},
      {"operational", path_key(&RunConfig::operational)},
      {"flows", path_key(&RunConfig::flows)},
      {"holidays", path_key(&RunConfig::holidays)},
      {"afc", path_key(&RunConfig::afc)},
      {"output_dir", path_key(&RunConfig::output_dir)},
      {"input_len", size_key(&RunConfig::input_len)},
      {"horizon", size_key(&RunConfig::horizon)},
      {"gcn_units", size_key(&RunConfig::gcn_units)},
      {"gcn_depth", size_key(&RunConfig::gcn_depth)},
      {"lstm_units", size_key(&RunConfig::lstm_units)},
      {"embed_dim", size_key(&RunConfig::embed_dim)},
      {"batch_size", size_key(&RunConfig::batch_size)},
      {"epochs", size_key(&RunConfig::epochs)},
      {"lr0", double_key(&RunConfig::lr0)},
      {"decay", double_key(&RunConfig::decay)},
      {"dropout", double_key(&RunConfig::dropout)},
      {"recurrent_dropout", double_key(&RunConfig::recurrent_dropout)},
      {"huber_delta", double_key(&RunConfig::huber_delta)},
      {"graph_mask",
       {[](RunConfig& c, std::string_view, std::string_view v) { c.graph_mask = graph::GraphMask::parse(v); },
        [](const RunConfig& c) { return c.graph_mask.to_string(); }}},
      {"exogenous", bool_key(&RunConfig::exogenous)},
      {"preprocessing", bool_key(&RunConfig::preprocessing)},
      {"rho1", double_key(&RunConfig::rho1)},
      {"rho2", double_key(&RunConfig::rho2)},
      {"graph_threads", size_key(&RunConfig::graph_threads)},
      {"split_date",
       {[](RunConfig& c, std::string_view k, std::string_view v) {
          c.split_date = v.empty() ? std::nullopt : std::optional<Date>(to_date(k, v));
        },
        [](const RunConfig& c) { return c.split_date ? format_date(*c.split_date) : std::string(); }}},
      {"seed", size_key(&RunConfig::seed)},
      {"lasso_lambda", double_key(&RunConfig::lasso_lambda)},
      {"ablation_specs",
       {[](RunConfig& c, std::string_view, std::string_view v) {
          c.ablation_specs.clear();
          for (const auto& s : split_list(v, ';')) c.ablation_specs.push_back(AblationSpec::parse(s));
          if (c.ablation_specs.empty()) throw ConfigError("config key 'ablation_specs' lists no spec");
        },
        [](const RunConfig& c) {
          std::vector<std::string> labels;
          for (const auto& s : c.ablation_specs) labels.push_back(s.label());
          return join(labels, ";");
        }}},
      {"export_slots",
       {[](RunConfig& c, std::string_view, std::string_view v) { c.export_slots = split_list(v, ';'); },
        [](const RunConfig& c) { return join(c.export_slots, ";"); }}},
      {"synth_stations", size_key(&RunConfig::synth_stations)},
      {"synth_days", size_key(&RunConfig::synth_days)},
      {"synth_start",
       {[](RunConfig& c, std::string_view k, std::string_view v) { c.synth_start = to_date(k, v); },
        [](const RunConfig& c) { return format_date(c.synth_start); }}},
  };
  return table;
}

}  // namespace

void RunConfig::set(std::string_view key, std::string_view value) {
  const std::string v = trim(value);
  for (const auto& [name, k] : keys())
    if (name == key) {
      k.set(*this, key, v);
      return;
    }
  throw ConfigError("unknown config key '" + std::string(key) + "'");
}

void RunConfig::validate() const {
  auto positive = [](std::string_view name, double v) {
    if (!(v > 0.0)) throw ConfigError("config key '" + std::string(name) + "' must be positive");
  };
  positive("input_len", static_cast<double>(input_len));
  positive("horizon", static_cast<double>(horizon));
  positive("gcn_units", static_cast<double>(gcn_units));
  positive("gcn_depth", static_cast<double>(gcn_depth));
  positive("lstm_units", static_cast<double>(lstm_units));
  positive("embed_dim", static_cast<double>(embed_dim));
  positive("batch_size", static_cast<double>(batch_size));
  positive("epochs", static_cast<double>(epochs));
  positive("lr0", lr0);
  positive("huber_delta", huber_delta);
  positive("graph_threads", graph_threads);
  if (decay < 0.0) throw ConfigError("config key 'decay' must be nonnegative");
  if (dropout < 0.0 || dropout >= 1.0 || recurrent_dropout < 0.0 || recurrent_dropout >= 1.0)
    throw ConfigError("config keys 'dropout' and 'recurrent_dropout' must lie in [0, 1)");
  if (rho1 < 0.0 || rho2 < 0.0) throw ConfigError("config keys 'rho1' and 'rho2' must be nonnegative");
  if (lasso_lambda < 0.0) throw ConfigError("config key 'lasso_lambda' must be nonnegative");
  if (graph_mask.empty()) throw ConfigError("config key 'graph_mask' selects no graph");
}

std::string RunConfig::to_text() const {
  std::string out;
  for (const auto& [name, k] : keys()) out += name + " = " + k.get(*this) + "\n";
  return out;
}

DatasetPaths RunConfig::dataset_paths() const {
  DatasetPaths p = DatasetPaths::in(data_dir);
  auto pick = [](std::filesystem::path& dst, const std::filesystem::path& given) {
    if (!given.empty()) dst = given;
  };
  pick(p.stations, stations);
  pick(p.edges, edges);
  pick(p.poi, poi);
  pick(p.structure, structure);
  pick(p.operational, operational);
  pick(p.flows, flows);
  pick(p.holidays, holidays);
  return p;
}

ModelConfig RunConfig::model_config(std::size_t station_count) const {
  ModelConfig m;
  m.stations = station_count;
  m.input_len = input_len;
  m.horizon = horizon;
  m.gcn_units = gcn_units;
  m.gcn_depth = gcn_depth;
  m.lstm_units = lstm_units;
  m.embed_dim = embed_dim;
  m.mask = graph_mask;
  m.exogenous = exogenous;
  m.dropout = dropout;
  m.recurrent_dropout = recurrent_dropout;
  return m;
}

TrainOptions RunConfig::train_options() const {
  TrainOptions t;
  t.epochs = epochs;
  t.batch_size = batch_size;
  t.lr0 = lr0;
  t.decay = decay;
  t.huber_delta = huber_delta;
  t.seed = mix64(seed);
  return t;
}

PrepareOptions RunConfig::prepare_options() const {
  PrepareOptions p;
  p.split_date = split_date;
  p.input_len = input_len;
  p.horizon = horizon;
  p.pipeline.log = p.pipeline.difference = preprocessing;
  p.graphs.reconstruct.rho1 = rho1;
  p.graphs.reconstruct.rho2 = rho2;
  p.graphs.threads = graph_threads;
  return p;
}

SyntheticConfig RunConfig::synthetic_config() const {
  SyntheticConfig s;
  s.stations = synth_stations;
  s.days = synth_days;
  s.start = synth_start;
  s.seed = seed;
  return s;
}

RunConfig parse_run_config(std::string_view text, std::string_view source) {
  RunConfig c;
  std::stringstream ss{std::string(text)};
  std::size_t line_no = 0;
  for (std::string line; std::getline(ss, line);) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError(std::string(source) + ":" + std::to_string(line_no) + ": expected key = value");
    try {
      c.set(trim(std::string_view(t).substr(0, eq)), std::string_view(t).substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(std::string(source) + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return c;
}

RunConfig load_run_config(const std::optional<std::filesystem::path>& file, const std::vector<std::string>& overrides) {
  RunConfig c;
  if (file) {
    std::ifstream in(*file);
    if (!in) throw ConfigError("cannot open config file '" + file->string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    c = parse_run_config(ss.str(), file->string());
  }
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + o + "' is not key=value");
    c.set(trim(std::string_view(o).substr(0, eq)), std::string_view(o).substr(eq + 1));
  }
  c.validate();
  return c;
}

}  // namespace mgcrnn::cli
