#include "mgcrnn/graph/graph_set.hpp"

#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "mgcrnn/core/csv.hpp"
#include "mgcrnn/core/errors.hpp"
#include "mgcrnn/core/layout.hpp"

namespace mgcrnn::graph {

std::string_view kind_name(GraphKind kind) {
  switch (kind) {
    case GraphKind::distance: return "distance";
    case GraphKind::poi: return "poi";
    case GraphKind::structure: return "structure";
    case GraphKind::operational: return "operational";
    case GraphKind::recent_flow: return "recent_flow";
  }
  return "unknown";
}

GraphMask GraphMask::parse(std::string_view text) {
  GraphMask mask;
  std::stringstream ss{std::string(text)};
  for (std::string tok; std::getline(ss, tok, ',');) {
    std::string t;
    for (char ch : tok)
      if (ch != ' ' && ch != 'M' && ch != 'm') t.push_back(ch);
    if (t.empty()) continue;
    if (t.size() != 1 || t[0] < '1' || t[0] > '5')
      throw ConfigError("graph mask entry '" + tok + "' is not a graph number 1-5");
    mask.set(static_cast<std::size_t>(t[0] - '1'));
  }
  if (mask.empty()) throw ConfigError("graph mask '" + std::string(text) + "' selects no graph");
  return mask;
}

std::string GraphMask::to_string() const {
  std::string out;
  for (std::size_t k = 0; k < kGraphCount; ++k)
    if (active(k)) out += (out.empty() ? "" : ",") + std::to_string(k + 1);
  return out;
}

std::string GraphMask::label() const {
  std::string out;
  for (std::size_t k = 0; k < kGraphCount; ++k)
    if (active(k)) out += (out.empty() ? "M" : "+M") + std::to_string(k + 1);
  return out;
}

FeatureMatrix read_features(const std::filesystem::path& path, const StationNetwork& net) {
  const auto t = csv::read_file(path);
  const std::size_t c_id = t.column("station_id");
  FeatureMatrix f;
  for (std::size_t c = 0; c < t.header.size(); ++c)
    if (c != c_id) f.names.push_back(t.header[c]);
  if (f.names.empty()) throw DataError(t.source + ": no feature columns");
  f.values = Matrix(f.names.size(), net.size());
  std::vector<bool> seen(net.size(), false);
  for (const auto& r : t.rows) {
    const auto idx = net.index_of(r[c_id]);
    if (!idx) throw DataError(t.source + ": unknown station '" + r[c_id] + "'");
    seen[*idx] = true;
    std::size_t p = 0;
    for (std::size_t c = 0; c < t.header.size(); ++c) {
      if (c == c_id) continue;
      f.values(p++, *idx) = csv::parse_double(r[c], t.source + " column " + t.header[c]);
    }
  }
  for (std::size_t i = 0; i < net.size(); ++i)
    if (!seen[i]) throw DataError(t.source + ": no features for station '" + net.stations[i].id + "'");
  return f;
}

void write_features(const FeatureMatrix& f, const StationNetwork& net, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << "station_id";
  for (const auto& n : f.names) out << ',' << csv::escape(n);
  out << '\n';
  for (std::size_t i = 0; i < net.size(); ++i) {
    out << csv::escape(net.stations[i].id);
    for (std::size_t p = 0; p < f.names.size(); ++p) out << ',' << csv::format_double(f.values(p, i));
    out << '\n';
  }
}

Matrix recent_flow_features(const Matrix& flows, std::size_t t) {
  if (t < kRecentFlowWindow || t > flows.rows()) {
    throw DataError("recent_flow_features: slot " + std::to_string(t) +
                    " lacks 10 slots of history; earliest valid slot is " +
                    std::to_string(kRecentFlowWindow) + " and latest is " + std::to_string(flows.rows()));
  }
  const std::size_t n = flows.cols() / kChannels;
  Matrix x(2 * kRecentFlowWindow, n);
  for (std::size_t k = 0; k < kRecentFlowWindow; ++k) {
    const std::size_t slot = t - kRecentFlowWindow + k;
    for (std::size_t i = 0; i < n; ++i) {
      x(k, i) = flows(slot, flow_col(i, kInflow));
      x(kRecentFlowWindow + k, i) = flows(slot, flow_col(i, kOutflow));
    }
  }
  return x;
}

const Matrix& GraphSet::get(GraphKind kind, std::size_t slot) const {
  if (kind != GraphKind::recent_flow) return static_graphs[static_cast<std::size_t>(kind)];
  auto it = recent_flow.find(slot);
  if (it == recent_flow.end())
    throw ContractError("graph set has no recent-flow matrix for slot " + std::to_string(slot));
  return it->second;
}

void GraphSet::validate() const {
  const std::size_t n = stations();
  for (std::size_t k = 0; k < kStaticGraphCount; ++k)
    if (static_graphs[k].rows() != n || static_graphs[k].cols() != n)
      throw ContractError("graph set: static graph M" + std::to_string(k + 1) + " is " +
                          static_graphs[k].shape_string() + ", expected " + std::to_string(n) + " stations");
  for (const auto& [slot, m] : recent_flow)
    if (m.rows() != n || m.cols() != n)
      throw ContractError("graph set: recent-flow matrix for slot " + std::to_string(slot) +
                          " has shape " + m.shape_string());
}

Matrix reconstruct_graph(const Matrix& features, const GraphBuildOptions& options) {
  const Matrix x = options.normalize_features ? normalize_feature_rows(features) : features;
  const Matrix lap = feature_laplacian(x);
  auto res = sparse_reconstruct(x, lap, options.reconstruct);
  return options.symmetrize ? symmetrize(res.weights) : std::move(res.weights);
}

std::map<std::size_t, Matrix> build_recent_flow_graphs(const Matrix& flows, RecentFlowRange range,
                                                        const GraphBuildOptions& options,
                                                        const std::map<std::size_t, Matrix>* cache) {
  if (range.last < range.first) throw ContractError("recent-flow range is empty");
  // Fail early with the canonical message before launching work.
  recent_flow_features(flows, range.first);
  recent_flow_features(flows, range.last);

  const std::size_t count = range.last - range.first + 1;
  std::vector<Matrix> out(count);
  std::vector<bool> done(count, false);
  if (cache != nullptr) {
    for (std::size_t k = 0; k < count; ++k) {
      auto it = cache->find(range.first + k);
      if (it != cache->end()) {
        out[k] = it->second;
        done[k] = true;
      }
    }
  }
  auto work = [&](std::size_t begin, std::size_t stride) {
    for (std::size_t k = begin; k < count; k += stride) {
      if (done[k]) continue;
      out[k] = reconstruct_graph(recent_flow_features(flows, range.first + k), options);
    }
  };
  const unsigned threads = std::max(1u, options.threads);
  if (threads == 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
    for (auto& th : pool) th.join();
  }
  std::map<std::size_t, Matrix> result;
  for (std::size_t k = 0; k < count; ++k) result.emplace(range.first + k, std::move(out[k]));
  return result;
}

GraphSet build_graph_set(const StationNetwork& net, const FeatureMatrix& poi,
                         const FeatureMatrix& structure, const FeatureMatrix& operational,
                         const Matrix& flows, RecentFlowRange range, const GraphBuildOptions& options,
                         const std::map<std::size_t, Matrix>* cache) {
  const std::size_t n = net.size();
  for (const FeatureMatrix* f : {&poi, &structure, &operational})
    if (f->values.cols() != n)
      throw ContractError("feature matrix has " + std::to_string(f->values.cols()) +
                          " station columns, network has " + std::to_string(n));
  if (flows.cols() != n * kChannels)
    throw ContractError("flow table has " + std::to_string(flows.cols()) + " columns, expected " +
                        std::to_string(n * kChannels));

  GraphSet gs;
  gs.station_ids = net.ids();
  gs.static_graphs[0] = gaussian_weights(network_distance(net));
  gs.static_graphs[1] = reconstruct_graph(poi.values, options);
  gs.static_graphs[2] = reconstruct_graph(structure.values, options);
  gs.static_graphs[3] = reconstruct_graph(operational.values, options);
  gs.recent_flow = build_recent_flow_graphs(flows, range, options, cache);
  return gs;
}

void write_adjacency_csv(const Matrix& m, const std::vector<std::string>& ids,
                         const std::filesystem::path& path) {
  if (m.rows() != ids.size() || m.cols() != ids.size())
    throw DimensionError("write_adjacency_csv: matrix " + m.shape_string() + " for " +
                         std::to_string(ids.size()) + " stations");
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  for (std::size_t j = 0; j < ids.size(); ++j) out << (j ? "," : "") << csv::escape(ids[j]);
  out << '\n';
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) out << (j ? "," : "") << csv::format_double(m(i, j));
    out << '\n';
  }
}

Matrix read_adjacency_csv(const std::filesystem::path& path, std::vector<std::string>* ids) {
  const auto t = csv::read_file(path);
  const std::size_t n = t.header.size();
  if (t.rows.size() != n)
    throw DataError(t.source + ": expected " + std::to_string(n) + " rows, found " +
                    std::to_string(t.rows.size()));
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) m(i, j) = csv::parse_double(t.rows[i][j], t.source);
  if (ids != nullptr) *ids = t.header;
  return m;
}

namespace {

nlohmann::json matrix_to_json(const Matrix& m) {
  return {{"rows", m.rows()}, {"cols", m.cols()},
          {"values", std::vector<double>(m.values().begin(), m.values().end())}};
}

Matrix matrix_from_json(const nlohmann::json& j) {
  return Matrix(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>(),
                j.at("values").get<std::vector<double>>());
}

}  // namespace

void save_graph_set(const GraphSet& g, const std::filesystem::path& path) {
  nlohmann::json j;
  j["format"] = "mgcrnn-graphs";
  j["version"] = 1;
  j["station_ids"] = g.station_ids;
  for (std::size_t k = 0; k < kStaticGraphCount; ++k)
    j["static"][std::string(kind_name(static_cast<GraphKind>(k)))] = matrix_to_json(g.static_graphs[k]);
  nlohmann::json rf = nlohmann::json::array();
  for (const auto& [slot, m] : g.recent_flow) {
    nlohmann::json e = matrix_to_json(m);
    e["slot"] = slot;
    rf.push_back(std::move(e));
  }
  j["recent_flow"] = std::move(rf);
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << j.dump();
}

GraphSet load_graph_set(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  if (j.value("format", "") != "mgcrnn-graphs" || j.value("version", 0) != 1)
    throw DataError(path.string() + ": not a version-1 graph set");
  GraphSet g;
  g.station_ids = j.at("station_ids").get<std::vector<std::string>>();
  for (std::size_t k = 0; k < kStaticGraphCount; ++k)
    g.static_graphs[k] = matrix_from_json(j.at("static").at(std::string(kind_name(static_cast<GraphKind>(k)))));
  for (const auto& e : j.at("recent_flow")) g.recent_flow.emplace(e.at("slot").get<std::size_t>(), matrix_from_json(e));
  g.validate();
  return g;
}

}  // namespace mgcrnn::graph
