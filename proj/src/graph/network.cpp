#include "mgcrnn/graph/network.hpp"

#include <cmath>
#include <deque>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "mgcrnn/core/csv.hpp"
#include "mgcrnn/core/errors.hpp"

namespace mgcrnn::graph {

std::optional<std::size_t> StationNetwork::index_of(const std::string& id) const {
  for (std::size_t i = 0; i < stations.size(); ++i)
    if (stations[i].id == id) return i;
  return std::nullopt;
}

std::optional<std::size_t> StationNetwork::index_of_name(const std::string& name) const {
  for (std::size_t i = 0; i < stations.size(); ++i)
    if (stations[i].name == name) return i;
  return std::nullopt;
}

std::vector<std::string> StationNetwork::ids() const {
  std::vector<std::string> out;
  out.reserve(stations.size());
  for (const auto& s : stations) out.push_back(s.id);
  return out;
}

void StationNetwork::validate() const {
  if (stations.size() < 2) throw DataError("station network needs at least 2 stations");
  for (const auto& e : edges) {
    if (e.from >= stations.size() || e.to >= stations.size())
      throw DataError("edge references a station index out of range");
    if (!(e.travel_time_min > 0.0))
      throw DataError("edge " + stations[e.from].id + "-" + stations[e.to].id +
                      " has non-positive travel time");
  }
}

Matrix network_distance(const StationNetwork& net) {
  net.validate();
  const std::size_t n = net.size();
  const double inf = std::numeric_limits<double>::infinity();
  Matrix d(n, n, inf);
  for (std::size_t i = 0; i < n; ++i) d(i, i) = 0.0;
  for (const auto& e : net.edges) {
    if (e.from == e.to) continue;
    d(e.from, e.to) = std::min(d(e.from, e.to), e.travel_time_min);
    d(e.to, e.from) = d(e.from, e.to);
  }
  // Floyd-Warshall; desk-scale networks make O(N³) irrelevant.
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i) {
      const double dik = d(i, k);
      if (dik == inf) continue;
      for (std::size_t j = 0; j < n; ++j) {
        const double via = dik + d(k, j);
        if (via < d(i, j)) d(i, j) = via;
      }
    }

  std::vector<std::string> unreachable;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (d(i, j) == inf) unreachable.push_back(net.stations[i].id + "-" + net.stations[j].id);
  if (!unreachable.empty()) {
    std::ostringstream msg;
    msg << "network is disconnected; " << unreachable.size() << " unreachable pair(s):";
    for (std::size_t k = 0; k < unreachable.size() && k < 20; ++k) msg << ' ' << unreachable[k];
    if (unreachable.size() > 20) msg << " ...";
    throw DataError(msg.str());
  }
  return d;
}

Matrix gaussian_weights(const Matrix& distances, std::optional<double> sigma) {
  const std::size_t n = distances.rows();
  if (n != distances.cols()) throw DimensionError("gaussian_weights: distance matrix not square");
  double s = 0.0;
  if (sigma) {
    s = *sigma;
  } else {
    double mean = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) {
          mean += distances(i, j);
          ++count;
        }
    if (count > 0) mean /= static_cast<double>(count);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) var += (distances(i, j) - mean) * (distances(i, j) - mean);
    if (count > 0) var /= static_cast<double>(count);
    s = std::sqrt(var);
  }
  if (!(s > 0.0)) {
    throw ParameterError(
        "gaussian_weights: sigma is zero (all distances equal); pass an explicit sigma");
  }
  Matrix w(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double dij = distances(i, j);
      w(i, j) = i == j ? 1.0 : std::exp(-(dij * dij) / (s * s));
    }
  return w;
}

namespace {

std::vector<std::vector<std::size_t>> adjacency_lists(const StationNetwork& net) {
  std::vector<std::set<std::size_t>> sets(net.size());
  for (const auto& e : net.edges) {
    if (e.from == e.to) continue;
    sets[e.from].insert(e.to);
    sets[e.to].insert(e.from);
  }
  std::vector<std::vector<std::size_t>> adj(net.size());
  for (std::size_t i = 0; i < net.size(); ++i) adj[i].assign(sets[i].begin(), sets[i].end());
  return adj;
}

}  // namespace

std::vector<double> degree_centrality(const StationNetwork& net) {
  const auto adj = adjacency_lists(net);
  std::vector<double> deg(net.size());
  for (std::size_t i = 0; i < net.size(); ++i) deg[i] = static_cast<double>(adj[i].size());
  return deg;
}

std::vector<double> betweenness_centrality(const StationNetwork& net) {
  const auto adj = adjacency_lists(net);
  const std::size_t n = net.size();
  std::vector<double> cb(n, 0.0);
  for (std::size_t s = 0; s < n; ++s) {
    std::vector<std::size_t> order;
    std::vector<std::vector<std::size_t>> pred(n);
    std::vector<double> sigma(n, 0.0);
    std::vector<long> dist(n, -1);
    sigma[s] = 1.0;
    dist[s] = 0;
    std::deque<std::size_t> queue{s};
    while (!queue.empty()) {
      const std::size_t v = queue.front();
      queue.pop_front();
      order.push_back(v);
      for (std::size_t w : adj[v]) {
        if (dist[w] < 0) {
          dist[w] = dist[v] + 1;
          queue.push_back(w);
        }
        if (dist[w] == dist[v] + 1) {
          sigma[w] += sigma[v];
          pred[w].push_back(v);
        }
      }
    }
    std::vector<double> delta(n, 0.0);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      const std::size_t w = *it;
      for (std::size_t v : pred[w]) delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
      if (w != s) cb[w] += delta[w];
    }
  }
  // Each unordered pair was counted from both endpoints.
  for (double& v : cb) v *= 0.5;
  return cb;
}

StationNetwork read_network(const std::filesystem::path& stations_csv,
                            const std::filesystem::path& edges_csv) {
  StationNetwork net;
  const auto st = csv::read_file(stations_csv);
  const auto c_id = st.column("id"), c_name = st.column("name"), c_line = st.column("line"),
             c_lat = st.column("lat"), c_lon = st.column("lon");
  for (const auto& r : st.rows) {
    Station s;
    s.id = r[c_id];
    s.name = r[c_name];
    std::stringstream lines(r[c_line]);
    for (std::string l; std::getline(lines, l, ';');)
      if (!l.empty()) s.lines.push_back(l);
    s.lat = csv::parse_double(r[c_lat], st.source + " lat");
    s.lon = csv::parse_double(r[c_lon], st.source + " lon");
    if (net.index_of(s.id)) throw DataError(st.source + ": duplicate station id '" + s.id + "'");
    net.stations.push_back(std::move(s));
  }
  const auto ed = csv::read_file(edges_csv);
  const auto c_from = ed.column("from"), c_to = ed.column("to"),
             c_tt = ed.column("travel_time_min");
  for (const auto& r : ed.rows) {
    const auto from = net.index_of(r[c_from]);
    const auto to = net.index_of(r[c_to]);
    if (!from || !to)
      throw DataError(ed.source + ": edge references unknown station '" +
                      (from ? r[c_to] : r[c_from]) + "'");
    net.edges.push_back(Edge{*from, *to, csv::parse_double(r[c_tt], ed.source + " travel_time_min")});
  }
  net.validate();
  return net;
}

void write_network(const StationNetwork& net, const std::filesystem::path& stations_csv,
                   const std::filesystem::path& edges_csv) {
  std::ofstream st(stations_csv);
  if (!st) throw DataError("cannot write '" + stations_csv.string() + "'");
  st << "id,name,line,lat,lon\n";
  for (const auto& s : net.stations) {
    std::string lines;
    for (std::size_t k = 0; k < s.lines.size(); ++k) lines += (k ? ";" : "") + s.lines[k];
    st << csv::escape(s.id) << ',' << csv::escape(s.name) << ',' << csv::escape(lines) << ','
       << csv::format_double(s.lat) << ',' << csv::format_double(s.lon) << '\n';
  }
  std::ofstream ed(edges_csv);
  if (!ed) throw DataError("cannot write '" + edges_csv.string() + "'");
  ed << "from,to,travel_time_min\n";
  for (const auto& e : net.edges)
    ed << csv::escape(net.stations[e.from].id) << ',' << csv::escape(net.stations[e.to].id) << ','
       << csv::format_double(e.travel_time_min) << '\n';
}

}  // namespace mgcrnn::graph
