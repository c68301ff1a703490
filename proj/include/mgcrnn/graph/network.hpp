#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mgcrnn/core/matrix.hpp"

namespace mgcrnn::graph {

struct Station {
  std::string id;
  std::string name;
  std::vector<std::string> lines;
  double lat = 0.0;
  double lon = 0.0;
};

struct Edge {
  std::size_t from = 0;
  std::size_t to = 0;
  double travel_time_min = 0.0;
};

/// Stations in canonical order plus undirected travel-time edges.
struct StationNetwork {
  std::vector<Station> stations;
  std::vector<Edge> edges;

  [[nodiscard]] std::size_t size() const noexcept { return stations.size(); }
  [[nodiscard]] std::optional<std::size_t> index_of(const std::string& id) const;
  [[nodiscard]] std::optional<std::size_t> index_of_name(const std::string& name) const;
  [[nodiscard]] std::vector<std::string> ids() const;
  /// Throws DataError when N < 2, an edge is out of range, or a travel time is not positive.
  void validate() const;
};

/// All-pairs shortest-path travel times (minutes). Throws DataError listing
/// unreachable pairs when the network is disconnected.
Matrix network_distance(const StationNetwork& net);

/// Gaussian kernel exp(-d²/σ²) with unit diagonal. σ defaults to the
/// population standard deviation of the off-diagonal distances.
Matrix gaussian_weights(const Matrix& distances, std::optional<double> sigma = std::nullopt);

/// Node degree in the undirected edge list (parallel edges counted once).
std::vector<double> degree_centrality(const StationNetwork& net);
/// Unnormalized shortest-path betweenness over hop counts (Brandes).
std::vector<double> betweenness_centrality(const StationNetwork& net);

/// stations CSV: id,name,line,lat,lon (multiple lines joined with ';').
StationNetwork read_network(const std::filesystem::path& stations_csv,
                            const std::filesystem::path& edges_csv);
void write_network(const StationNetwork& net, const std::filesystem::path& stations_csv,
                   const std::filesystem::path& edges_csv);

}  // namespace mgcrnn::graph
