#pragma once

#include <array>
#include <bitset>
#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "mgcrnn/core/matrix.hpp"
#include "mgcrnn/graph/network.hpp"
#include "mgcrnn/graph/reconstruct.hpp"

namespace mgcrnn::graph {

enum class GraphKind : std::size_t { distance = 0, poi = 1, structure = 2, operational = 3, recent_flow = 4 };

inline constexpr std::size_t kGraphCount = 5;
inline constexpr std::size_t kStaticGraphCount = 4;

std::string_view kind_name(GraphKind kind);

/// Subset of the five graphs feeding the model. Bit k ↔ graph M^(k+1).
class GraphMask {
 public:
  GraphMask() = default;
  explicit GraphMask(std::bitset<kGraphCount> bits) : bits_(bits) {}
  static GraphMask all() { return GraphMask(std::bitset<kGraphCount>().set()); }
  /// Parses "1,3,5" (1-based graph numbers); throws ConfigError on bad input.
  static GraphMask parse(std::string_view text);

  [[nodiscard]] bool active(std::size_t k) const { return bits_.test(k); }
  [[nodiscard]] bool active(GraphKind k) const { return bits_.test(static_cast<std::size_t>(k)); }
  [[nodiscard]] bool empty() const { return bits_.none(); }
  [[nodiscard]] std::size_t count() const { return bits_.count(); }
  void set(std::size_t k, bool on = true) { bits_.set(k, on); }
  /// "1,3,5"
  [[nodiscard]] std::string to_string() const;
  /// "M1+M3+M5"
  [[nodiscard]] std::string label() const;

  friend bool operator==(const GraphMask&, const GraphMask&) = default;

 private:
  std::bitset<kGraphCount> bits_;
};

/// X ∈ ℝ^{P×N}: one row per named feature, one column per station.
struct FeatureMatrix {
  Matrix values;
  std::vector<std::string> names;
};

/// Feature CSV: station_id followed by named numeric columns, one row per
/// station. Rows are aligned to the network's station order.
FeatureMatrix read_features(const std::filesystem::path& path, const StationNetwork& net);
void write_features(const FeatureMatrix& features, const StationNetwork& net,
                    const std::filesystem::path& path);

/// Rows 0–9: inflow of slots t−10…t−1; rows 10–19: outflow of the same slots.
/// flows is slot-major T × (N·2) with columns ordered by flow_col().
Matrix recent_flow_features(const Matrix& flows, std::size_t t);
inline constexpr std::size_t kRecentFlowWindow = 10;

struct GraphBuildOptions {
  ReconstructOptions reconstruct;
  bool symmetrize = true;
  bool normalize_features = true;
  unsigned threads = 1;
};

/// The four static adjacency matrices and the time-indexed recent-flow ones.
struct GraphSet {
  std::vector<std::string> station_ids;
  std::array<Matrix, kStaticGraphCount> static_graphs;
  std::map<std::size_t, Matrix> recent_flow;  // keyed by slot index of the flow table

  [[nodiscard]] std::size_t stations() const { return station_ids.size(); }
  [[nodiscard]] const Matrix& get(GraphKind kind, std::size_t slot) const;
  [[nodiscard]] bool has_slot(std::size_t slot) const { return recent_flow.count(slot) > 0; }
  /// Throws ContractError when any matrix disagrees with station_ids in size.
  void validate() const;
};

/// Adjacency matrix for one reconstruction-derived kind from raw features.
Matrix reconstruct_graph(const Matrix& features, const GraphBuildOptions& options);

struct RecentFlowRange {
  std::size_t first = 0;
  std::size_t last = 0;  // inclusive
};

/// M¹ from the Gaussian kernel over shortest-path times; M²–M⁴ and M⁵ₜ by
/// sparse reconstruction. Recent-flow solves for existing slots in `cache`
/// are reused rather than recomputed.
GraphSet build_graph_set(const StationNetwork& net, const FeatureMatrix& poi,
                         const FeatureMatrix& structure, const FeatureMatrix& operational,
                         const Matrix& flows, RecentFlowRange range,
                         const GraphBuildOptions& options = {},
                         const std::map<std::size_t, Matrix>* cache = nullptr);

/// Recent-flow matrices for every slot in range, solved independently (optionally threaded).
std::map<std::size_t, Matrix> build_recent_flow_graphs(const Matrix& flows, RecentFlowRange range,
                                                        const GraphBuildOptions& options,
                                                        const std::map<std::size_t, Matrix>* cache = nullptr);

/// N×N CSV whose header row lists the station ids.
void write_adjacency_csv(const Matrix& m, const std::vector<std::string>& station_ids,
                         const std::filesystem::path& path);
Matrix read_adjacency_csv(const std::filesystem::path& path, std::vector<std::string>* station_ids = nullptr);

/// Whole-set container used to hand graphs from the `graphs` command to later ones.
void save_graph_set(const GraphSet& graphs, const std::filesystem::path& path);
GraphSet load_graph_set(const std::filesystem::path& path);

}  // namespace mgcrnn::graph
