#include "mgcrnn/model/mgc_layer.hpp"

#include <cmath>
#include <vector>

#include "mgcrnn/core/errors.hpp"
#include "mgcrnn/core/optim.hpp"

namespace mgcrnn {

Matrix normalize_adjacency(const Matrix& a) {
  if (a.rows() != a.cols()) throw ContractError("normalize_adjacency: matrix is " + a.shape_string());
  if (!all_finite(a)) throw ContractError("normalize_adjacency: matrix has non-finite entries");
  const std::size_t n = a.rows();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (a(i, j) < 0.0)
        throw ContractError("normalize_adjacency: negative weight at (" + std::to_string(i) + ", " +
                            std::to_string(j) + ")");
      if (a(i, j) != a(j, i))
        throw ContractError("normalize_adjacency: asymmetric at (" + std::to_string(i) + ", " +
                            std::to_string(j) + ")");
    }
  std::vector<double> inv_sqrt(n);
  for (std::size_t i = 0; i < n; ++i) {
    double deg = 1.0;
    for (std::size_t j = 0; j < n; ++j) deg += a(i, j);
    inv_sqrt[i] = 1.0 / std::sqrt(deg);
  }
  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      out(i, j) = inv_sqrt[i] * (a(i, j) + (i == j ? 1.0 : 0.0)) * inv_sqrt[j];
  return out;
}

Var gcn_forward(Tape& tape, const Matrix& adjacency, Var h, Var w) {
  return tape.relu(tape.matmul(tape.block_lmul(adjacency, h), w));
}

Var fuse(Tape& tape, std::span<const Var> g, std::span<const Var> fusion, const graph::GraphMask& mask,
         std::size_t blocks) {
  if (mask.empty()) throw ConfigError("fuse: graph mask selects no graph");
  if (g.size() != graph::kGraphCount || fusion.size() != graph::kGraphCount)
    throw ContractError("fuse: expected one slot per graph kind");
  Var total{};
  bool first = true;
  for (std::size_t k = 0; k < graph::kGraphCount; ++k) {
    if (!mask.active(k)) continue;
    const Var weight = blocks == 1 ? fusion[k] : tape.tile_rows(fusion[k], blocks);
    const Var term = tape.hadamard(weight, g[k]);
    total = first ? term : tape.add(total, term);
    first = false;
  }
  return total;
}

Var project_step(Tape& tape, Var merged, std::size_t blocks, Var w, Var b) {
  const Matrix& m = tape.value(merged);
  if (blocks == 0 || m.rows() % blocks != 0)
    throw DimensionError("project_step: " + m.shape_string() + " does not split into " +
                         std::to_string(blocks) + " blocks");
  const Var flat = tape.reshape(merged, blocks, m.size() / blocks);
  return tape.add_row(tape.matmul(flat, w), b);
}

std::string MgcLayer::gcn_name(std::size_t graph, std::size_t layer) {
  return "mgc.gcn" + std::to_string(graph + 1) + ".w" + std::to_string(layer);
}

std::string MgcLayer::fusion_name(std::size_t graph) { return "mgc.fuse" + std::to_string(graph + 1); }

MgcLayer::MgcLayer(MgcConfig config, ParameterSet& params, Rng& rng) : config_(config) {
  if (config_.stations == 0 || config_.channels == 0 || config_.units == 0 || config_.depth == 0)
    throw ConfigError("mgc layer: stations, channels, units and depth must be positive");
  if (config_.mask.empty()) throw ConfigError("mgc layer: graph mask selects no graph");
  const std::size_t n = config_.stations, s = config_.channels, u = config_.units;
  const double share = 1.0 / static_cast<double>(config_.mask.count());
  for (std::size_t k = 0; k < graph::kGraphCount; ++k) {
    if (!config_.mask.active(k)) continue;
    for (std::size_t d = 0; d < config_.depth; ++d)
      params.add(gcn_name(k, d), glorot_uniform(d == 0 ? s : u, u, rng));
    // Start as an even average of the active graphs.
    params.add(fusion_name(k), Matrix(n, u, share));
  }
  params.add("mgc.proj.w", glorot_uniform(n * u, n * s, rng));
  params.add("mgc.proj.b", Matrix(1, n * s));
}

Var MgcLayer::forward(Tape& tape, ParameterSet& params, const MgcInput& input) const {
  const std::size_t n = config_.stations;
  if (input.blocks == 0 || input.signals.rows() != input.blocks * n || input.signals.cols() != config_.channels)
    throw DimensionError("mgc layer: signals " + input.signals.shape_string() + " for " +
                         std::to_string(input.blocks) + " blocks of " + std::to_string(n) + " stations");
  const Var h0 = tape.constant(input.signals);
  std::array<Var, graph::kGraphCount> g{};
  std::array<Var, graph::kGraphCount> fusion{};
  for (std::size_t k = 0; k < graph::kGraphCount; ++k) {
    if (!config_.mask.active(k)) continue;
    const Matrix& adj = input.adjacency[k];
    if (adj.rows() != input.blocks * n || adj.cols() != n)
      throw DimensionError("mgc layer: adjacency for graph M" + std::to_string(k + 1) + " is " +
                           adj.shape_string());
    Var h = h0;
    for (std::size_t d = 0; d < config_.depth; ++d)
      h = gcn_forward(tape, adj, h, tape.parameter(params.at(gcn_name(k, d))));
    g[k] = h;
    fusion[k] = tape.parameter(params.at(fusion_name(k)));
  }
  const Var merged = fuse(tape, g, fusion, config_.mask, input.blocks);
  return project_step(tape, merged, input.blocks, tape.parameter(params.at("mgc.proj.w")),
                      tape.parameter(params.at("mgc.proj.b")));
}

}  // namespace mgcrnn
