#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>

#include "mgcrnn/core/matrix.hpp"
#include "mgcrnn/core/parameters.hpp"
#include "mgcrnn/core/rng.hpp"
#include "mgcrnn/core/tape.hpp"
#include "mgcrnn/graph/graph_set.hpp"

namespace mgcrnn {

/// D̂^{-1/2}(A + I)D̂^{-1/2}, D̂ = diag of the row sums of A + I.
/// Throws ContractError unless A is finite, nonnegative and symmetric.
Matrix normalize_adjacency(const Matrix& a);

/// relu(Ã·H·W), applied block by block: h stacks `count` signal matrices of
/// N rows each and `adjacency` stacks the matching Ã blocks, (count·N)×N.
Var gcn_forward(Tape& tape, const Matrix& adjacency, Var h, Var w);

/// Σ over active k of 𝐖ᵏ ∘ gₖ. g and fusion are indexed by graph (0..4);
/// entries of inactive graphs are never read. Each gₖ stacks `blocks` copies of
/// an N×U matrix and 𝐖ᵏ (N×U) is shared across them.
Var fuse(Tape& tape, std::span<const Var> g, std::span<const Var> fusion, const graph::GraphMask& mask,
         std::size_t blocks);

/// Flattens each N×U block and applies x = flat·W + b; returns blocks×(N·S).
Var project_step(Tape& tape, Var merged, std::size_t blocks, Var w, Var b);

struct MgcConfig {
  std::size_t stations = 0;
  std::size_t channels = 2;
  std::size_t units = 64;  // U
  std::size_t depth = 1;   // graph-convolution layers per graph
  graph::GraphMask mask = graph::GraphMask::all();
};

/// Inputs for `blocks` time steps processed together: signals is (blocks·N)×S,
/// adjacency[k] is (blocks·N)×N holding normalized matrices. Only active
/// graphs need to be filled.
struct MgcInput {
  std::size_t blocks = 0;
  Matrix signals;
  std::array<Matrix, graph::kGraphCount> adjacency;
};

/// Parameters and forward pass of the multi-graph convolution block. Only
/// graphs in the mask own parameters, named mgc.gcn<k>.w<d> and mgc.fuse<k>
/// with k the 1-based graph number.
class MgcLayer {
 public:
  /// Registers this layer's parameters in params.
  MgcLayer(MgcConfig config, ParameterSet& params, Rng& rng);

  [[nodiscard]] const MgcConfig& config() const { return config_; }
  [[nodiscard]] std::size_t output_size() const { return config_.stations * config_.channels; }

  /// blocks×(N·S) projected step vectors, one row per block.
  Var forward(Tape& tape, ParameterSet& params, const MgcInput& input) const;

  static std::string gcn_name(std::size_t graph, std::size_t layer);
  static std::string fusion_name(std::size_t graph);

 private:
  MgcConfig config_;
};

}  // namespace mgcrnn
