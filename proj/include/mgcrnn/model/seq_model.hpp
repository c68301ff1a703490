#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mgcrnn/core/optim.hpp"
#include "mgcrnn/core/parameters.hpp"
#include "mgcrnn/core/rng.hpp"
#include "mgcrnn/core/tape.hpp"
#include "mgcrnn/model/mgc_layer.hpp"

namespace mgcrnn {

/// Parameters <prefix>.kernel (D×4H), <prefix>.recurrent (H×4H), <prefix>.bias
/// (1×4H). Gate blocks along the 4H axis are ordered input, forget, cell, output.
class LstmCell {
 public:
  LstmCell(std::string prefix, std::size_t input, std::size_t hidden, ParameterSet& params, Rng& rng);

  struct Vars {
    Var kernel, recurrent, bias;
  };
  Vars bind(Tape& tape, ParameterSet& params) const;

  [[nodiscard]] std::size_t input() const { return input_; }
  [[nodiscard]] std::size_t hidden() const { return hidden_; }

 private:
  std::string prefix_;
  std::size_t input_;
  std::size_t hidden_;
};

struct LstmState {
  Var h, c;
};

/// One batched step; x is B×D, state B×H. Empty masks disable dropout on
/// that path; otherwise input_mask multiplies x and recurrent_mask multiplies h.
LstmState lstm_step(Tape& tape, const LstmCell::Vars& cell, std::size_t hidden, Var x, LstmState state,
                    const Matrix& input_mask = {}, const Matrix& recurrent_mask = {});

/// Runs the cell over xs from a zero state and returns the final state.
LstmState encode(Tape& tape, const LstmCell::Vars& cell, std::size_t hidden, std::span<const Var> xs);

/// Feeds representation.h as the input at each of p steps, starting from
/// representation; returns the p hidden states.
std::vector<Var> decode(Tape& tape, const LstmCell::Vars& cell, std::size_t hidden, LstmState representation,
                        std::size_t p, const Matrix& input_mask = {}, const Matrix& recurrent_mask = {});

struct DenseVars {
  Var w, b;
};

/// out = dense_out(relu(dense_interp(h))) with the same weights at every step.
/// Returns the steps stacked in order: (p·B)×outputs.
Var time_distributed_output(Tape& tape, const DenseVars& interp, const DenseVars& out,
                            std::span<const Var> hiddens);

struct ExogenousVars {
  Var dow_embed, holiday_embed, dow_dense, holiday_dense;
};

/// dense_d(embed_d(d)) + dense_h(embed_h(h)) for each (d, h) pair; d ∈ 1..7,
/// h ∈ {0, 1}. Throws IndexError on other codes.
Var exogenous_offsets(Tape& tape, const ExogenousVars& vars, std::span<const int> day_of_week,
                      std::span<const int> holiday);

struct ModelConfig {
  std::size_t stations = 0;
  std::size_t channels = 2;
  std::size_t input_len = 16;  // l
  std::size_t horizon = 4;     // p
  std::size_t gcn_units = 64;  // U
  std::size_t gcn_depth = 1;
  std::size_t lstm_units = 200;  // H
  std::size_t embed_dim = 8;     // E
  graph::GraphMask mask = graph::GraphMask::all();
  bool exogenous = false;
  double dropout = 0.2;
  double recurrent_dropout = 0.2;

  void validate() const;
  /// Stable text of every field that determines parameter shapes.
  [[nodiscard]] std::string shape_signature() const;
  [[nodiscard]] std::uint64_t hash() const;
  [[nodiscard]] std::size_t outputs() const { return stations * channels; }
};

/// A batch of B windows laid out step-major: graphs.blocks = l·B with block
/// τ·B + b holding step τ of window b; day_of_week and holiday have p·B
/// entries indexed j·B + b for target step j.
struct ModelBatch {
  std::size_t size = 0;
  MgcInput graphs;
  std::vector<int> day_of_week;
  std::vector<int> holiday;
};

class MgcRnn {
 public:
  MgcRnn(ModelConfig config, std::uint64_t seed);

  /// (p·B)×(N·S) forecast in scaled space, rows ordered j·B + b. With a
  /// dropout rng the decoder applies dropout (training); without, inference.
  Var forward(Tape& tape, const ModelBatch& batch, Rng* dropout_rng = nullptr);
  Matrix predict(const ModelBatch& batch);

  [[nodiscard]] const ModelConfig& config() const { return config_; }
  ParameterSet& params() { return params_; }
  [[nodiscard]] const ParameterSet& params() const { return params_; }

 private:
  ModelConfig config_;
  ParameterSet params_;
  MgcLayer mgc_;
  LstmCell encoder_;
  LstmCell decoder_;
};

/// JSON container of all named tensors plus the config and its hash.
void save_checkpoint(const MgcRnn& model, const std::filesystem::path& path,
                     const AdamState* adam = nullptr);

struct Checkpoint {
  ModelConfig config;
  ParameterSet params;
  std::optional<AdamState> adam;
};

Checkpoint read_checkpoint(const std::filesystem::path& path);

/// Loads tensors into model. Throws ConfigError when the stored config hash
/// or any tensor shape disagrees with the model.
void load_checkpoint(MgcRnn& model, const std::filesystem::path& path, AdamState* adam = nullptr);

}  // namespace mgcrnn
