#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "mgcrnn/core/matrix.hpp"
#include "mgcrnn/core/parameters.hpp"

namespace mgcrnn {

/// Handle to a node on a Tape. Only meaningful for the tape that issued it.
struct Var {
  std::size_t index = static_cast<std::size_t>(-1);
};

enum class Op : std::uint8_t {
  constant,
  parameter,
  matmul,
  add,
  sub,
  hadamard,
  scale,
  add_row,
  sigmoid,
  tanh,
  relu,
  concat_cols,
  concat_rows,
  slice_cols,
  slice_rows,
  reshape,
  sum,
  huber_sum,
  tile_rows,
  block_lmul,
};

std::string_view op_name(Op op);

/// Reverse-mode automatic differentiation over a recorded list of primitive
/// operations. Nodes are appended in evaluation order, so the list is
/// topologically sorted by construction and backward() is a single reverse
/// sweep. Parameter leaves hold a pointer into a ParameterSet; backward()
/// accumulates their gradients into Parameter::grad.
///
/// Nodes whose operands are all constants are marked as not requiring a
/// gradient and are skipped during the reverse sweep.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = default;
  Tape& operator=(Tape&&) = default;

  Var constant(Matrix value);
  Var parameter(Parameter& p);

  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var hadamard(Var a, Var b);
  Var scale(Var a, double s);
  /// Adds a 1×cols row vector to every row of a.
  Var add_row(Var a, Var row);
  Var sigmoid(Var a);
  Var tanh(Var a);
  Var relu(Var a);
  Var concat_cols(std::span<const Var> parts);
  Var concat_rows(std::span<const Var> parts);
  Var slice_cols(Var a, std::size_t start, std::size_t count);
  Var slice_rows(Var a, std::size_t start, std::size_t count);
  Var reshape(Var a, std::size_t rows, std::size_t cols);
  /// 1×1 sum of all entries.
  Var sum(Var a);
  /// 1×1 sum of elementwise Huber losses of (pred − target) with threshold delta.
  Var huber_sum(Var pred, const Matrix& target, double delta);
  /// Stacks `times` copies of a vertically.
  Var tile_rows(Var a, std::size_t times);
  /// Left-multiplies each consecutive n-row block of a by its own constant n×n
  /// matrix. `blocks` stacks those matrices vertically: (count·n)×n.
  Var block_lmul(const Matrix& blocks, Var a);
  /// Elementwise product with a fixed mask (dropout selection).
  Var mask(Var a, Matrix mask_values);

  [[nodiscard]] const Matrix& value(Var v) const;
  /// Gradient buffer of a node; empty until backward() has run.
  [[nodiscard]] const Matrix& grad(Var v) const;
  [[nodiscard]] bool requires_grad(Var v) const { return nodes_.at(v.index).requires_grad; }
  [[nodiscard]] std::size_t size() const noexcept { return nodes_.size(); }

  /// Propagates d(loss)/d(node) to every node reachable from loss. loss must be 1×1.
  void backward(Var loss);

 private:
  struct Node {
    Op op = Op::constant;
    std::vector<std::size_t> operands;
    Matrix value;
    Matrix grad;
    Parameter* param = nullptr;
    double scalar = 0.0;
    std::size_t offset = 0;
    Matrix aux;
    bool requires_grad = false;
  };

  Var push(Node node);
  [[nodiscard]] const Node& node(Var v) const;
  [[noreturn]] void dimension_error(Op op, std::string_view detail) const;
  void accumulate(std::size_t index, const Matrix& g);
  void backprop_node(std::size_t index);

  std::vector<Node> nodes_;
};

}  // namespace mgcrnn
