#include "mgcrnn/core/tape.hpp"

#include <cmath>
#include <string>

#include "mgcrnn/core/errors.hpp"

namespace mgcrnn {

std::string_view op_name(Op op) {
  switch (op) {
    case Op::constant: return "constant";
    case Op::parameter: return "parameter";
    case Op::matmul: return "matmul";
    case Op::add: return "add";
    case Op::sub: return "sub";
    case Op::hadamard: return "hadamard";
    case Op::scale: return "scale";
    case Op::add_row: return "add_row";
    case Op::sigmoid: return "sigmoid";
    case Op::tanh: return "tanh";
    case Op::relu: return "relu";
    case Op::concat_cols: return "concat_cols";
    case Op::concat_rows: return "concat_rows";
    case Op::slice_cols: return "slice_cols";
    case Op::slice_rows: return "slice_rows";
    case Op::reshape: return "reshape";
    case Op::sum: return "sum";
    case Op::huber_sum: return "huber_sum";
    case Op::tile_rows: return "tile_rows";
    case Op::block_lmul: return "block_lmul";
  }
  return "unknown";
}

namespace {

double sigmoid_scalar(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

const Tape::Node& Tape::node(Var v) const {
  if (v.index >= nodes_.size()) throw ContractError("tape: invalid variable handle");
  return nodes_[v.index];
}

const Matrix& Tape::value(Var v) const {
  const Node& n = node(v);
  return n.param != nullptr ? n.param->value : n.value;
}

const Matrix& Tape::grad(Var v) const { return node(v).grad; }

void Tape::dimension_error(Op op, std::string_view detail) const {
  throw DimensionError("tape node #" + std::to_string(nodes_.size()) + " (" +
                       std::string(op_name(op)) + "): " + std::string(detail));
}

Var Tape::push(Node n) {
  if (n.op != Op::constant && n.op != Op::parameter) {
    for (std::size_t idx : n.operands) n.requires_grad = n.requires_grad || nodes_[idx].requires_grad;
  }
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

Var Tape::constant(Matrix v) {
  Node n;
  n.op = Op::constant;
  n.value = std::move(v);
  return push(std::move(n));
}

Var Tape::parameter(Parameter& p) {
  Node n;
  n.op = Op::parameter;
  n.param = &p;
  n.requires_grad = true;
  return push(std::move(n));
}

Var Tape::matmul(Var a, Var b) {
  const Matrix& av = value(a);
  const Matrix& bv = value(b);
  if (av.cols() != bv.rows()) dimension_error(Op::matmul, av.shape_string() + " * " + bv.shape_string());
  Node n;
  n.op = Op::matmul;
  n.operands = {a.index, b.index};
  n.value = mgcrnn::matmul(av, bv);
  return push(std::move(n));
}

Var Tape::add(Var a, Var b) {
  const Matrix& av = value(a);
  const Matrix& bv = value(b);
  if (!av.same_shape(bv)) dimension_error(Op::add, av.shape_string() + " + " + bv.shape_string());
  Node n;
  n.op = Op::add;
  n.operands = {a.index, b.index};
  n.value = av + bv;
  return push(std::move(n));
}

Var Tape::sub(Var a, Var b) {
  const Matrix& av = value(a);
  const Matrix& bv = value(b);
  if (!av.same_shape(bv)) dimension_error(Op::sub, av.shape_string() + " - " + bv.shape_string());
  Node n;
  n.op = Op::sub;
  n.operands = {a.index, b.index};
  n.value = av - bv;
  return push(std::move(n));
}

Var Tape::hadamard(Var a, Var b) {
  const Matrix& av = value(a);
  const Matrix& bv = value(b);
  if (!av.same_shape(bv)) dimension_error(Op::hadamard, av.shape_string() + " o " + bv.shape_string());
  Node n;
  n.op = Op::hadamard;
  n.operands = {a.index, b.index};
  n.value = mgcrnn::hadamard(av, bv);
  return push(std::move(n));
}

Var Tape::mask(Var a, Matrix mask_values) { return hadamard(a, constant(std::move(mask_values))); }

Var Tape::scale(Var a, double s) {
  Node n;
  n.op = Op::scale;
  n.operands = {a.index};
  n.scalar = s;
  n.value = value(a) * s;
  return push(std::move(n));
}

Var Tape::add_row(Var a, Var row) {
  const Matrix& av = value(a);
  const Matrix& rv = value(row);
  if (rv.rows() != 1 || rv.cols() != av.cols())
    dimension_error(Op::add_row, av.shape_string() + " + row " + rv.shape_string());
  Node n;
  n.op = Op::add_row;
  n.operands = {a.index, row.index};
  n.value = av;
  for (std::size_t i = 0; i < av.rows(); ++i) {
    auto r = n.value.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] += rv(0, j);
  }
  return push(std::move(n));
}

Var Tape::sigmoid(Var a) {
  Node n;
  n.op = Op::sigmoid;
  n.operands = {a.index};
  n.value = value(a);
  for (double& v : n.value.values()) v = sigmoid_scalar(v);
  return push(std::move(n));
}

Var Tape::tanh(Var a) {
  Node n;
  n.op = Op::tanh;
  n.operands = {a.index};
  n.value = value(a);
  for (double& v : n.value.values()) v = std::tanh(v);
  return push(std::move(n));
}

Var Tape::relu(Var a) {
  Node n;
  n.op = Op::relu;
  n.operands = {a.index};
  n.value = value(a);
  for (double& v : n.value.values()) v = v > 0.0 ? v : 0.0;
  return push(std::move(n));
}

Var Tape::concat_cols(std::span<const Var> parts) {
  if (parts.empty()) dimension_error(Op::concat_cols, "no operands");
  const std::size_t rows = value(parts[0]).rows();
  std::size_t cols = 0;
  for (Var p : parts) {
    if (value(p).rows() != rows)
      dimension_error(Op::concat_cols, "row mismatch " + value(p).shape_string());
    cols += value(p).cols();
  }
  Node n;
  n.op = Op::concat_cols;
  n.value = Matrix(rows, cols);
  std::size_t off = 0;
  for (Var p : parts) {
    const Matrix& pv = value(p);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < pv.cols(); ++j) n.value(i, off + j) = pv(i, j);
    off += pv.cols();
    n.operands.push_back(p.index);
  }
  return push(std::move(n));
}

Var Tape::concat_rows(std::span<const Var> parts) {
  if (parts.empty()) dimension_error(Op::concat_rows, "no operands");
  const std::size_t cols = value(parts[0]).cols();
  std::size_t rows = 0;
  for (Var p : parts) {
    if (value(p).cols() != cols)
      dimension_error(Op::concat_rows, "column mismatch " + value(p).shape_string());
    rows += value(p).rows();
  }
  Node n;
  n.op = Op::concat_rows;
  std::vector<double> buf;
  buf.reserve(rows * cols);
  for (Var p : parts) {
    auto pv = value(p).values();
    buf.insert(buf.end(), pv.begin(), pv.end());
    n.operands.push_back(p.index);
  }
  n.value = Matrix(rows, cols, std::move(buf));
  return push(std::move(n));
}

Var Tape::slice_cols(Var a, std::size_t start, std::size_t count) {
  const Matrix& av = value(a);
  if (start + count > av.cols())
    dimension_error(Op::slice_cols, "columns [" + std::to_string(start) + ", " +
                                        std::to_string(start + count) + ") of " + av.shape_string());
  Node n;
  n.op = Op::slice_cols;
  n.operands = {a.index};
  n.offset = start;
  n.value = Matrix(av.rows(), count);
  for (std::size_t i = 0; i < av.rows(); ++i)
    for (std::size_t j = 0; j < count; ++j) n.value(i, j) = av(i, start + j);
  return push(std::move(n));
}

Var Tape::slice_rows(Var a, std::size_t start, std::size_t count) {
  const Matrix& av = value(a);
  if (start + count > av.rows())
    dimension_error(Op::slice_rows, "rows [" + std::to_string(start) + ", " +
                                        std::to_string(start + count) + ") of " + av.shape_string());
  Node n;
  n.op = Op::slice_rows;
  n.operands = {a.index};
  n.offset = start;
  auto src = av.values().subspan(start * av.cols(), count * av.cols());
  n.value = Matrix(count, av.cols(), std::vector<double>(src.begin(), src.end()));
  return push(std::move(n));
}

Var Tape::reshape(Var a, std::size_t rows, std::size_t cols) {
  const Matrix& av = value(a);
  if (rows * cols != av.size())
    dimension_error(Op::reshape, av.shape_string() + " -> " + std::to_string(rows) + "x" +
                                     std::to_string(cols));
  Node n;
  n.op = Op::reshape;
  n.operands = {a.index};
  n.value = av;
  n.value.reshape(rows, cols);
  return push(std::move(n));
}

Var Tape::sum(Var a) {
  Node n;
  n.op = Op::sum;
  n.operands = {a.index};
  n.value = Matrix(1, 1, mgcrnn::sum(value(a)));
  return push(std::move(n));
}

Var Tape::huber_sum(Var pred, const Matrix& target, double delta) {
  const Matrix& pv = value(pred);
  if (!pv.same_shape(target))
    dimension_error(Op::huber_sum, pv.shape_string() + " vs target " + target.shape_string());
  if (!(delta > 0.0)) throw ParameterError("huber_sum: delta must be positive");
  Node n;
  n.op = Op::huber_sum;
  n.operands = {pred.index};
  n.scalar = delta;
  n.aux = target;
  double total = 0.0;
  auto p = pv.values();
  auto t = target.values();
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double e = std::abs(p[i] - t[i]);
    total += e <= delta ? 0.5 * e * e : delta * e - 0.5 * delta * delta;
  }
  n.value = Matrix(1, 1, total);
  return push(std::move(n));
}

Var Tape::tile_rows(Var a, std::size_t times) {
  if (times == 0) dimension_error(Op::tile_rows, "zero copies");
  const Matrix& av = value(a);
  Node n;
  n.op = Op::tile_rows;
  n.operands = {a.index};
  std::vector<double> buf;
  buf.reserve(av.size() * times);
  for (std::size_t k = 0; k < times; ++k) buf.insert(buf.end(), av.values().begin(), av.values().end());
  n.value = Matrix(av.rows() * times, av.cols(), std::move(buf));
  return push(std::move(n));
}

namespace {

// out_j = A_j x_j (or A_jᵀ x_j) for every n-row block j.
Matrix apply_blocks(const Matrix& blocks, const Matrix& x, bool transpose_blocks) {
  const std::size_t n = blocks.cols(), c = x.cols(), count = x.rows() / n;
  Matrix out(x.rows(), c);
  for (std::size_t b = 0; b < count; ++b) {
    for (std::size_t i = 0; i < n; ++i) {
      double* orow = out.values().data() + (b * n + i) * c;
      for (std::size_t k = 0; k < n; ++k) {
        const double a = transpose_blocks ? blocks(b * n + k, i) : blocks(b * n + i, k);
        if (a == 0.0) continue;
        const double* xrow = x.values().data() + (b * n + k) * c;
        for (std::size_t j = 0; j < c; ++j) orow[j] += a * xrow[j];
      }
    }
  }
  return out;
}

}  // namespace

Var Tape::block_lmul(const Matrix& blocks, Var a) {
  const Matrix& av = value(a);
  if (blocks.cols() == 0 || blocks.rows() != av.rows() || av.rows() % blocks.cols() != 0)
    dimension_error(Op::block_lmul, "blocks " + blocks.shape_string() + " against " + av.shape_string());
  Node n;
  n.op = Op::block_lmul;
  n.operands = {a.index};
  n.value = apply_blocks(blocks, av, false);
  n.aux = blocks;
  return push(std::move(n));
}

void Tape::accumulate(std::size_t index, const Matrix& g) {
  Node& n = nodes_[index];
  if (!n.requires_grad) return;
  if (n.op == Op::parameter) {
    n.param->grad += g;
    return;
  }
  if (n.grad.empty()) {
    n.grad = g;
  } else {
    n.grad += g;
  }
}

void Tape::backward(Var loss) {
  const Matrix& lv = value(loss);
  if (lv.rows() != 1 || lv.cols() != 1) {
    throw ContractError("backward: loss node #" + std::to_string(loss.index) + " is " +
                        lv.shape_string() + ", expected a scalar");
  }
  for (auto& n : nodes_) n.grad = Matrix();
  if (!nodes_[loss.index].requires_grad) return;
  nodes_[loss.index].grad = Matrix(1, 1, 1.0);
  for (std::size_t i = loss.index + 1; i-- > 0;) {
    if (nodes_[i].requires_grad && !nodes_[i].grad.empty()) backprop_node(i);
  }
}

void Tape::backprop_node(std::size_t index) {
  // Copy what is needed before accumulate() may touch other nodes.
  const Node& n = nodes_[index];
  const Matrix& g = n.grad;
  const auto& ops = n.operands;
  auto val = [this](std::size_t i) -> const Matrix& { return value(Var{i}); };
  auto needs = [this](std::size_t i) { return nodes_[i].requires_grad; };

  switch (n.op) {
    case Op::constant:
    case Op::parameter:
      break;
    case Op::matmul: {
      if (needs(ops[0])) accumulate(ops[0], matmul_nt(g, val(ops[1])));
      if (needs(ops[1])) accumulate(ops[1], matmul_tn(val(ops[0]), g));
      break;
    }
    case Op::add:
      accumulate(ops[0], g);
      accumulate(ops[1], g);
      break;
    case Op::sub:
      accumulate(ops[0], g);
      if (needs(ops[1])) accumulate(ops[1], g * -1.0);
      break;
    case Op::hadamard:
      if (needs(ops[0])) accumulate(ops[0], mgcrnn::hadamard(g, val(ops[1])));
      if (needs(ops[1])) accumulate(ops[1], mgcrnn::hadamard(g, val(ops[0])));
      break;
    case Op::scale:
      accumulate(ops[0], g * n.scalar);
      break;
    case Op::add_row: {
      accumulate(ops[0], g);
      if (needs(ops[1])) {
        Matrix rg(1, g.cols());
        for (std::size_t i = 0; i < g.rows(); ++i)
          for (std::size_t j = 0; j < g.cols(); ++j) rg(0, j) += g(i, j);
        accumulate(ops[1], rg);
      }
      break;
    }
    case Op::sigmoid: {
      Matrix d = g;
      auto y = n.value.values();
      auto dv = d.values();
      for (std::size_t i = 0; i < dv.size(); ++i) dv[i] *= y[i] * (1.0 - y[i]);
      accumulate(ops[0], d);
      break;
    }
    case Op::tanh: {
      Matrix d = g;
      auto y = n.value.values();
      auto dv = d.values();
      for (std::size_t i = 0; i < dv.size(); ++i) dv[i] *= 1.0 - y[i] * y[i];
      accumulate(ops[0], d);
      break;
    }
    case Op::relu: {
      Matrix d = g;
      auto x = val(ops[0]).values();
      auto dv = d.values();
      for (std::size_t i = 0; i < dv.size(); ++i)
        if (!(x[i] > 0.0)) dv[i] = 0.0;
      accumulate(ops[0], d);
      break;
    }
    case Op::concat_cols: {
      std::size_t off = 0;
      for (std::size_t idx : ops) {
        const std::size_t c = val(idx).cols();
        if (needs(idx)) {
          Matrix part(g.rows(), c);
          for (std::size_t i = 0; i < g.rows(); ++i)
            for (std::size_t j = 0; j < c; ++j) part(i, j) = g(i, off + j);
          accumulate(idx, part);
        }
        off += c;
      }
      break;
    }
    case Op::concat_rows: {
      std::size_t off = 0;
      for (std::size_t idx : ops) {
        const Matrix& pv = val(idx);
        if (needs(idx)) {
          auto src = g.values().subspan(off, pv.size());
          accumulate(idx, Matrix(pv.rows(), pv.cols(), std::vector<double>(src.begin(), src.end())));
        }
        off += pv.size();
      }
      break;
    }
    case Op::slice_cols: {
      const Matrix& av = val(ops[0]);
      Matrix d(av.rows(), av.cols());
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j) d(i, n.offset + j) = g(i, j);
      accumulate(ops[0], d);
      break;
    }
    case Op::slice_rows: {
      const Matrix& av = val(ops[0]);
      Matrix d(av.rows(), av.cols());
      auto dv = d.values().subspan(n.offset * av.cols(), g.size());
      auto gv = g.values();
      for (std::size_t i = 0; i < gv.size(); ++i) dv[i] = gv[i];
      accumulate(ops[0], d);
      break;
    }
    case Op::reshape: {
      const Matrix& av = val(ops[0]);
      Matrix d = g;
      d.reshape(av.rows(), av.cols());
      accumulate(ops[0], d);
      break;
    }
    case Op::sum: {
      const Matrix& av = val(ops[0]);
      accumulate(ops[0], Matrix(av.rows(), av.cols(), g(0, 0)));
      break;
    }
    case Op::huber_sum: {
      const Matrix& pv = val(ops[0]);
      Matrix d(pv.rows(), pv.cols());
      auto p = pv.values();
      auto t = n.aux.values();
      auto dv = d.values();
      const double delta = n.scalar;
      const double scale = g(0, 0);
      for (std::size_t i = 0; i < dv.size(); ++i) {
        const double e = p[i] - t[i];
        dv[i] = scale * (e > delta ? delta : (e < -delta ? -delta : e));
      }
      accumulate(ops[0], d);
      break;
    }
    case Op::tile_rows: {
      const Matrix& av = val(ops[0]);
      Matrix d(av.rows(), av.cols());
      auto gv = g.values();
      auto dv = d.values();
      for (std::size_t i = 0; i < gv.size(); ++i) dv[i % dv.size()] += gv[i];
      accumulate(ops[0], d);
      break;
    }
    case Op::block_lmul:
      accumulate(ops[0], apply_blocks(n.aux, g, true));
      break;
  }
}

}  // namespace mgcrnn
