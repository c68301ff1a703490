#include "mgcrnn/model/trainer.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "mgcrnn/core/errors.hpp"
#include "mgcrnn/core/layout.hpp"
#include "mgcrnn/core/log.hpp"
#include "mgcrnn/core/tape.hpp"
#include "mgcrnn/model/mgc_layer.hpp"

namespace mgcrnn {

GraphCache::GraphCache(const graph::GraphSet& graphs, graph::GraphMask mask)
    : mask_(mask), stations_(graphs.stations()) {
  graphs.validate();
  for (std::size_t k = 0; k < graph::kStaticGraphCount; ++k)
    if (mask.active(k)) statics_[k] = normalize_adjacency(graphs.static_graphs[k]);
  if (mask.active(graph::GraphKind::recent_flow))
    for (const auto& [slot, m] : graphs.recent_flow) recent_.emplace(slot, normalize_adjacency(m));
}

const Matrix& GraphCache::normalized(std::size_t k, std::size_t slot) const {
  if (!mask_.active(k)) throw ContractError("graph cache: M" + std::to_string(k + 1) + " is not in the mask");
  if (k < graph::kStaticGraphCount) return statics_[k];
  auto it = recent_.find(slot);
  if (it == recent_.end())
    throw ContractError("graph cache: no recent-flow graph for rolled slot " + std::to_string(slot));
  return it->second;
}

ModelBatch make_batch(std::span<const SampleWindow* const> windows, const GraphCache& graphs,
                      const ModelConfig& config) {
  const std::size_t b = windows.size(), l = config.input_len, n = config.stations, s = config.channels;
  if (b == 0) throw ContractError("make_batch: no windows");
  if (graphs.stations() != n)
    throw DimensionError("make_batch: graph cache has " + std::to_string(graphs.stations()) + " stations, model " +
                         std::to_string(n));
  ModelBatch batch;
  batch.size = b;
  batch.graphs.blocks = l * b;
  batch.graphs.signals = Matrix(l * b * n, s);
  for (std::size_t k = 0; k < graph::kGraphCount; ++k)
    if (config.mask.active(k)) batch.graphs.adjacency[k] = Matrix(l * b * n, n);

  for (std::size_t w = 0; w < b; ++w) {
    const SampleWindow& win = *windows[w];
    if (win.inputs.rows() != l || win.inputs.cols() != n * s || win.targets.rows() != config.horizon)
      throw DimensionError("make_batch: window at anchor " + std::to_string(win.anchor) + " is " +
                           win.inputs.shape_string() + " / " + win.targets.shape_string());
    for (std::size_t tau = 0; tau < l; ++tau) {
      const std::size_t base = (tau * b + w) * n;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < s; ++c) batch.graphs.signals(base + i, c) = win.inputs(tau, flow_col(i, c));
      for (std::size_t k = 0; k < graph::kGraphCount; ++k) {
        if (!config.mask.active(k)) continue;
        const Matrix& a = graphs.normalized(k, win.input_slots.at(tau));
        Matrix& dst = batch.graphs.adjacency[k];
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < n; ++j) dst(base + i, j) = a(i, j);
      }
    }
  }
  if (config.exogenous) {
    const std::size_t p = config.horizon;
    batch.day_of_week.resize(p * b);
    batch.holiday.resize(p * b);
    for (std::size_t j = 0; j < p; ++j)
      for (std::size_t w = 0; w < b; ++w) {
        if (windows[w]->day_of_week.size() != p)
          throw ContractError("make_batch: exogenous model needs calendar codes on every window");
        batch.day_of_week[j * b + w] = windows[w]->day_of_week[j];
        batch.holiday[j * b + w] = windows[w]->holiday[j];
      }
  }
  return batch;
}

Matrix batch_targets(std::span<const SampleWindow* const> windows) {
  const std::size_t b = windows.size();
  const std::size_t p = windows.front()->targets.rows(), cols = windows.front()->targets.cols();
  Matrix y(p * b, cols);
  for (std::size_t j = 0; j < p; ++j)
    for (std::size_t w = 0; w < b; ++w)
      for (std::size_t c = 0; c < cols; ++c) y(j * b + w, c) = windows[w]->targets(j, c);
  return y;
}

namespace {

std::vector<Matrix> snapshot(const ParameterSet& params) {
  std::vector<Matrix> out;
  for (const auto& p : params) out.push_back(p.value);
  return out;
}

void restore(ParameterSet& params, const std::vector<Matrix>& values) {
  for (std::size_t i = 0; i < values.size(); ++i) params[i].value = values[i];
}

}  // namespace

TrainResult train_model(MgcRnn& model, std::span<const SampleWindow> windows, const GraphCache& graphs,
                        const TrainOptions& options) {
  if (windows.empty()) throw ContractError("train_model: no training windows");
  if (options.batch_size == 0 || options.epochs == 0) throw ConfigError("train_model: batch size and epochs must be positive");
  if (!(options.lr0 > 0.0) || options.decay < 0.0 || !(options.huber_delta > 0.0))
    throw ConfigError("train_model: lr0 and huber_delta must be positive, decay nonnegative");

  std::ofstream log;
  if (!options.log_path.empty()) {
    log.open(options.log_path);
    if (!log) throw DataError("cannot write '" + options.log_path.string() + "'");
  }

  TrainResult result;
  result.adam = AdamState(model.params());
  const Rng root(options.seed);
  Rng shuffle_rng = root.split("shuffle");
  Rng dropout_rng = root.split("dropout");
  std::vector<std::size_t> order(windows.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<Matrix> good = snapshot(model.params());

  for (std::size_t epoch = 1; epoch <= options.epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle_rng.below(i)]);
    double total = 0.0;
    double lr = 0.0;
    for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
      const std::size_t b = std::min(options.batch_size, order.size() - start);
      std::vector<const SampleWindow*> picked(b);
      for (std::size_t k = 0; k < b; ++k) picked[k] = &windows[order[start + k]];
      const ModelBatch batch = make_batch(picked, graphs, model.config());
      const Matrix target = batch_targets(picked);

      model.params().zero_grad();
      Tape tape;
      const Var huber = tape.huber_sum(model.forward(tape, batch, &dropout_rng), target, options.huber_delta);
      const double batch_loss = tape.value(huber)(0, 0);
      try {
        if (!std::isfinite(batch_loss))
          throw NumericError("training loss is not finite at epoch " + std::to_string(epoch) + ", iteration " +
                             std::to_string(result.iterations + 1));
        tape.backward(tape.scale(huber, 1.0 / static_cast<double>(b)));
        lr = decayed_lr(options.lr0, options.decay, result.iterations);
        adam_step(model.params(), result.adam, lr);
      } catch (const NumericError& e) {
        restore(model.params(), good);
        if (!options.checkpoint_path.empty()) {
          save_checkpoint(model, options.checkpoint_path);
          spdlog::error("{}; last-good parameters written to {}", e.what(), options.checkpoint_path.string());
        }
        throw;
      }
      ++result.iterations;
      total += batch_loss;
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss = total / static_cast<double>(windows.size());
    rec.lr = lr;
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    good = snapshot(model.params());
    result.epochs.push_back(rec);
    if (log) {
      nlohmann::json j{{"epoch", rec.epoch}, {"loss", rec.loss}, {"lr", rec.lr}, {"seconds", rec.seconds}};
      log << j.dump() << '\n' << std::flush;
    }
    spdlog::debug("epoch {} loss {:.6g} lr {:.6g} ({:.1f}s)", rec.epoch, rec.loss, rec.lr, rec.seconds);
    if (options.on_epoch) options.on_epoch(rec);
  }
  return result;
}

Matrix predict_windows(MgcRnn& model, std::span<const SampleWindow> windows, const GraphCache& graphs,
                       std::size_t batch_size) {
  const std::size_t p = model.config().horizon, cols = model.config().outputs();
  Matrix out(windows.size() * p, cols);
  batch_size = std::max<std::size_t>(batch_size, 1);
  for (std::size_t start = 0; start < windows.size(); start += batch_size) {
    const std::size_t b = std::min(batch_size, windows.size() - start);
    std::vector<const SampleWindow*> picked(b);
    for (std::size_t k = 0; k < b; ++k) picked[k] = &windows[start + k];
    const Matrix y = model.predict(make_batch(picked, graphs, model.config()));
    for (std::size_t j = 0; j < p; ++j)
      for (std::size_t w = 0; w < b; ++w)
        for (std::size_t c = 0; c < cols; ++c) out((start + w) * p + j, c) = y(j * b + w, c);
  }
  return out;
}

}  // namespace mgcrnn
