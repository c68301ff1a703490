#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <vector>

#include "mgcrnn/core/matrix.hpp"
#include "mgcrnn/core/optim.hpp"
#include "mgcrnn/data/pipeline.hpp"
#include "mgcrnn/graph/graph_set.hpp"
#include "mgcrnn/model/seq_model.hpp"

namespace mgcrnn {

/// Normalized adjacencies Ã for every active graph: the static ones once, the
/// recent-flow ones per rolled slot.
class GraphCache {
 public:
  GraphCache() = default;
  GraphCache(const graph::GraphSet& graphs, graph::GraphMask mask);

  /// Ã for graph index k (0-based) at rolled slot `slot`.
  [[nodiscard]] const Matrix& normalized(std::size_t k, std::size_t slot) const;
  [[nodiscard]] std::size_t stations() const { return stations_; }
  [[nodiscard]] const graph::GraphMask& mask() const { return mask_; }

 private:
  graph::GraphMask mask_;
  std::size_t stations_ = 0;
  std::array<Matrix, graph::kStaticGraphCount> statics_;
  std::map<std::size_t, Matrix> recent_;
};

/// Step-major model batch from the given windows (see ModelBatch).
ModelBatch make_batch(std::span<const SampleWindow* const> windows, const GraphCache& graphs,
                      const ModelConfig& config);
/// (p·B)×(N·S) targets matching the model output, row j·B + b.
Matrix batch_targets(std::span<const SampleWindow* const> windows);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double loss = 0.0;      // mean Huber sum per window
  double lr = 0.0;        // rate used for the last update of the epoch
  double seconds = 0.0;
};

struct TrainOptions {
  std::size_t epochs = 50;
  std::size_t batch_size = 16;
  double lr0 = 0.002;
  double decay = 0.002;
  double huber_delta = 1.0;
  std::uint64_t seed = 0;  // shuffling and dropout
  std::filesystem::path log_path;         // JSON lines, one per epoch; empty = none
  std::filesystem::path checkpoint_path;  // last-good checkpoint on NaN; empty = none
  std::function<void(const EpochRecord&)> on_epoch;
};

struct TrainResult {
  std::vector<EpochRecord> epochs;
  std::uint64_t iterations = 0;
  AdamState adam;
};

/// Minibatch Adam on Σ Huber over stations, channels and steps, averaged over
/// the batch. A non-finite loss or gradient restores the parameters of the
/// last finished epoch, writes them to checkpoint_path, and throws NumericError.
TrainResult train_model(MgcRnn& model, std::span<const SampleWindow> windows, const GraphCache& graphs,
                        const TrainOptions& options);

/// Scaled forecasts for every window, (W·p)×(N·S) with row w·p + k.
Matrix predict_windows(MgcRnn& model, std::span<const SampleWindow> windows, const GraphCache& graphs,
                       std::size_t batch_size = 64);

}  // namespace mgcrnn
