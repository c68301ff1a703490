#pragma once

#include <cstdint>
#include <vector>

#include "mgcrnn/core/matrix.hpp"
#include "mgcrnn/core/parameters.hpp"
#include "mgcrnn/core/rng.hpp"

namespace mgcrnn {

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First/second moment buffers, one pair per parameter in ParameterSet order.
struct AdamState {
  AdamHyper hyper;
  std::vector<Matrix> m;
  std::vector<Matrix> v;
  std::uint64_t t = 0;

  AdamState() = default;
  explicit AdamState(const ParameterSet& params, AdamHyper h = {});
};

/// One bias-corrected Adam update using the gradients stored in params.
/// Throws NumericError naming the parameter if any gradient is not finite.
void adam_step(ParameterSet& params, AdamState& state, double lr);

/// Inverse-time decay: lr0 / (1 + decay * iterations).
double decayed_lr(double lr0, double decay, std::uint64_t iterations);

/// Inverted-dropout mask: entries are 0 with probability rate and 1/(1-rate)
/// otherwise. Returns all ones when not training or when rate is 0.
Matrix dropout_mask(std::size_t rows, std::size_t cols, double rate, Rng& rng, bool training = true);

/// Uniform in ±sqrt(6 / (fan_in + fan_out)).
Matrix glorot_uniform(std::size_t rows, std::size_t cols, std::size_t fan_in, std::size_t fan_out,
                      Rng& rng);
inline Matrix glorot_uniform(std::size_t rows, std::size_t cols, Rng& rng) {
  return glorot_uniform(rows, cols, rows, cols, rng);
}

}  // namespace mgcrnn
