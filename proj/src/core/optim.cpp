#include "mgcrnn/core/optim.hpp"

#include <cmath>
#include <string>

#include "mgcrnn/core/errors.hpp"

namespace mgcrnn {

AdamState::AdamState(const ParameterSet& params, AdamHyper h) : hyper(h) {
  m.reserve(params.size());
  v.reserve(params.size());
  for (const auto& p : params) {
    m.emplace_back(p.value.rows(), p.value.cols());
    v.emplace_back(p.value.rows(), p.value.cols());
  }
}

void adam_step(ParameterSet& params, AdamState& state, double lr) {
  if (!(lr > 0.0)) throw ParameterError("adam_step: learning rate must be positive");
  if (state.m.size() != params.size()) {
    throw DimensionError("adam_step: optimizer state holds " + std::to_string(state.m.size()) +
                         " moments for " + std::to_string(params.size()) + " parameters");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    const Parameter& p = params[k];
    if (!p.grad.same_shape(p.value) || !state.m[k].same_shape(p.value)) {
      throw DimensionError("adam_step: shape mismatch for parameter '" + p.name + "'");
    }
    auto g = p.grad.values();
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!std::isfinite(g[i])) {
        throw NumericError("adam_step: non-finite gradient in parameter '" + p.name +
                           "' at flat index " + std::to_string(i));
      }
    }
  }

  state.t += 1;
  const auto& h = state.hyper;
  const double t = static_cast<double>(state.t);
  const double c1 = 1.0 - std::pow(h.beta1, t);
  const double c2 = 1.0 - std::pow(h.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto w = params[k].value.values();
    auto g = params[k].grad.values();
    auto m = state.m[k].values();
    auto v = state.v[k].values();
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = h.beta1 * m[i] + (1.0 - h.beta1) * g[i];
      v[i] = h.beta2 * v[i] + (1.0 - h.beta2) * g[i] * g[i];
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      w[i] -= lr * m_hat / (std::sqrt(v_hat) + h.epsilon);
    }
  }
}

double decayed_lr(double lr0, double decay, std::uint64_t iterations) {
  if (!(lr0 > 0.0)) throw ParameterError("decayed_lr: lr0 must be positive");
  if (decay < 0.0) throw ParameterError("decayed_lr: decay must be nonnegative");
  return lr0 / (1.0 + decay * static_cast<double>(iterations));
}

Matrix dropout_mask(std::size_t rows, std::size_t cols, double rate, Rng& rng, bool training) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw ParameterError("dropout_mask: rate must lie in [0, 1), got " + std::to_string(rate));
  }
  Matrix mask(rows, cols, 1.0);
  if (!training || rate == 0.0) return mask;
  const double keep = 1.0 / (1.0 - rate);
  for (double& v : mask.values()) v = rng.uniform() < rate ? 0.0 : keep;
  return mask;
}

Matrix glorot_uniform(std::size_t rows, std::size_t cols, std::size_t fan_in, std::size_t fan_out,
                      Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Matrix m(rows, cols);
  for (double& v : m.values()) v = rng.uniform(-limit, limit);
  return m;
}

}  // namespace mgcrnn
