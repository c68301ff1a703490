#pragma once

#include <cstddef>
#include <string>
#include <deque>

#include "mgcrnn/core/matrix.hpp"

namespace mgcrnn {

/// A learnable tensor with its accumulated gradient.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
};

/// Ordered, name-addressable collection of parameters. Insertion order is
/// the canonical order for checkpoints and optimizer state.
class ParameterSet {
 public:
  Parameter& add(std::string name, Matrix init);

  [[nodiscard]] Parameter& at(const std::string& name);
  [[nodiscard]] const Parameter& at(const std::string& name) const;
  [[nodiscard]] const Parameter* find(const std::string& name) const;
  [[nodiscard]] Parameter* find(const std::string& name);

  [[nodiscard]] std::size_t size() const noexcept { return params_.size(); }
  [[nodiscard]] std::size_t scalar_count() const noexcept;

  auto begin() noexcept { return params_.begin(); }
  auto end() noexcept { return params_.end(); }
  auto begin() const noexcept { return params_.begin(); }
  auto end() const noexcept { return params_.end(); }
  Parameter& operator[](std::size_t i) { return params_[i]; }
  const Parameter& operator[](std::size_t i) const { return params_[i]; }

  void zero_grad();

 private:
  std::deque<Parameter> params_;  // stable references across add()
};

}  // namespace mgcrnn
