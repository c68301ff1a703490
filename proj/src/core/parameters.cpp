#include "mgcrnn/core/parameters.hpp"

#include "mgcrnn/core/errors.hpp"

namespace mgcrnn {

Parameter& ParameterSet::add(std::string name, Matrix init) {
  if (find(name) != nullptr) throw ConfigError("duplicate parameter name '" + name + "'");
  Matrix grad(init.rows(), init.cols());
  params_.push_back(Parameter{std::move(name), std::move(init), std::move(grad)});
  return params_.back();
}

Parameter* ParameterSet::find(const std::string& name) {
  for (auto& p : params_)
    if (p.name == name) return &p;
  return nullptr;
}

const Parameter* ParameterSet::find(const std::string& name) const {
  for (const auto& p : params_)
    if (p.name == name) return &p;
  return nullptr;
}

Parameter& ParameterSet::at(const std::string& name) {
  if (auto* p = find(name)) return *p;
  throw ConfigError("unknown parameter '" + name + "'");
}

const Parameter& ParameterSet::at(const std::string& name) const {
  if (const auto* p = find(name)) return *p;
  throw ConfigError("unknown parameter '" + name + "'");
}

std::size_t ParameterSet::scalar_count() const noexcept {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

void ParameterSet::zero_grad() {
  for (auto& p : params_) p.grad.fill(0.0);
}

}  // namespace mgcrnn
