#include "gasgraph/parameters.hpp"

#include <algorithm>

#include "gasgraph/errors.hpp"

namespace gasgraph {

Tensor ParameterSet::add(std::string name, Tensor value) {
  if (contains(name)) throw ContractError("duplicate parameter name '" + name + "'");
  value.set_requires_grad(true);
  items_.emplace_back(std::move(name), value);
  return value;
}

const Tensor& ParameterSet::get(const std::string& name) const {
  for (const auto& [n, t] : items_) {
    if (n == name) return t;
  }
  throw ContractError("unknown parameter '" + name + "'");
}

bool ParameterSet::contains(const std::string& name) const {
  return std::any_of(items_.begin(), items_.end(), [&](const auto& it) { return it.first == name; });
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [_, t] : items_) n += t.numel();
  return n;
}

std::vector<Tensor> ParameterSet::tensors() const {
  std::vector<Tensor> out;
  out.reserve(items_.size());
  for (const auto& [_, t] : items_) out.push_back(t);
  return out;
}

void ParameterSet::zero_grad() {
  for (auto& [_, t] : items_) t.zero_grad();
}

void ParameterSet::assign_from(const ParameterSet& other) {
  if (other.size() != size()) {
    throw ContractError("parameter count mismatch: " + std::to_string(size()) + " vs " +
                        std::to_string(other.size()));
  }
  for (auto& [name, t] : items_) {
    const Tensor& src = other.get(name);
    if (src.shape() != t.shape()) {
      throw DimensionError("parameter '" + name + "' has shape " + shape_to_string(t.shape()) + ", source has " +
                           shape_to_string(src.shape()));
    }
    std::copy(src.data().begin(), src.data().end(), t.mutable_data().begin());
  }
}

ParameterSet ParameterSet::clone() const {
  ParameterSet out;
  for (const auto& [name, t] : items_) out.add(name, t.detach());
  return out;
}

}  // namespace gasgraph
