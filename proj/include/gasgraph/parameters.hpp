#pragma once

#include <string>
#include <utility>
#include <vector>

#include "gasgraph/tensor.hpp"

namespace gasgraph {

/// Ordered collection of named trainable tensors.
class ParameterSet {
 public:
  /// Registers a tensor (marking it as requiring gradients) and returns it.
  Tensor add(std::string name, Tensor value);

  const Tensor& get(const std::string& name) const;
  bool contains(const std::string& name) const;
  std::size_t size() const { return items_.size(); }
  std::size_t scalar_count() const;

  const std::vector<std::pair<std::string, Tensor>>& items() const { return items_; }
  std::vector<Tensor> tensors() const;

  void zero_grad();
  /// Copies values (not handles) from another set; names and shapes must match.
  void assign_from(const ParameterSet& other);
  /// Deep copy with independent storage.
  ParameterSet clone() const;

 private:
  std::vector<std::pair<std::string, Tensor>> items_;
};

}  // namespace gasgraph
