#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace gasgraph {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_to_string(const Shape& shape);

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> data;
  // Empty until the first gradient contribution arrives.
  std::vector<double> grad;
  bool requires_grad = false;

  std::vector<double>& ensure_grad() {
    if (grad.empty()) grad.assign(data.size(), 0.0);
    return grad;
  }
};

using NodePtr = std::shared_ptr<Node>;

}  // namespace detail

/// Dense row-major tensor of doubles with an optional gradient slot.
///
/// A Tensor is a cheap handle; copies share storage. Results of operations
/// are never modified after creation. Leaves that require gradients
/// (parameters) are updated in place by the optimizer through mutable_data().
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<double> data, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);
  static Tensor from_node(detail::NodePtr node);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const;

  std::span<const double> data() const;
  std::span<double> mutable_data();
  double item() const;
  double at(std::initializer_list<std::size_t> index) const;

  bool requires_grad() const;
  Tensor& set_requires_grad(bool on);
  bool has_grad() const;
  std::span<const double> grad() const;
  std::span<double> mutable_grad();
  /// Sets the gradient buffer to zeros (allocating it if needed).
  void zero_grad();
  void clear_grad();

  /// Value copy with no gradient history.
  Tensor detach() const;

  const detail::NodePtr& node() const { return node_; }

 private:
  detail::NodePtr node_;
};

/// Ordered record of taped primitives for the current thread.
///
/// Entries are appended during the forward pass whenever an operand requires a
/// gradient and recording is enabled. Because each entry is appended after its
/// inputs exist, the tape is always in topological order.
class ComputeTape {
 public:
  struct Entry {
    std::string op;
    detail::NodePtr output;
    std::vector<detail::NodePtr> inputs;
    std::function<void()> backward;
  };

  static ComputeTape& current();

  void record(Entry entry) { entries_.push_back(std::move(entry)); }
  std::size_t size() const { return entries_.size(); }
  const std::vector<Entry>& entries() const { return entries_; }
  void clear() { entries_.clear(); }

 private:
  std::vector<Entry> entries_;
};

bool grad_enabled();

/// Disables taping on this thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

/// Reverse pass from a scalar loss. Gradients accumulate into every leaf that
/// requires them; the tape is cleared afterwards.
void backward(const Tensor& loss);

}  // namespace gasgraph
