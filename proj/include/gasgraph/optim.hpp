#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "gasgraph/parameters.hpp"
#include "gasgraph/rng.hpp"
#include "gasgraph/tensor.hpp"

namespace gasgraph {

struct AdamConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-6;
};

/// First/second moment buffers mirror the parameter list they were created for.
struct AdamState {
  AdamConfig config;
  std::uint64_t step = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;

  explicit AdamState(AdamConfig cfg = {}) : config(cfg) {}
};

/// One Adam update with bias correction and decoupled weight decay:
///   p <- p * (1 - lr*wd) - lr * m_hat / (sqrt(v_hat) + eps)
/// Every parameter must hold a gradient.
void adam_step(std::vector<Tensor>& params, AdamState& state);
void adam_step(ParameterSet& params, AdamState& state);

/// Uniform on +-sqrt(6 / (fan_in + fan_out)), shape (fan_in, fan_out).
Tensor glorot_init(std::size_t fan_in, std::size_t fan_out, Rng& rng);
/// Same bound, arbitrary shape.
Tensor glorot_init(Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng);

}  // namespace gasgraph
