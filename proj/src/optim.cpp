#include "gasgraph/optim.hpp"

#include <cmath>

#include "gasgraph/errors.hpp"

namespace gasgraph {

void adam_step(std::vector<Tensor>& params, AdamState& state) {
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.emplace_back(p.numel(), 0.0);
      state.v.emplace_back(p.numel(), 0.0);
    }
  }
  if (state.m.size() != params.size()) {
    throw ContractError("Adam state tracks " + std::to_string(state.m.size()) + " parameters, got " +
                        std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i].has_grad()) throw ContractError("adam_step: parameter " + std::to_string(i) + " has no gradient");
    if (state.m[i].size() != params[i].numel()) throw DimensionError("adam_step: moment buffer shape mismatch");
  }

  const auto& c = state.config;
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);
  const double shrink = 1.0 - c.lr * c.weight_decay;

  for (std::size_t i = 0; i < params.size(); ++i) {
    auto w = params[i].mutable_data();
    const auto g = params[i].grad();
    auto& m = state.m[i];
    auto& v = state.v[i];
    for (std::size_t j = 0; j < w.size(); ++j) {
      m[j] = c.beta1 * m[j] + (1.0 - c.beta1) * g[j];
      v[j] = c.beta2 * v[j] + (1.0 - c.beta2) * g[j] * g[j];
      const double m_hat = m[j] / bc1;
      const double v_hat = v[j] / bc2;
      w[j] = w[j] * shrink - c.lr * m_hat / (std::sqrt(v_hat) + c.eps);
    }
  }
}

void adam_step(ParameterSet& params, AdamState& state) {
  auto tensors = params.tensors();
  adam_step(tensors, state);
}

Tensor glorot_init(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  return glorot_init(Shape{fan_in, fan_out}, fan_in, fan_out, rng);
}

Tensor glorot_init(Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  if (fan_in == 0 || fan_out == 0) throw ContractError("glorot_init: fans must be positive");
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::vector<double> data(shape_numel(shape));
  for (auto& x : data) x = rng.uniform(-bound, bound);
  return Tensor(std::move(shape), std::move(data));
}

}  // namespace gasgraph
