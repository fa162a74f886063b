#include "gasgraph/gcn.hpp"

#include "gasgraph/errors.hpp"
#include "gasgraph/ops.hpp"
#include "gasgraph/optim.hpp"

namespace gasgraph {

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) { return add(matmul(x, w), b); }

GcnStack::GcnStack(std::size_t in_dim, std::size_t filters, std::size_t layers, ParameterSet& params,
                   const std::string& prefix, Rng& rng)
    : in_dim_(in_dim), filters_(filters) {
  if (in_dim == 0 || filters == 0 || layers == 0) throw ContractError("GCN dimensions must be positive");
  std::size_t fan_in = in_dim;
  for (std::size_t l = 0; l < layers; ++l) {
    const std::string tag = prefix + ".layer" + std::to_string(l);
    weights_.push_back(params.add(tag + ".weight", glorot_init(fan_in, filters, rng)));
    biases_.push_back(params.add(tag + ".bias", Tensor::zeros({filters})));
    fan_in = filters;
  }
}

std::vector<Tensor> GcnStack::forward(const SparseMatrix& a_hat, const Tensor& x) const {
  if (x.rank() != 2 || x.dim(1) != in_dim_) {
    throw DimensionError("GCN expects node features (N, " + std::to_string(in_dim_) + "), got " +
                         shape_to_string(x.shape()));
  }
  if (a_hat.rows != x.dim(0) || a_hat.cols != x.dim(0)) {
    throw DimensionError("adjacency (" + std::to_string(a_hat.rows) + "," + std::to_string(a_hat.cols) +
                         ") does not match " + std::to_string(x.dim(0)) + " nodes");
  }
  std::vector<Tensor> outputs;
  Tensor h = x;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    // A_hat (H W) is cheaper than (A_hat H) W when the layer narrows.
    Tensor z = add(spmm(a_hat, matmul(h, weights_[l])), biases_[l]);
    h = l + 1 < weights_.size() ? relu(z) : z;
    outputs.push_back(h);
  }
  return outputs;
}

Tensor stack_capsules(const std::vector<Tensor>& layer_outputs) { return stack(layer_outputs); }

Tensor concat_layers(const std::vector<Tensor>& layer_outputs) { return concat(layer_outputs, 1); }

AttentionBlock::AttentionBlock(std::size_t layers, std::size_t dim, ParameterSet& params, const std::string& prefix,
                               Rng& rng)
    : layers_(layers), dim_(dim), hidden_(std::max<std::size_t>(1, layers * dim / 2)) {
  const std::size_t flat = layers * dim;
  w1_ = params.add(prefix + ".fc1.weight", glorot_init(flat, hidden_, rng));
  b1_ = params.add(prefix + ".fc1.bias", Tensor::zeros({hidden_}));
  w2_ = params.add(prefix + ".fc2.weight", glorot_init(hidden_, layers, rng));
  b2_ = params.add(prefix + ".fc2.bias", Tensor::zeros({layers}));
}

AttentionBlock::Output AttentionBlock::forward(const Tensor& capsules) const {
  if (capsules.rank() != 3 || capsules.dim(0) != layers_ || capsules.dim(2) != dim_) {
    throw DimensionError("attention block expects capsules (" + std::to_string(layers_) + ", N, " +
                         std::to_string(dim_) + "), got " + shape_to_string(capsules.shape()));
  }
  const std::size_t n = capsules.dim(1);
  Tensor per_node = swap_axes(capsules, 0, 1);  // (N, L, d)
  Tensor flat = reshape(per_node, {n, layers_ * dim_});
  Tensor logits = linear(tanh(linear(flat, w1_, b1_)), w2_, b2_);
  Tensor weights = softmax(logits, 1);
  Tensor gain = reshape(scale(weights, static_cast<double>(layers_)), {n, layers_, 1});
  Tensor scaled = mul(per_node, gain);
  return {swap_axes(scaled, 0, 1), weights};
}

}  // namespace gasgraph
