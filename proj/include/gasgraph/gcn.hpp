#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "gasgraph/parameters.hpp"
#include "gasgraph/rng.hpp"
#include "gasgraph/sparse.hpp"
#include "gasgraph/tensor.hpp"

namespace gasgraph {

/// Stack of graph-convolution layers H' = act(A_hat H W + b).
///
/// Hidden layers use ReLU; the last layer is linear. Every layer has the same
/// width (`filters`), and the per-layer outputs are all returned so callers can
/// stack them (capsules) or concatenate them (node embeddings).
class GcnStack {
 public:
  GcnStack() = default;
  GcnStack(std::size_t in_dim, std::size_t filters, std::size_t layers, ParameterSet& params,
           const std::string& prefix, Rng& rng);

  std::vector<Tensor> forward(const SparseMatrix& a_hat, const Tensor& x) const;

  std::size_t in_dim() const { return in_dim_; }
  std::size_t filters() const { return filters_; }
  std::size_t layers() const { return weights_.size(); }
  const std::vector<Tensor>& weights() const { return weights_; }
  const std::vector<Tensor>& biases() const { return biases_; }

 private:
  std::size_t in_dim_ = 0;
  std::size_t filters_ = 0;
  std::vector<Tensor> weights_;
  std::vector<Tensor> biases_;
};

/// Layer outputs stacked into graph capsules of shape (L_g, N, d).
Tensor stack_capsules(const std::vector<Tensor>& layer_outputs);
/// Layer outputs concatenated per node into shape (N, L_g * d).
Tensor concat_layers(const std::vector<Tensor>& layer_outputs);

/// Re-weights stacked graph capsules by a learned per-node distribution over
/// GCN layers.
///
/// For each node the L_g capsules are flattened to one vector, passed through
/// FC(L_g*d -> L_g*d/2, tanh) and FC(-> L_g), and softmaxed over layers. Layer
/// l's capsule is then scaled by L_g * attention_l, so uniform attention leaves
/// S unchanged.
class AttentionBlock {
 public:
  struct Output {
    Tensor capsules;  // (L_g, N, d)
    Tensor weights;   // (N, L_g), rows sum to 1
  };

  AttentionBlock() = default;
  AttentionBlock(std::size_t layers, std::size_t dim, ParameterSet& params, const std::string& prefix, Rng& rng);

  Output forward(const Tensor& capsules) const;

  std::size_t hidden() const { return hidden_; }
  const Tensor& w1() const { return w1_; }
  const Tensor& b1() const { return b1_; }
  const Tensor& w2() const { return w2_; }
  const Tensor& b2() const { return b2_; }

 private:
  std::size_t layers_ = 0;
  std::size_t dim_ = 0;
  std::size_t hidden_ = 0;
  Tensor w1_, b1_, w2_, b2_;
};

/// x W + b with b broadcast over rows.
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);

}  // namespace gasgraph
