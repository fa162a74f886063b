#include <gtest/gtest.h>

#include <cmath>

#include "gasgraph/errors.hpp"
#include "gasgraph/gcn.hpp"
#include "gasgraph/gradcheck.hpp"
#include "gasgraph/graphio.hpp"
#include "gasgraph/ops.hpp"

using namespace gasgraph;

namespace {

Tensor random_tensor(Shape shape, Rng& rng) {
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) x = rng.normal();
  return Tensor(std::move(shape), std::move(v));
}

Tensor reverse_rows(const Tensor& x) {
  const std::size_t n = x.dim(0), f = x.dim(1);
  std::vector<double> v(x.numel());
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < f; ++c) v[r * f + c] = x.data()[(n - 1 - r) * f + c];
  }
  return Tensor({n, f}, std::move(v));
}

}  // namespace

TEST(GcnStack, ClassifierCapsuleShape) {
  Rng rng(1);
  ParameterSet params;
  GcnStack gcn(16, 8, 4, params, "gcn", rng);
  const ChainGraph g = build_chain_graph(random_tensor({10, 16}, rng));
  const Tensor s = stack_capsules(gcn.forward(g.normalized, g.x));
  EXPECT_EQ(s.shape(), (Shape{4, 10, 8}));
}

TEST(GcnStack, RegressorConcatShape) {
  Rng rng(2);
  ParameterSet params;
  GcnStack gcn(8, 3, 16, params, "gcn", rng);
  const ChainGraph g = build_chain_graph(random_tensor({2000, 8}, rng));
  const Tensor x = concat_layers(gcn.forward(g.normalized, g.x));
  EXPECT_EQ(x.shape(), (Shape{2000, 48}));
}

TEST(GcnStack, SingleNodeIdentityPropagation) {
  Rng rng(3);
  ParameterSet params;
  GcnStack gcn(3, 3, 2, params, "gcn", rng);
  for (const auto& w : gcn.weights()) {
    auto d = const_cast<Tensor&>(w).mutable_data();
    for (std::size_t i = 0; i < 9; ++i) d[i] = i % 4 == 0 ? 1.0 : 0.0;
  }
  // Positive features pass the hidden ReLU unchanged.
  const Tensor x({1, 3}, {0.5, 1.5, 2.5});
  const ChainGraph g = build_chain_graph(x);
  for (const auto& out : gcn.forward(g.normalized, g.x)) {
    for (std::size_t i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(out.data()[i], x.data()[i]);
  }
}

TEST(GcnStack, WrongFeatureCountIsDimensionError) {
  Rng rng(4);
  ParameterSet params;
  GcnStack gcn(16, 8, 2, params, "gcn", rng);
  const ChainGraph g = build_chain_graph(random_tensor({5, 8}, rng));
  EXPECT_THROW(gcn.forward(g.normalized, g.x), DimensionError);
}

TEST(GcnStack, ReversalSymmetry) {
  Rng rng(5);
  ParameterSet params;
  GcnStack gcn(6, 5, 3, params, "gcn", rng);
  for (const auto& b : gcn.biases()) {
    for (auto& v : const_cast<Tensor&>(b).mutable_data()) v = 0.1 * rng.normal();
  }
  const Tensor x = random_tensor({23, 6}, rng);
  const ChainGraph g = build_chain_graph(x);
  const ChainGraph r = build_chain_graph(reverse_rows(x));
  const auto a = gcn.forward(g.normalized, g.x);
  const auto b = gcn.forward(r.normalized, r.x);
  for (std::size_t l = 0; l < a.size(); ++l) {
    const Tensor back = reverse_rows(b[l]);
    for (std::size_t i = 0; i < back.numel(); ++i) EXPECT_NEAR(back.data()[i], a[l].data()[i], 1e-12);
  }
}

TEST(GcnStack, ParameterCountIndependentOfNodes) {
  Rng rng(6);
  ParameterSet params;
  GcnStack gcn(16, 8, 4, params, "gcn", rng);
  EXPECT_EQ(params.scalar_count(), 16u * 8 + 8 + 3 * (8 * 8 + 8));
}

TEST(AttentionBlock, UniformAttentionIsIdentity) {
  Rng rng(7);
  ParameterSet params;
  AttentionBlock block(4, 8, params, "att", rng);
  EXPECT_EQ(block.hidden(), 16u);
  for (auto& v : const_cast<Tensor&>(block.w2()).mutable_data()) v = 0.0;
  const Tensor s = random_tensor({4, 11, 8}, rng);
  const auto out = block.forward(s);
  ASSERT_EQ(out.capsules.shape(), s.shape());
  for (std::size_t i = 0; i < s.numel(); ++i) EXPECT_EQ(out.capsules.data()[i], s.data()[i]);
}

TEST(AttentionBlock, WeightsAreProbabilityVectors) {
  Rng rng(8);
  ParameterSet params;
  AttentionBlock block(4, 8, params, "att", rng);
  for (std::size_t n : {1u, 7u, 50u}) {
    const auto out = block.forward(scale(random_tensor({4, n, 8}, rng), 3.0));
    EXPECT_EQ(out.capsules.shape(), (Shape{4, n, 8}));
    ASSERT_EQ(out.weights.shape(), (Shape{n, 4}));
    const Tensor rows = sum(out.weights, 1);
    for (double v : rows.data()) EXPECT_NEAR(v, 1.0, 1e-12);
  }
}

TEST(AttentionBlock, ConcentratedAttentionSuppressesOtherLayers) {
  Rng rng(9);
  ParameterSet params;
  AttentionBlock block(4, 8, params, "att", rng);
  for (auto& v : const_cast<Tensor&>(block.w2()).mutable_data()) v = 0.0;
  auto b2 = const_cast<Tensor&>(block.b2()).mutable_data();
  b2[0] = 40.0;
  const Tensor s = random_tensor({4, 5, 8}, rng);
  const auto out = block.forward(s);
  for (std::size_t l = 1; l < 4; ++l) {
    for (std::size_t i = 0; i < 40; ++i) EXPECT_LT(std::abs(out.capsules.data()[l * 40 + i]), 1e-15);
  }
  for (std::size_t i = 0; i < 40; ++i) EXPECT_NEAR(out.capsules.data()[i], 4.0 * s.data()[i], 1e-12);
}

TEST(AttentionBlock, GradientCheck) {
  Rng rng(10);
  ParameterSet params;
  AttentionBlock block(3, 4, params, "att", rng);
  Tensor s = random_tensor({3, 6, 4}, rng);
  s.set_requires_grad(true);
  const Tensor proj = random_tensor({3, 6, 4}, rng);
  auto fn = [&] { return sum(mul(block.forward(s).capsules, proj)); };
  std::vector<Tensor> inputs = params.tensors();
  for (auto& t : inputs) {
    for (auto& v : t.mutable_data()) v += 0.1 * rng.normal();
  }
  inputs.push_back(s);
  EXPECT_LT(gradient_check(fn, inputs, 1e-5, 1e-5).max_rel_error, 1e-4);
}
