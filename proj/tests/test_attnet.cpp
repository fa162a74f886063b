#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "gasgraph/attnet.hpp"
#include "gasgraph/errors.hpp"
#include "gasgraph/ops.hpp"
#include "gasgraph/synthetic.hpp"

using namespace gasgraph;

namespace {

Tensor random_tensor(Shape shape, Rng& rng) {
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) x = rng.normal();
  return Tensor(std::move(shape), std::move(v));
}

AttNetConfig tiny_config() {
  AttNetConfig c;
  c.gcn_layers = 2;
  c.gcn_filters = 4;
  c.pooled_nodes = 10;
  c.blocks = 2;
  c.mlp_ratio = 2;
  return c;
}

Tensor permute_rows_after_first(const Tensor& x, const std::vector<std::size_t>& perm) {
  const std::size_t w = x.dim(1);
  std::vector<double> v(x.data().begin(), x.data().end());
  for (std::size_t r = 0; r < perm.size(); ++r) {
    for (std::size_t c = 0; c < w; ++c) v[(r + 1) * w + c] = x.data()[(perm[r] + 1) * w + c];
  }
  return Tensor(x.shape(), std::move(v));
}

}  // namespace

// ---------------------------------------------------------------------------
// pooling and token

TEST(PoolNodes, TwoToOneAveragesConsecutivePairs) {
  Rng rng(1);
  const Tensor x = random_tensor({600, 3}, rng);
  const Tensor p = pool_nodes(x, 300);
  ASSERT_EQ(p.shape(), (Shape{300, 3}));
  for (std::size_t r = 0; r < 300; ++r) {
    for (std::size_t c = 0; c < 3; ++c) {
      EXPECT_NEAR(p.at({r, c}), 0.5 * (x.at({2 * r, c}) + x.at({2 * r + 1, c})), 1e-15);
    }
  }
}

TEST(PoolNodes, SameSizeIsIdentity) {
  Rng rng(2);
  const Tensor x = random_tensor({300, 4}, rng);
  const Tensor p = pool_nodes(x, 300);
  EXPECT_TRUE(std::equal(x.data().begin(), x.data().end(), p.data().begin()));
}

TEST(PoolNodes, FewNodesAreRepeated) {
  Rng rng(3);
  const Tensor x = random_tensor({5, 2}, rng);
  const Tensor p = pool_nodes(x, 300);
  ASSERT_EQ(p.dim(0), 300u);
  for (std::size_t r = 0; r < 300; ++r) {
    EXPECT_EQ(p.at({r, 0}), x.at({r / 60, 0}));
    EXPECT_EQ(p.at({r, 1}), x.at({r / 60, 1}));
  }
}

TEST(PoolNodes, PreservesChunkWeightedMean) {
  Rng rng(4);
  for (std::size_t n : {300u, 600u, 301u, 457u, 1999u}) {
    const Tensor x = random_tensor({n, 2}, rng);
    const Tensor p = pool_nodes(x, 300);
    for (std::size_t c = 0; c < 2; ++c) {
      double in = 0.0, out = 0.0, plain = 0.0;
      for (std::size_t i = 0; i < n; ++i) in += x.at({i, c});
      for (std::size_t r = 0; r < 300; ++r) {
        const double size = static_cast<double>((r + 1) * n / 300 - r * n / 300);
        out += size * p.at({r, c});
        plain += p.at({r, c});
      }
      EXPECT_NEAR(out / n, in / n, 1e-9);
      if (n % 300 == 0) {
        EXPECT_NEAR(plain / 300, in / n, 1e-12);
      }
    }
  }
}

TEST(PrependToken, RowZeroIsToken) {
  const Tensor pooled = Tensor::zeros({300, 48});
  Rng rng(5);
  const Tensor token = random_tensor({1, 48}, rng);
  const Tensor x = prepend_token(pooled, token);
  ASSERT_EQ(x.shape(), (Shape{301, 48}));
  for (std::size_t c = 0; c < 48; ++c) EXPECT_EQ(x.at({0, c}), token.data()[c]);
  for (std::size_t i = 48; i < x.numel(); ++i) EXPECT_EQ(x.data()[i], 0.0);
}

TEST(PrependToken, TokenReceivesGradient) {
  Rng rng(6);
  GraphANet model(tiny_config(), 2);
  const ChainGraph g = build_chain_graph(random_tensor({25, 8}, rng));
  backward(sum(square(model.forward(g))));
  ASSERT_TRUE(model.token().has_grad());
  double norm = 0.0;
  for (double v : model.token().grad()) norm += v * v;
  EXPECT_GT(norm, 0.0);
}

// ---------------------------------------------------------------------------
// attention and encoder

TEST(MultiHeadAttention, RowsSumToOnePerHead) {
  Rng rng(7);
  ParameterSet params;
  MultiHeadAttention mha(48, 2, params, "mha", rng);
  const auto out = mha.forward(random_tensor({301, 48}, rng));
  ASSERT_EQ(out.weights.shape(), (Shape{2, 301, 301}));
  EXPECT_EQ(out.out.shape(), (Shape{301, 48}));
  const Tensor rows = sum(out.weights, 2);
  for (double v : rows.data()) EXPECT_NEAR(v, 1.0, 1e-12);
}

TEST(MultiHeadAttention, IndivisibleWidthIsContractError) {
  Rng rng(8);
  ParameterSet params;
  EXPECT_THROW(MultiHeadAttention(10, 3, params, "mha", rng), ContractError);
}

TEST(EncoderBlock, IdenticalRowsGiveIdenticalOutputs) {
  Rng rng(9);
  ParameterSet params;
  EncoderBlock block(16, 2, 4, params, "b", rng);
  const Tensor row = random_tensor({1, 16}, rng);
  std::vector<double> v;
  for (int r = 0; r < 12; ++r) v.insert(v.end(), row.data().begin(), row.data().end());
  const Tensor out = block.forward(Tensor({12, 16}, v)).out;
  for (std::size_t r = 1; r < 12; ++r) {
    for (std::size_t c = 0; c < 16; ++c) EXPECT_NEAR(out.at({r, c}), out.at({0, c}), 1e-13);
  }
}

TEST(EncoderBlock, TokenOutputInvariantToPooledRowOrder) {
  Rng rng(10);
  ParameterSet params;
  EncoderBlock block(16, 2, 4, params, "b", rng);
  const Tensor x = random_tensor({21, 16}, rng);
  std::vector<std::size_t> perm(20);
  for (std::size_t i = 0; i < 20; ++i) perm[i] = i;
  rng.shuffle(perm);
  const Tensor a = block.forward(x).out;
  const Tensor b = block.forward(permute_rows_after_first(x, perm)).out;
  for (std::size_t c = 0; c < 16; ++c) EXPECT_NEAR(a.at({0, c}), b.at({0, c}), 1e-12);
  for (std::size_t r = 0; r < 20; ++r) {
    for (std::size_t c = 0; c < 16; ++c) EXPECT_NEAR(b.at({r + 1, c}), a.at({perm[r] + 1, c}), 1e-12);
  }
}

// ---------------------------------------------------------------------------
// model

TEST(GraphANet, FullScaleRegressOutput) {
  Rng rng(11);
  GraphANet model(AttNetConfig{}, 3);
  EXPECT_EQ(model.config().width(), 48u);
  const ChainGraph g = build_chain_graph(random_tensor({350, 8}, rng));
  const auto a = model.regress(g);
  const auto b = model.regress(g);
  EXPECT_EQ(a, b);
  for (double v : a) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(GraphANet, CheckpointRoundTrip) {
  Rng rng(12);
  GraphANet model(tiny_config(), 5);
  const Checkpoint ck = model.to_checkpoint({"CO", "C2H4"}, {500, 100}, 5, 0);
  const GraphANet back = GraphANet::from_checkpoint(ck);
  NoGradGuard guard;
  const ChainGraph g = build_chain_graph(random_tensor({40, 8}, rng));
  const Tensor a = model.forward(g), b = back.forward(g);
  EXPECT_EQ(a.data()[0], b.data()[0]);
  EXPECT_EQ(a.data()[1], b.data()[1]);
}

// ---------------------------------------------------------------------------
// loss and data

TEST(RmseLoss, HandCases) {
  const Tensor t({1, 2}, {0.5, 0.5});
  EXPECT_EQ(rmse_loss(t, t).item(), 0.0);
  EXPECT_NEAR(rmse_loss(Tensor({1, 2}, {0.8, 0.9}), t).item(), 0.35355339059327373, 1e-9);
}

TEST(RmseLoss, HomogeneousAndMatchesScalarImplementation) {
  Rng rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t s = 1 + rng.below(16);
    const Tensor p = random_tensor({s, 2}, rng), t = random_tensor({s, 2}, rng);
    double se = 0.0;
    for (std::size_t i = 0; i < 2 * s; ++i) se += (p.data()[i] - t.data()[i]) * (p.data()[i] - t.data()[i]);
    const double loss = rmse_loss(p, t).item();
    EXPECT_NEAR(loss, std::sqrt(se / (2.0 * s)), 1e-12);
    const Tensor p2 = add(t, scale(sub(p, t), 2.0));
    EXPECT_NEAR(rmse_loss(p2, t).item(), 2.0 * loss, 1e-12);
  }
}

TEST(RegressorData, PureSamplesHaveZeroAbsentTarget) {
  SyntheticRegressionConfig sc;
  sc.samples = 9;
  const Corpus c = synthetic_regression(sc, 1);
  const RegressorData d = prepare_regressor_data(c.samples, {500, 100}, c.gases);
  for (std::size_t i = 0; i < d.targets.size(); ++i) {
    if (d.subsets[i] == "pure") {
      EXPECT_TRUE(d.targets[i][0] == 0.0 || d.targets[i][1] == 0.0);
    } else {
      EXPECT_GT(d.targets[i][0], 0.0);
      EXPECT_GT(d.targets[i][1], 0.0);
    }
    for (double v : d.targets[i]) EXPECT_LE(v, 1.0);
  }
  EXPECT_EQ(regression_subset({0.0, 3.0}), "pure");
  EXPECT_EQ(regression_subset({1.0, 3.0}), "mixed");
}

TEST(TrainRegressor, DeterministicAndPredictionFile) {
  SyntheticRegressionConfig sc;
  sc.samples = 30;
  sc.min_nodes = 15;
  sc.max_nodes = 20;
  const Corpus c = synthetic_regression(sc, 2);
  const RegressorData data = prepare_regressor_data(c.samples, sc.max_ppm, c.gases);
  const SplitPlan split = stratified_split(c.samples, 0.16, 5, 2);
  TrainOptions opts;
  opts.epochs = 2;
  opts.max_folds = 1;
  opts.batch_size = 4;
  opts.seed = 9;
  const auto a = train_regressor(data, split, tiny_config(), opts);
  const auto b = train_regressor(data, split, tiny_config(), opts);
  ASSERT_EQ(a.history.size(), 2u);
  for (std::size_t e = 0; e < 2; ++e) {
    EXPECT_EQ(a.history[e].train_rmse, b.history[e].train_rmse);
    EXPECT_EQ(a.history[e].val_rmse, b.history[e].val_rmse);
  }

  const GraphANet model = GraphANet::from_checkpoint(a.checkpoint);
  const auto ev = evaluate_regressor(model, data, split.test);
  std::vector<PredictionRow> rows;
  for (std::size_t k = 0; k < split.test.size(); ++k) {
    const auto i = split.test[k];
    rows.push_back({i, data.subsets[i], data.targets[i], ev.predictions[k]});
  }
  const auto path = std::filesystem::temp_directory_path() / "gasgraph_predictions.csv";
  write_predictions_csv(rows, path);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "sample_id,subset,gas1_true,gas1_pred,gas2_true,gas2_pred");
  std::size_t count = 0;
  while (std::getline(in, line)) {
    ++count;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 5);
  }
  EXPECT_EQ(count, split.test.size());
}
