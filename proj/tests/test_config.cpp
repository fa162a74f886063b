#include <gtest/gtest.h>

#include <filesystem>

#include "gasgraph/config.hpp"
#include "gasgraph/errors.hpp"
#include "gasgraph/synthetic.hpp"
#include "gasgraph/training.hpp"

using namespace gasgraph;

TEST(RunConfig, DefaultsMatchHyperparameterTable) {
  const RunConfig c;
  EXPECT_EQ(c.classifier_epochs, 200u);
  EXPECT_EQ(c.regressor_epochs, 1000u);
  EXPECT_EQ(c.train_batch_size, 16u);
  EXPECT_EQ(c.val_batch_size, 16u);
  EXPECT_EQ(c.test_batch_size, 4u);
  EXPECT_EQ(c.adam.lr, 0.001);
  EXPECT_EQ(c.adam.weight_decay, 1e-6);
  EXPECT_EQ(c.test_fraction, 0.16);
  EXPECT_EQ(c.folds, 5u);
  EXPECT_EQ(c.capsnet.gcn_layers, 4u);
  EXPECT_EQ(c.capsnet.gcn_filters, 8u);
  EXPECT_EQ(c.capsnet.feature_caps, 32u);
  EXPECT_EQ(c.capsnet.caps_dim, 16u);
  EXPECT_EQ(c.capsnet.routing_iters, 3u);
  EXPECT_EQ(c.capsnet.theta, 0.0005);
  EXPECT_EQ(c.capsnet.m_plus, 0.9);
  EXPECT_EQ(c.capsnet.m_minus, 0.1);
  EXPECT_EQ(c.capsnet.lambda, 0.5);
  EXPECT_EQ(c.attnet.gcn_layers, 16u);
  EXPECT_EQ(c.attnet.gcn_filters, 3u);
  EXPECT_EQ(c.attnet.width(), 48u);
  EXPECT_EQ(c.attnet.blocks, 18u);
  EXPECT_EQ(c.attnet.heads, 2u);
  EXPECT_EQ(c.attnet.pooled_nodes, 300u);
  EXPECT_FALSE(c.attnet.positional_encoding);
  EXPECT_TRUE(c.attnet.final_norm);
}

TEST(RunConfig, JsonRoundTrip) {
  RunConfig c;
  c.task = "regress";
  c.seed = 99;
  c.attnet.blocks = 2;
  c.capsnet.theta = 0.01;
  c.adam.lr = 0.005;
  const RunConfig back = RunConfig::from_json(c.to_json());
  EXPECT_EQ(back.to_json(), c.to_json());
  EXPECT_EQ(back.epochs(), 1000u);
}

TEST(RunConfig, PartialJsonKeepsDefaults) {
  const RunConfig c = RunConfig::from_json({{"capsnet", {{"theta", 0.1}}}});
  EXPECT_EQ(c.capsnet.theta, 0.1);
  EXPECT_EQ(c.capsnet.feature_caps, 32u);
  EXPECT_EQ(c.classifier_epochs, 200u);
}

TEST(RunConfig, UnknownKeysAreRejected) {
  EXPECT_THROW(RunConfig::from_json({{"epochz", 3}}), ContractError);
  EXPECT_THROW(RunConfig::from_json({{"training", {{"lr", 0.1}}}}), ContractError);
  EXPECT_THROW(RunConfig::from_json({{"capsnet", {{"routing", 3}}}}), ContractError);
}

TEST(RunConfig, InvalidValuesAreRejected) {
  EXPECT_THROW(RunConfig::from_json({{"task", "cluster"}}), ContractError);
  EXPECT_THROW(RunConfig::from_json({{"attnet", {{"heads", 5}}}}), ContractError);
  EXPECT_THROW(RunConfig::from_json({{"training", {{"learning_rate", "fast"}}}}), ContractError);
}

TEST(RunConfig, SaveLoad) {
  RunConfig c;
  c.seed = 1234;
  const auto path = std::filesystem::temp_directory_path() / "gasgraph_config.json";
  c.save(path);
  EXPECT_EQ(RunConfig::load(path).to_json(), c.to_json());
}

TEST(Training, BatchesCoverOrder) {
  const std::vector<std::size_t> order{5, 3, 9, 1, 0, 2, 8};
  const auto batches = make_batches(order, 3);
  ASSERT_EQ(batches.size(), 3u);
  EXPECT_EQ(batches[2], (std::vector<std::size_t>{8}));
  std::vector<std::size_t> flat;
  for (const auto& b : batches) flat.insert(flat.end(), b.begin(), b.end());
  EXPECT_EQ(flat, order);
}

TEST(Training, ParallelFoldsPropagateErrors) {
  EXPECT_THROW(run_folds(4, true,
                         [](std::size_t f) {
                           if (f == 2) throw NumericError("boom");
                         }),
               NumericError);
}

TEST(Synthetic, CorporaAreSeedDeterministic) {
  const Corpus a = synthetic_classification({}, 3), b = synthetic_classification({}, 3);
  ASSERT_EQ(a.samples.size(), 120u);
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    EXPECT_EQ(a.samples[i].label, b.samples[i].label);
    EXPECT_TRUE(std::equal(a.samples[i].features.data().begin(), a.samples[i].features.data().end(),
                           b.samples[i].features.data().begin()));
    EXPECT_EQ(a.samples[i].num_channels(), 8u);
    EXPECT_GE(a.samples[i].num_nodes(), 180u);
    EXPECT_LE(a.samples[i].num_nodes(), 220u);
  }
}
