#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gasgraph/checkpoint.hpp"
#include "gasgraph/gcn.hpp"
#include "gasgraph/graphio.hpp"
#include "gasgraph/training.hpp"

namespace gasgraph {

/// Architecture of the attention regressor. Defaults are the full-size model.
struct AttNetConfig {
  std::size_t in_features = 8;
  std::size_t gcn_layers = 16;  // L_g
  std::size_t gcn_filters = 3;  // F_g
  std::size_t pooled_nodes = 300;
  std::size_t blocks = 18;  // L
  std::size_t heads = 2;
  std::size_t mlp_ratio = 4;
  bool final_norm = true;
  bool positional_encoding = false;

  /// Token width D = L_g * F_g.
  std::size_t width() const { return gcn_layers * gcn_filters; }

  nlohmann::json to_json() const;
  static AttNetConfig from_json(const nlohmann::json& j);
};

/// Constant (pooled x n) averaging operator. For n >= pooled, row r is the
/// mean of nodes [floor(r n / pooled), floor((r+1) n / pooled)); otherwise row
/// r copies node floor(r n / pooled).
SparseMatrix pooling_matrix(std::size_t n, std::size_t pooled);
Tensor pool_nodes(const Tensor& x, std::size_t pooled);

/// Row 0 = token (1, D), rows 1.. = pooled.
Tensor prepend_token(const Tensor& pooled, const Tensor& token);

/// Fixed sine/cosine table of shape (rows, width).
Tensor sinusoidal_encoding(std::size_t rows, std::size_t width);

/// Affine layer normalization over the last axis.
class LayerNorm {
 public:
  LayerNorm() = default;
  LayerNorm(std::size_t width, ParameterSet& params, const std::string& prefix);
  Tensor forward(const Tensor& x) const;

 private:
  Tensor gamma_, beta_;
};

class MultiHeadAttention {
 public:
  struct Output {
    Tensor out;      // (T, D)
    Tensor weights;  // (H, T, T), rows sum to 1
  };

  MultiHeadAttention() = default;
  MultiHeadAttention(std::size_t width, std::size_t heads, ParameterSet& params, const std::string& prefix, Rng& rng);
  Output forward(const Tensor& x) const;

 private:
  std::size_t width_ = 0;
  std::size_t heads_ = 0;
  Tensor wq_, bq_, wk_, bk_, wv_, bv_, wo_, bo_;
};

/// Pre-norm block: x + MHA(LN(x)), then x + MLP(LN(x)) with a GELU MLP.
class EncoderBlock {
 public:
  struct Output {
    Tensor out;
    Tensor attention;
  };

  EncoderBlock() = default;
  EncoderBlock(std::size_t width, std::size_t heads, std::size_t mlp_ratio, ParameterSet& params,
               const std::string& prefix, Rng& rng);
  Output forward(const Tensor& x) const;

 private:
  LayerNorm ln1_, ln2_;
  MultiHeadAttention attn_;
  Tensor w1_, b1_, w2_, b2_;
};

class GraphANet {
 public:
  explicit GraphANet(const AttNetConfig& config, std::uint64_t init_seed);

  /// Raw head output (2), unclamped.
  Tensor forward(const ChainGraph& graph) const;
  /// Head output clamped to [0, 1].
  std::array<double, 2> regress(const ChainGraph& graph) const;

  const AttNetConfig& config() const { return config_; }
  ParameterSet& parameters() { return params_; }
  const ParameterSet& parameters() const { return params_; }
  const Tensor& token() const { return token_; }

  Checkpoint to_checkpoint(const std::array<std::string, 2>& gases, const std::array<double, 2>& maxima,
                           std::uint64_t seed, std::uint64_t epoch) const;
  static GraphANet from_checkpoint(const Checkpoint& ckpt);

 private:
  AttNetConfig config_;
  ParameterSet params_;
  GcnStack gcn_;
  Tensor token_;
  std::vector<EncoderBlock> blocks_;
  LayerNorm final_ln_;
  Tensor head_w_, head_b_;
};

/// sqrt(mean((pred - target)^2)) over an (s, 2) batch.
Tensor rmse_loss(const Tensor& pred, const Tensor& target);

/// "mixed" when both concentrations are positive, else "pure".
std::string regression_subset(const std::array<double, 2>& conc_ppm);

struct RegressorData {
  std::vector<ChainGraph> graphs;
  std::vector<std::array<double, 2>> targets;  // normalized
  std::vector<std::string> subsets;
  std::array<double, 2> maxima{0.0, 0.0};
  std::array<std::string, 2> gases;
};

/// Targets are divided by `maxima` (the per-gas maxima of the whole dataset).
RegressorData prepare_regressor_data(const std::vector<SensorSample>& samples, const std::array<double, 2>& maxima,
                                     const std::array<std::string, 2>& gases);

struct RegressorEval {
  double rmse = 0.0;
  std::vector<std::array<double, 2>> predictions;  // clamped
};

RegressorEval evaluate_regressor(const GraphANet& model, const RegressorData& data,
                                 const std::vector<std::size_t>& indices);

struct RegressorOutcome {
  Checkpoint checkpoint;
  std::vector<RegressionHistoryRow> history;
  std::size_t best_fold = 0;
  std::size_t best_epoch = 0;
  double best_val_rmse = 0.0;
};

/// Cross-validated training with the batch RMSE as loss; the fold/epoch with
/// the lowest validation RMSE becomes the checkpoint.
RegressorOutcome train_regressor(const RegressorData& data, const SplitPlan& split, const AttNetConfig& config,
                                 const TrainOptions& opts);

struct PredictionRow {
  std::size_t sample_id = 0;
  std::string subset;
  std::array<double, 2> truth{0.0, 0.0};
  std::array<double, 2> pred{0.0, 0.0};
};

/// Header `sample_id,subset,gas1_true,gas1_pred,gas2_true,gas2_pred`.
void write_predictions_csv(const std::vector<PredictionRow>& rows, const std::filesystem::path& path);

}  // namespace gasgraph
