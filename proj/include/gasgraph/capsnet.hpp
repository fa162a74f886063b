#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gasgraph/checkpoint.hpp"
#include "gasgraph/gcn.hpp"
#include "gasgraph/graphio.hpp"
#include "gasgraph/training.hpp"

namespace gasgraph {

/// Architecture of the capsule classifier. Defaults are the full-size model.
struct CapsNetConfig {
  std::size_t in_features = 16;
  std::size_t gcn_layers = 4;     // L_g
  std::size_t gcn_filters = 8;    // d
  std::size_t feature_caps = 32;  // P
  std::size_t caps_dim = 16;      // d'
  std::size_t classes = 3;        // C
  std::size_t routing_iters = 3;
  std::size_t recon_hidden = 64;
  double theta = 0.0005;
  double m_plus = 0.9;
  double m_minus = 0.1;
  double lambda = 0.5;

  nlohmann::json to_json() const;
  static CapsNetConfig from_json(const nlohmann::json& j);
};

// ---------------------------------------------------------------------------
// Routing

struct RoutingResult {
  Tensor capsules;                // (M, d_out)
  std::vector<Tensor> couplings;  // per iteration, (n_in, M), detached
};

/// Routing-by-agreement over precomputed votes of shape (n_in, M, d_out).
///
/// Logits b start at zero; each iteration sets c_i = softmax_j(b_i),
/// s_j = sum_i c_ij u_j|i, v_j = squash(s_j), then b_ij += u_j|i . v_j.
RoutingResult dynamic_routing(const Tensor& votes, std::size_t iterations);

/// Capsule-to-capsule layer with grouped transformation matrices.
///
/// Input capsules are laid out as (groups, per_group, d_in); every capsule of
/// a group shares the transform W_g of shape (d_in, M * d_out). With one group
/// per GCN layer this makes the parameter count independent of the node count;
/// with one capsule per group it is the usual per-capsule transform.
class RoutingStage {
 public:
  RoutingStage() = default;
  RoutingStage(std::size_t groups, std::size_t d_in, std::size_t out_caps, std::size_t d_out, std::size_t iterations,
               ParameterSet& params, const std::string& prefix, Rng& rng);

  /// (groups, per_group, d_in) -> (groups * per_group, M, d_out)
  Tensor votes(const Tensor& input) const;
  RoutingResult forward(const Tensor& input) const;

  const Tensor& weight() const { return weight_; }

 private:
  std::size_t groups_ = 0;
  std::size_t d_in_ = 0;
  std::size_t out_caps_ = 0;
  std::size_t d_out_ = 0;
  std::size_t iterations_ = 1;
  Tensor weight_;
};

// ---------------------------------------------------------------------------
// Losses

/// sum_k T_k max(0, m+ - |c_k|)^2 + lambda (1 - T_k) max(0, |c_k| - m-)^2
Tensor margin_loss(const Tensor& class_caps, std::size_t true_class, double m_plus = 0.9, double m_minus = 0.1,
                   double lambda = 0.5);

/// Node-attribute summary used as the reconstruction target.
///
/// Channel i is "present" at a node when its value exceeds the channel's
/// median over the graph; histogram[i] is the fraction of such nodes and
/// presence[i] is 1 when that fraction is positive.
struct AttributeHistogram {
  std::vector<double> histogram;
  std::vector<double> presence;
};

AttributeHistogram attribute_histogram(const Tensor& features);

/// Mean squared error over present attributes plus mean squared error over
/// absent ones; an empty group contributes 0.
Tensor reconstruction_loss(const Tensor& decoded, const std::vector<double>& histogram,
                           const std::vector<double>& presence);

/// margin + theta * reconstruction
Tensor total_loss(const Tensor& margin, const Tensor& reconstruction, double theta = 0.0005);

/// FC(C*d' -> hidden, ReLU) -> FC(hidden -> F, sigmoid) over masked class capsules.
class ReconstructionHead {
 public:
  ReconstructionHead() = default;
  ReconstructionHead(std::size_t classes, std::size_t caps_dim, std::size_t hidden, std::size_t features,
                     ParameterSet& params, const std::string& prefix, Rng& rng);

  /// Keeps only the capsule of `keep_class` and decodes it to F values.
  Tensor forward(const Tensor& class_caps, std::size_t keep_class) const;

 private:
  std::size_t classes_ = 0;
  std::size_t caps_dim_ = 0;
  Tensor w1_, b1_, w2_, b2_;
};

// ---------------------------------------------------------------------------
// Model

class GraphCapsNet {
 public:
  struct Forward {
    Tensor graph_capsules;  // (L_g, N, d)
    AttentionBlock::Output attention;
    RoutingResult feature;  // X_FC (P, d')
    RoutingResult cls;      // X_CC (C, d')
    Tensor lengths;         // (C)
  };

  struct Loss {
    Tensor total;
    Tensor margin;
    Tensor reconstruction;
  };

  GraphCapsNet(const CapsNetConfig& config, std::uint64_t init_seed);

  Forward forward(const ChainGraph& graph) const;
  /// Reconstruction uses the capsule of `mask_class` (the true class while
  /// training, the predicted class at evaluation).
  Loss loss(const Forward& fwd, std::size_t true_class, const AttributeHistogram& target,
            std::size_t mask_class) const;
  std::size_t predict(const ChainGraph& graph) const;
  static std::size_t argmax_length(const Tensor& lengths);

  const CapsNetConfig& config() const { return config_; }
  ParameterSet& parameters() { return params_; }
  const ParameterSet& parameters() const { return params_; }

  Checkpoint to_checkpoint(const ClassMap& classes, std::uint64_t seed, std::uint64_t epoch) const;
  static GraphCapsNet from_checkpoint(const Checkpoint& ckpt);

 private:
  CapsNetConfig config_;
  ParameterSet params_;
  GcnStack gcn_;
  AttentionBlock attention_;
  RoutingStage primary_;
  RoutingStage classes_;
  ReconstructionHead recon_;
};

// ---------------------------------------------------------------------------
// Training

struct ClassifierData {
  std::vector<ChainGraph> graphs;
  std::vector<std::size_t> labels;
  std::vector<AttributeHistogram> targets;
  ClassMap classes;
};

ClassifierData prepare_classifier_data(const std::vector<SensorSample>& samples, const ClassMap& classes);

struct ClassifierEval {
  double accuracy = 0.0;
  double loss = 0.0;
  std::vector<std::size_t> predictions;
};

ClassifierEval evaluate_classifier(const GraphCapsNet& model, const ClassifierData& data,
                                   const std::vector<std::size_t>& indices);

struct ClassifierOutcome {
  Checkpoint checkpoint;
  std::vector<HistoryRow> history;
  std::size_t best_fold = 0;
  std::size_t best_epoch = 0;
  double best_val_acc = 0.0;
};

/// Cross-validated training; the fold/epoch with the highest validation
/// accuracy (ties: lower validation loss, then earlier) becomes the checkpoint.
ClassifierOutcome train_classifier(const ClassifierData& data, const SplitPlan& split, const CapsNetConfig& config,
                                   const TrainOptions& opts);

}  // namespace gasgraph
