#include "gasgraph/capsnet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>

#include "gasgraph/errors.hpp"
#include "gasgraph/ops.hpp"
#include "gasgraph/optim.hpp"

namespace gasgraph {

using nlohmann::json;

json CapsNetConfig::to_json() const {
  return json{{"in_features", in_features}, {"gcn_layers", gcn_layers},     {"gcn_filters", gcn_filters},
              {"feature_caps", feature_caps}, {"caps_dim", caps_dim},       {"classes", classes},
              {"routing_iters", routing_iters}, {"recon_hidden", recon_hidden}, {"theta", theta},
              {"m_plus", m_plus},           {"m_minus", m_minus},           {"lambda", lambda}};
}

CapsNetConfig CapsNetConfig::from_json(const json& j) {
  CapsNetConfig c;
  c.in_features = j.value("in_features", c.in_features);
  c.gcn_layers = j.value("gcn_layers", c.gcn_layers);
  c.gcn_filters = j.value("gcn_filters", c.gcn_filters);
  c.feature_caps = j.value("feature_caps", c.feature_caps);
  c.caps_dim = j.value("caps_dim", c.caps_dim);
  c.classes = j.value("classes", c.classes);
  c.routing_iters = j.value("routing_iters", c.routing_iters);
  c.recon_hidden = j.value("recon_hidden", c.recon_hidden);
  c.theta = j.value("theta", c.theta);
  c.m_plus = j.value("m_plus", c.m_plus);
  c.m_minus = j.value("m_minus", c.m_minus);
  c.lambda = j.value("lambda", c.lambda);
  return c;
}

// ---------------------------------------------------------------------------
// Routing

RoutingResult dynamic_routing(const Tensor& votes, std::size_t iterations) {
  if (votes.rank() != 3) throw DimensionError("votes must be (n_in, M, d_out), got " + shape_to_string(votes.shape()));
  if (iterations == 0) throw ContractError("routing needs at least one iteration");
  const std::size_t n_in = votes.dim(0);
  const std::size_t m = votes.dim(1);
  const std::size_t d = votes.dim(2);

  RoutingResult result;
  Tensor logits = Tensor::zeros({n_in, m});
  for (std::size_t it = 0; it < iterations; ++it) {
    Tensor coupling = softmax(logits, 1);
    result.couplings.push_back(coupling.detach());
    Tensor weighted = mul(votes, reshape(coupling, {n_in, m, 1}));
    Tensor v = squash(sum(weighted, 0), 1);
    result.capsules = v;
    if (it + 1 < iterations) {
      Tensor agreement = sum(mul(votes, reshape(v, {1, m, d})), 2);
      logits = add(logits, agreement);
    }
  }
  return result;
}

RoutingStage::RoutingStage(std::size_t groups, std::size_t d_in, std::size_t out_caps, std::size_t d_out,
                           std::size_t iterations, ParameterSet& params, const std::string& prefix, Rng& rng)
    : groups_(groups), d_in_(d_in), out_caps_(out_caps), d_out_(d_out), iterations_(iterations) {
  if (groups == 0 || d_in == 0 || out_caps == 0 || d_out == 0) throw ContractError("routing dimensions must be positive");
  if (iterations == 0) throw ContractError("routing needs at least one iteration");
  weight_ = params.add(prefix + ".weight", glorot_init({groups, d_in, out_caps * d_out}, d_in, d_out, rng));
}

Tensor RoutingStage::votes(const Tensor& input) const {
  if (input.rank() != 3 || input.dim(0) != groups_ || input.dim(2) != d_in_) {
    throw DimensionError("routing stage expects capsules (" + std::to_string(groups_) + ", n, " +
                         std::to_string(d_in_) + "), got " + shape_to_string(input.shape()));
  }
  const std::size_t per_group = input.dim(1);
  return reshape(bmm(input, weight_), {groups_ * per_group, out_caps_, d_out_});
}

RoutingResult RoutingStage::forward(const Tensor& input) const { return dynamic_routing(votes(input), iterations_); }

// ---------------------------------------------------------------------------
// Losses

Tensor margin_loss(const Tensor& class_caps, std::size_t true_class, double m_plus, double m_minus, double lambda) {
  if (class_caps.rank() != 2) throw DimensionError("class capsules must be (C, d'), got " + shape_to_string(class_caps.shape()));
  const std::size_t c = class_caps.dim(0);
  if (true_class >= c) throw ContractError("true class " + std::to_string(true_class) + " out of range");
  std::vector<double> onehot(c, 0.0);
  onehot[true_class] = 1.0;
  std::vector<double> other(c, lambda);
  other[true_class] = 0.0;

  Tensor lengths = l2_norm(class_caps, 1);
  Tensor present = square(relu(add_scalar(neg(lengths), m_plus)));
  Tensor absent = square(relu(add_scalar(lengths, -m_minus)));
  return sum(add(mul(present, Tensor({c}, std::move(onehot))), mul(absent, Tensor({c}, std::move(other)))));
}

AttributeHistogram attribute_histogram(const Tensor& features) {
  if (features.rank() != 2) throw DimensionError("features must be N x F, got " + shape_to_string(features.shape()));
  const std::size_t n = features.dim(0);
  const std::size_t f = features.dim(1);
  const auto v = features.data();
  AttributeHistogram h;
  h.histogram.resize(f);
  h.presence.resize(f);
  std::vector<double> column(n);
  for (std::size_t c = 0; c < f; ++c) {
    for (std::size_t i = 0; i < n; ++i) column[i] = v[i * f + c];
    std::vector<double> sorted = column;
    std::sort(sorted.begin(), sorted.end());
    const double median = n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    std::size_t count = 0;
    for (double x : column) count += x > median ? 1 : 0;
    h.histogram[c] = static_cast<double>(count) / static_cast<double>(n);
    h.presence[c] = count > 0 ? 1.0 : 0.0;
  }
  return h;
}

Tensor reconstruction_loss(const Tensor& decoded, const std::vector<double>& histogram,
                           const std::vector<double>& presence) {
  const std::size_t f = decoded.numel();
  if (histogram.size() != f || presence.size() != f) {
    throw DimensionError("reconstruction target length " + std::to_string(histogram.size()) + "/" +
                         std::to_string(presence.size()) + " does not match decoded length " + std::to_string(f));
  }
  double n_present = 0.0;
  for (double p : presence) n_present += p;
  const double n_absent = static_cast<double>(f) - n_present;
  std::vector<double> absent(f);
  for (std::size_t i = 0; i < f; ++i) absent[i] = 1.0 - presence[i];

  Tensor diff2 = square(sub(reshape(decoded, {f}), Tensor({f}, histogram)));
  Tensor loss = Tensor::scalar(0.0);
  if (n_present > 0.0) loss = add(loss, scale(sum(mul(diff2, Tensor({f}, presence))), 1.0 / n_present));
  if (n_absent > 0.0) loss = add(loss, scale(sum(mul(diff2, Tensor({f}, absent))), 1.0 / n_absent));
  return loss;
}

Tensor total_loss(const Tensor& margin, const Tensor& reconstruction, double theta) {
  return add(margin, scale(reconstruction, theta));
}

ReconstructionHead::ReconstructionHead(std::size_t classes, std::size_t caps_dim, std::size_t hidden,
                                       std::size_t features, ParameterSet& params, const std::string& prefix, Rng& rng)
    : classes_(classes), caps_dim_(caps_dim) {
  w1_ = params.add(prefix + ".fc1.weight", glorot_init(classes * caps_dim, hidden, rng));
  b1_ = params.add(prefix + ".fc1.bias", Tensor::zeros({hidden}));
  w2_ = params.add(prefix + ".fc2.weight", glorot_init(hidden, features, rng));
  b2_ = params.add(prefix + ".fc2.bias", Tensor::zeros({features}));
}

Tensor ReconstructionHead::forward(const Tensor& class_caps, std::size_t keep_class) const {
  if (class_caps.rank() != 2 || class_caps.dim(0) != classes_ || class_caps.dim(1) != caps_dim_) {
    throw DimensionError("reconstruction head expects (" + std::to_string(classes_) + ", " + std::to_string(caps_dim_) +
                         "), got " + shape_to_string(class_caps.shape()));
  }
  if (keep_class >= classes_) throw ContractError("mask class out of range");
  std::vector<double> mask(classes_, 0.0);
  mask[keep_class] = 1.0;
  Tensor masked = reshape(mul(class_caps, Tensor({classes_, 1}, std::move(mask))), {1, classes_ * caps_dim_});
  Tensor decoded = sigmoid(linear(relu(linear(masked, w1_, b1_)), w2_, b2_));
  return reshape(decoded, {decoded.numel()});
}

// ---------------------------------------------------------------------------
// Model

GraphCapsNet::GraphCapsNet(const CapsNetConfig& config, std::uint64_t init_seed) : config_(config) {
  if (config.classes < 2) throw ContractError("classifier needs at least 2 classes");
  Rng rng(init_seed);
  gcn_ = GcnStack(config.in_features, config.gcn_filters, config.gcn_layers, params_, "gcn", rng);
  attention_ = AttentionBlock(config.gcn_layers, config.gcn_filters, params_, "attention", rng);
  primary_ = RoutingStage(config.gcn_layers, config.gcn_filters, config.feature_caps, config.caps_dim,
                          config.routing_iters, params_, "routing.feature", rng);
  classes_ = RoutingStage(config.feature_caps, config.caps_dim, config.classes, config.caps_dim, config.routing_iters,
                          params_, "routing.class", rng);
  recon_ = ReconstructionHead(config.classes, config.caps_dim, config.recon_hidden, config.in_features, params_,
                              "reconstruction", rng);
}

GraphCapsNet::Forward GraphCapsNet::forward(const ChainGraph& graph) const {
  Forward out;
  out.graph_capsules = stack_capsules(gcn_.forward(graph.normalized, graph.x));
  out.attention = attention_.forward(out.graph_capsules);
  Tensor primary = squash(out.attention.capsules, 2);
  out.feature = primary_.forward(primary);
  const std::size_t p = config_.feature_caps;
  out.cls = classes_.forward(reshape(out.feature.capsules, {p, 1, config_.caps_dim}));
  out.lengths = l2_norm(out.cls.capsules, 1);
  return out;
}

GraphCapsNet::Loss GraphCapsNet::loss(const Forward& fwd, std::size_t true_class, const AttributeHistogram& target,
                                      std::size_t mask_class) const {
  Loss l;
  l.margin = margin_loss(fwd.cls.capsules, true_class, config_.m_plus, config_.m_minus, config_.lambda);
  l.reconstruction = reconstruction_loss(recon_.forward(fwd.cls.capsules, mask_class), target.histogram, target.presence);
  l.total = total_loss(l.margin, l.reconstruction, config_.theta);
  return l;
}

std::size_t GraphCapsNet::argmax_length(const Tensor& lengths) {
  const auto v = lengths.data();
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

std::size_t GraphCapsNet::predict(const ChainGraph& graph) const {
  NoGradGuard no_grad;
  return argmax_length(forward(graph).lengths);
}

Checkpoint GraphCapsNet::to_checkpoint(const ClassMap& classes, std::uint64_t seed, std::uint64_t epoch) const {
  Checkpoint ckpt;
  ckpt.architecture = {{"model", "GraphCapsNet"}, {"config", config_.to_json()}, {"classes", classes.labels()}};
  ckpt.parameters = params_.clone();
  ckpt.seed = seed;
  ckpt.epoch = epoch;
  return ckpt;
}

GraphCapsNet GraphCapsNet::from_checkpoint(const Checkpoint& ckpt) {
  if (ckpt.architecture.value("model", "") != "GraphCapsNet") throw FormatError("checkpoint does not hold a GraphCapsNet");
  GraphCapsNet model(CapsNetConfig::from_json(ckpt.architecture.at("config")), 0);
  model.params_.assign_from(ckpt.parameters);
  return model;
}

// ---------------------------------------------------------------------------
// Training

ClassifierData prepare_classifier_data(const std::vector<SensorSample>& samples, const ClassMap& classes) {
  ClassifierData data;
  data.classes = classes;
  data.graphs.reserve(samples.size());
  for (const auto& s : samples) {
    data.graphs.push_back(build_chain_graph(s));
    data.labels.push_back(classes.id(s.label));
    data.targets.push_back(attribute_histogram(s.features));
  }
  return data;
}

ClassifierEval evaluate_classifier(const GraphCapsNet& model, const ClassifierData& data,
                                   const std::vector<std::size_t>& indices) {
  NoGradGuard no_grad;
  ClassifierEval ev;
  std::size_t correct = 0;
  for (auto i : indices) {
    const auto fwd = model.forward(data.graphs[i]);
    const std::size_t pred = GraphCapsNet::argmax_length(fwd.lengths);
    ev.loss += model.loss(fwd, data.labels[i], data.targets[i], pred).total.item();
    ev.predictions.push_back(pred);
    correct += pred == data.labels[i] ? 1 : 0;
  }
  if (!indices.empty()) {
    ev.accuracy = static_cast<double>(correct) / static_cast<double>(indices.size());
    ev.loss /= static_cast<double>(indices.size());
  }
  return ev;
}

namespace {

struct FoldBest {
  double val_acc = -1.0;
  double val_loss = std::numeric_limits<double>::infinity();
  std::size_t epoch = 0;
  ParameterSet params;
  std::vector<HistoryRow> history;
};

bool better(double acc, double loss, double best_acc, double best_loss) {
  return acc > best_acc || (acc == best_acc && loss < best_loss);
}

}  // namespace

ClassifierOutcome train_classifier(const ClassifierData& data, const SplitPlan& split, const CapsNetConfig& config,
                                   const TrainOptions& opts) {
  if (config.classes != data.classes.size()) {
    throw ContractError("config declares " + std::to_string(config.classes) + " classes, data has " +
                        std::to_string(data.classes.size()));
  }
  const std::size_t folds = folds_to_train(split.folds.size(), opts);
  std::vector<FoldBest> results(folds);
  std::mutex log_mu;

  run_folds(folds, opts.folds_parallel, [&](std::size_t fold) {
    Rng rng = Rng(opts.seed).split(fold + 1);
    GraphCapsNet model(config, rng.next_u64());
    AdamState adam(opts.adam);
    auto params = model.parameters().tensors();
    const Fold& plan = split.folds[fold];
    FoldBest& best = results[fold];

    for (std::size_t epoch = 1; epoch <= opts.epochs; ++epoch) {
      std::size_t step = 0;
      try {
        std::vector<std::size_t> order = plan.train;
        rng.shuffle(order);
        double loss_sum = 0.0;
        std::size_t correct = 0;
        for (const auto& batch : make_batches(order, opts.batch_size)) {
          ++step;
          model.parameters().zero_grad();
          const double inv = 1.0 / static_cast<double>(batch.size());
          for (auto i : batch) {
            const auto fwd = model.forward(data.graphs[i]);
            const auto l = model.loss(fwd, data.labels[i], data.targets[i], data.labels[i]);
            const double value = l.total.item();
            if (!std::isfinite(value)) throw NumericError("non-finite loss");
            loss_sum += value;
            correct += GraphCapsNet::argmax_length(fwd.lengths) == data.labels[i] ? 1 : 0;
            backward(scale(l.total, inv));
          }
          adam_step(params, adam);
        }
        HistoryRow row;
        row.epoch = epoch;
        row.fold = fold;
        const double n_train = static_cast<double>(std::max<std::size_t>(1, order.size()));
        row.train_acc = static_cast<double>(correct) / n_train;
        row.train_loss = loss_sum / n_train;
        const auto val = evaluate_classifier(model, data, plan.val);
        row.val_acc = val.accuracy;
        row.val_loss = val.loss;
        if (opts.eval_test_each_epoch) {
          const auto test = evaluate_classifier(model, data, split.test);
          row.test_acc = test.accuracy;
          row.test_loss = test.loss;
        }
        best.history.push_back(row);
        if (better(row.val_acc, row.val_loss, best.val_acc, best.val_loss)) {
          best.val_acc = row.val_acc;
          best.val_loss = row.val_loss;
          best.epoch = epoch;
          best.params = model.parameters().clone();
        }
        if (opts.log) {
          std::lock_guard lock(log_mu);
          char buf[160];
          std::snprintf(buf, sizeof(buf), "fold %zu epoch %zu train_acc %.4f val_acc %.4f test_acc %.4f loss %.5f",
                        fold, epoch, row.train_acc, row.val_acc, row.test_acc, row.train_loss);
          opts.log(buf);
        }
      } catch (const NumericError& e) {
        ComputeTape::current().clear();
        throw NumericError("classifier training diverged (fold " + std::to_string(fold) + ", epoch " +
                           std::to_string(epoch) + ", step " + std::to_string(step) + "): " + e.what());
      }
    }
  });

  ClassifierOutcome out;
  std::size_t best_fold = 0;
  for (std::size_t f = 0; f < folds; ++f) {
    out.history.insert(out.history.end(), results[f].history.begin(), results[f].history.end());
    if (f > 0 && better(results[f].val_acc, results[f].val_loss, results[best_fold].val_acc, results[best_fold].val_loss)) {
      best_fold = f;
    }
  }
  if (results[best_fold].params.size() == 0) throw ContractError("training ran zero epochs");
  out.best_fold = best_fold;
  out.best_epoch = results[best_fold].epoch;
  out.best_val_acc = results[best_fold].val_acc;

  GraphCapsNet selected(config, 0);
  selected.parameters().assign_from(results[best_fold].params);
  out.checkpoint = selected.to_checkpoint(data.classes, opts.seed, out.best_epoch);
  out.checkpoint.architecture["selected_fold"] = best_fold;
  return out;
}

}  // namespace gasgraph
