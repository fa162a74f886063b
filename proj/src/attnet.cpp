#include "gasgraph/attnet.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <mutex>

#include "gasgraph/errors.hpp"
#include "gasgraph/ops.hpp"
#include "gasgraph/optim.hpp"

namespace gasgraph {

using nlohmann::json;

json AttNetConfig::to_json() const {
  return json{{"in_features", in_features}, {"gcn_layers", gcn_layers}, {"gcn_filters", gcn_filters},
              {"pooled_nodes", pooled_nodes}, {"blocks", blocks},       {"heads", heads},
              {"mlp_ratio", mlp_ratio},     {"final_norm", final_norm}, {"positional_encoding", positional_encoding}};
}

AttNetConfig AttNetConfig::from_json(const json& j) {
  AttNetConfig c;
  c.in_features = j.value("in_features", c.in_features);
  c.gcn_layers = j.value("gcn_layers", c.gcn_layers);
  c.gcn_filters = j.value("gcn_filters", c.gcn_filters);
  c.pooled_nodes = j.value("pooled_nodes", c.pooled_nodes);
  c.blocks = j.value("blocks", c.blocks);
  c.heads = j.value("heads", c.heads);
  c.mlp_ratio = j.value("mlp_ratio", c.mlp_ratio);
  c.final_norm = j.value("final_norm", c.final_norm);
  c.positional_encoding = j.value("positional_encoding", c.positional_encoding);
  return c;
}

SparseMatrix pooling_matrix(std::size_t n, std::size_t pooled) {
  if (n == 0 || pooled == 0) throw ContractError("pooling needs at least one node and one output row");
  std::vector<SparseMatrix::Triplet> entries;
  if (n >= pooled) {
    for (std::size_t r = 0; r < pooled; ++r) {
      const std::size_t lo = r * n / pooled;
      const std::size_t hi = (r + 1) * n / pooled;
      const double w = 1.0 / static_cast<double>(hi - lo);
      for (std::size_t c = lo; c < hi; ++c) entries.push_back({r, c, w});
    }
  } else {
    for (std::size_t r = 0; r < pooled; ++r) {
      entries.push_back({r, r * n / pooled, 1.0});
    }
  }
  return SparseMatrix::from_triplets(pooled, n, std::move(entries));
}

Tensor pool_nodes(const Tensor& x, std::size_t pooled) {
  if (x.rank() != 2) throw DimensionError("pooling expects (N, D), got " + shape_to_string(x.shape()));
  return spmm(pooling_matrix(x.dim(0), pooled), x);
}

Tensor prepend_token(const Tensor& pooled, const Tensor& token) {
  if (pooled.rank() != 2 || token.numel() != pooled.dim(1)) {
    throw DimensionError("token " + shape_to_string(token.shape()) + " does not fit pooled " +
                         shape_to_string(pooled.shape()));
  }
  return concat({reshape(token, {1, pooled.dim(1)}), pooled}, 0);
}

Tensor sinusoidal_encoding(std::size_t rows, std::size_t width) {
  std::vector<double> v(rows * width);
  for (std::size_t p = 0; p < rows; ++p) {
    for (std::size_t i = 0; i < width; ++i) {
      const double freq = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / static_cast<double>(width));
      v[p * width + i] = i % 2 == 0 ? std::sin(p * freq) : std::cos(p * freq);
    }
  }
  return Tensor({rows, width}, std::move(v));
}

LayerNorm::LayerNorm(std::size_t width, ParameterSet& params, const std::string& prefix) {
  gamma_ = params.add(prefix + ".gamma", Tensor::full({width}, 1.0));
  beta_ = params.add(prefix + ".beta", Tensor::zeros({width}));
}

Tensor LayerNorm::forward(const Tensor& x) const { return add(mul(layer_norm(x), gamma_), beta_); }

MultiHeadAttention::MultiHeadAttention(std::size_t width, std::size_t heads, ParameterSet& params,
                                       const std::string& prefix, Rng& rng)
    : width_(width), heads_(heads) {
  if (heads == 0 || width % heads != 0) {
    throw ContractError("width " + std::to_string(width) + " is not divisible by " + std::to_string(heads) + " heads");
  }
  auto proj = [&](const char* name, Tensor& w, Tensor& b) {
    w = params.add(prefix + "." + name + ".weight", glorot_init(width, width, rng));
    b = params.add(prefix + "." + name + ".bias", Tensor::zeros({width}));
  };
  proj("q", wq_, bq_);
  proj("k", wk_, bk_);
  proj("v", wv_, bv_);
  proj("o", wo_, bo_);
}

MultiHeadAttention::Output MultiHeadAttention::forward(const Tensor& x) const {
  if (x.rank() != 2 || x.dim(1) != width_) {
    throw DimensionError("attention expects (T, " + std::to_string(width_) + "), got " + shape_to_string(x.shape()));
  }
  const std::size_t t = x.dim(0);
  const std::size_t hd = width_ / heads_;
  auto split_heads = [&](const Tensor& y) { return swap_axes(reshape(y, {t, heads_, hd}), 0, 1); };  // (H, T, hd)
  Tensor q = split_heads(linear(x, wq_, bq_));
  Tensor k = split_heads(linear(x, wk_, bk_));
  Tensor v = split_heads(linear(x, wv_, bv_));
  Tensor scores = scale(bmm(q, swap_axes(k, 1, 2)), 1.0 / std::sqrt(static_cast<double>(hd)));
  Tensor weights = softmax(scores, 2);
  Tensor merged = reshape(swap_axes(bmm(weights, v), 0, 1), {t, width_});
  return {linear(merged, wo_, bo_), weights};
}

EncoderBlock::EncoderBlock(std::size_t width, std::size_t heads, std::size_t mlp_ratio, ParameterSet& params,
                           const std::string& prefix, Rng& rng) {
  ln1_ = LayerNorm(width, params, prefix + ".ln1");
  attn_ = MultiHeadAttention(width, heads, params, prefix + ".attn", rng);
  ln2_ = LayerNorm(width, params, prefix + ".ln2");
  const std::size_t hidden = width * mlp_ratio;
  w1_ = params.add(prefix + ".mlp.fc1.weight", glorot_init(width, hidden, rng));
  b1_ = params.add(prefix + ".mlp.fc1.bias", Tensor::zeros({hidden}));
  w2_ = params.add(prefix + ".mlp.fc2.weight", glorot_init(hidden, width, rng));
  b2_ = params.add(prefix + ".mlp.fc2.bias", Tensor::zeros({width}));
}

EncoderBlock::Output EncoderBlock::forward(const Tensor& x) const {
  auto a = attn_.forward(ln1_.forward(x));
  Tensor h = add(x, a.out);
  Tensor mlp = linear(gelu(linear(ln2_.forward(h), w1_, b1_)), w2_, b2_);
  return {add(h, mlp), a.weights};
}

GraphANet::GraphANet(const AttNetConfig& config, std::uint64_t init_seed) : config_(config) {
  Rng rng(init_seed);
  const std::size_t d = config.width();
  gcn_ = GcnStack(config.in_features, config.gcn_filters, config.gcn_layers, params_, "gcn", rng);
  token_ = params_.add("token", Tensor({1, d}, [&] {
                         std::vector<double> v(d);
                         for (auto& e : v) e = 0.02 * rng.normal();
                         return v;
                       }()));
  for (std::size_t b = 0; b < config.blocks; ++b) {
    blocks_.emplace_back(d, config.heads, config.mlp_ratio, params_, "encoder.block" + std::to_string(b), rng);
  }
  if (config.final_norm) final_ln_ = LayerNorm(d, params_, "encoder.final_ln");
  head_w_ = params_.add("head.weight", glorot_init(d, 2, rng));
  head_b_ = params_.add("head.bias", Tensor::zeros({2}));
}

Tensor GraphANet::forward(const ChainGraph& graph) const {
  Tensor xgs = concat_layers(gcn_.forward(graph.normalized, graph.x));
  Tensor pooled = pool_nodes(xgs, config_.pooled_nodes);
  Tensor x = prepend_token(pooled, token_);
  if (config_.positional_encoding) x = add(x, sinusoidal_encoding(x.dim(0), x.dim(1)));
  for (const auto& block : blocks_) x = block.forward(x).out;
  if (config_.final_norm) x = final_ln_.forward(x);
  return reshape(linear(slice(x, 0, 0, 1), head_w_, head_b_), {2});
}

std::array<double, 2> GraphANet::regress(const ChainGraph& graph) const {
  NoGradGuard no_grad;
  const Tensor y = forward(graph);
  const auto out = y.data();
  return {std::clamp(out[0], 0.0, 1.0), std::clamp(out[1], 0.0, 1.0)};
}

Checkpoint GraphANet::to_checkpoint(const std::array<std::string, 2>& gases, const std::array<double, 2>& maxima,
                                    std::uint64_t seed, std::uint64_t epoch) const {
  Checkpoint ckpt;
  ckpt.architecture = {{"model", "GraphANet"}, {"config", config_.to_json()}, {"gases", gases}, {"maxima_ppm", maxima}};
  ckpt.parameters = params_.clone();
  ckpt.seed = seed;
  ckpt.epoch = epoch;
  return ckpt;
}

GraphANet GraphANet::from_checkpoint(const Checkpoint& ckpt) {
  if (ckpt.architecture.value("model", "") != "GraphANet") throw FormatError("checkpoint does not hold a GraphANet");
  GraphANet model(AttNetConfig::from_json(ckpt.architecture.at("config")), 0);
  model.params_.assign_from(ckpt.parameters);
  return model;
}

Tensor rmse_loss(const Tensor& pred, const Tensor& target) {
  if (pred.shape() != target.shape()) {
    throw DimensionError("prediction " + shape_to_string(pred.shape()) + " vs target " +
                         shape_to_string(target.shape()));
  }
  return sqrt(mean(square(sub(pred, target))));
}

std::string regression_subset(const std::array<double, 2>& conc_ppm) {
  return conc_ppm[0] > 0.0 && conc_ppm[1] > 0.0 ? "mixed" : "pure";
}

RegressorData prepare_regressor_data(const std::vector<SensorSample>& samples, const std::array<double, 2>& maxima,
                                     const std::array<std::string, 2>& gases) {
  RegressorData data;
  data.maxima = maxima;
  data.gases = gases;
  std::vector<std::array<double, 2>> raw;
  for (const auto& s : samples) {
    data.graphs.push_back(build_chain_graph(s));
    data.subsets.push_back(regression_subset(s.conc_ppm));
    raw.push_back(s.conc_ppm);
  }
  data.targets = normalize_concentrations(raw, maxima);
  return data;
}

RegressorEval evaluate_regressor(const GraphANet& model, const RegressorData& data,
                                 const std::vector<std::size_t>& indices) {
  RegressorEval ev;
  double se = 0.0;
  for (auto i : indices) {
    const auto p = model.regress(data.graphs[i]);
    for (int g = 0; g < 2; ++g) se += (p[g] - data.targets[i][g]) * (p[g] - data.targets[i][g]);
    ev.predictions.push_back(p);
  }
  if (!indices.empty()) ev.rmse = std::sqrt(se / (2.0 * static_cast<double>(indices.size())));
  return ev;
}

namespace {

struct FoldBest {
  double val_rmse = std::numeric_limits<double>::infinity();
  std::size_t epoch = 0;
  ParameterSet params;
  std::vector<RegressionHistoryRow> history;
};

double squared_error(const Tensor& pred, const std::array<double, 2>& target) {
  const auto p = pred.data();
  return (p[0] - target[0]) * (p[0] - target[0]) + (p[1] - target[1]) * (p[1] - target[1]);
}

}  // namespace

RegressorOutcome train_regressor(const RegressorData& data, const SplitPlan& split, const AttNetConfig& config,
                                 const TrainOptions& opts) {
  const std::size_t folds = folds_to_train(split.folds.size(), opts);
  std::vector<FoldBest> results(folds);
  std::mutex log_mu;

  run_folds(folds, opts.folds_parallel, [&](std::size_t fold) {
    Rng rng = Rng(opts.seed).split(fold + 1);
    GraphANet model(config, rng.next_u64());
    AdamState adam(opts.adam);
    auto params = model.parameters().tensors();
    const Fold& plan = split.folds[fold];
    FoldBest& best = results[fold];

    for (std::size_t epoch = 1; epoch <= opts.epochs; ++epoch) {
      std::size_t step = 0;
      try {
        std::vector<std::size_t> order = plan.train;
        rng.shuffle(order);
        double se_sum = 0.0;
        for (const auto& batch : make_batches(order, opts.batch_size)) {
          ++step;
          const double s = static_cast<double>(batch.size());
          // The batch RMSE is not a sum over samples, so its value is taken
          // first and each sample then contributes d(se_i)/(4 R s).
          double se = 0.0;
          {
            NoGradGuard no_grad;
            for (auto i : batch) se += squared_error(model.forward(data.graphs[i]), data.targets[i]);
          }
          if (!std::isfinite(se)) throw NumericError("non-finite loss");
          se_sum += se;
          const double r = std::sqrt(se / (2.0 * s));
          model.parameters().zero_grad();
          if (r > 0.0) {
            for (auto i : batch) {
              Tensor target({2}, {data.targets[i][0], data.targets[i][1]});
              Tensor sample_se = sum(square(sub(model.forward(data.graphs[i]), target)));
              backward(scale(sample_se, 1.0 / (4.0 * r * s)));
            }
          }
          adam_step(params, adam);
        }
        RegressionHistoryRow row;
        row.epoch = epoch;
        row.fold = fold;
        row.train_rmse = order.empty() ? 0.0 : std::sqrt(se_sum / (2.0 * static_cast<double>(order.size())));
        row.val_rmse = evaluate_regressor(model, data, plan.val).rmse;
        if (opts.eval_test_each_epoch) row.test_rmse = evaluate_regressor(model, data, split.test).rmse;
        best.history.push_back(row);
        if (row.val_rmse < best.val_rmse || best.params.size() == 0) {
          best.val_rmse = row.val_rmse;
          best.epoch = epoch;
          best.params = model.parameters().clone();
        }
        if (opts.log) {
          std::lock_guard lock(log_mu);
          char buf[160];
          std::snprintf(buf, sizeof(buf), "fold %zu epoch %zu train_rmse %.5f val_rmse %.5f test_rmse %.5f", fold, epoch,
                        row.train_rmse, row.val_rmse, row.test_rmse);
          opts.log(buf);
        }
      } catch (const NumericError& e) {
        ComputeTape::current().clear();
        throw NumericError("regressor training diverged (fold " + std::to_string(fold) + ", epoch " +
                           std::to_string(epoch) + ", step " + std::to_string(step) + "): " + e.what());
      }
    }
  });

  RegressorOutcome out;
  std::size_t best_fold = 0;
  for (std::size_t f = 0; f < folds; ++f) {
    out.history.insert(out.history.end(), results[f].history.begin(), results[f].history.end());
    if (results[f].val_rmse < results[best_fold].val_rmse) best_fold = f;
  }
  if (results[best_fold].params.size() == 0) throw ContractError("training ran zero epochs");
  out.best_fold = best_fold;
  out.best_epoch = results[best_fold].epoch;
  out.best_val_rmse = results[best_fold].val_rmse;

  GraphANet selected(config, 0);
  selected.parameters().assign_from(results[best_fold].params);
  out.checkpoint = selected.to_checkpoint(data.gases, data.maxima, opts.seed, out.best_epoch);
  out.checkpoint.architecture["selected_fold"] = best_fold;
  return out;
}

void write_predictions_csv(const std::vector<PredictionRow>& rows, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out << "sample_id,subset,gas1_true,gas1_pred,gas2_true,gas2_pred\n";
  char buf[32];
  auto put = [&](double v) {
    const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
    out << ',' << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf));
  };
  for (const auto& r : rows) {
    out << r.sample_id << ',' << r.subset;
    put(r.truth[0]);
    put(r.pred[0]);
    put(r.truth[1]);
    put(r.pred[1]);
    out << '\n';
  }
}

}  // namespace gasgraph
