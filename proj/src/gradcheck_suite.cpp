#include "gasgraph/gradcheck_suite.hpp"

#include <algorithm>
#include <cstdio>
#include <functional>
#include <memory>

#include "gasgraph/attnet.hpp"
#include "gasgraph/capsnet.hpp"
#include "gasgraph/gcn.hpp"
#include "gasgraph/gradcheck.hpp"
#include "gasgraph/graphio.hpp"
#include "gasgraph/ops.hpp"
#include "gasgraph/rng.hpp"

namespace gasgraph {

namespace {

struct Case {
  std::function<Tensor()> loss;
  std::vector<Tensor> inputs;
};

using Builder = std::function<Case(Rng&)>;

// Gradients that are structurally zero (such as a key bias under softmax
// shift invariance) leave only finite-difference rounding, ~1e-10 here.
constexpr double kAbsFloor = 1e-5;

Tensor randn(Shape shape, Rng& rng, double sd = 1.0) {
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) x = sd * rng.normal();
  return Tensor(std::move(shape), std::move(v));
}

Tensor randu(Shape shape, Rng& rng, double lo, double hi) {
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) x = rng.uniform(lo, hi);
  return Tensor(std::move(shape), std::move(v));
}

/// Reduces a tensor-valued function to a scalar through a fixed random
/// projection, so no output entry gets a structurally zero gradient.
std::function<Tensor()> projected(std::function<Tensor()> f, std::uint64_t seed) {
  auto weights = std::make_shared<Tensor>();
  return [f = std::move(f), weights, seed] {
    Tensor y = f();
    if (!weights->defined()) {
      Rng r(seed);
      *weights = randn(y.shape(), r);
    }
    return sum(mul(y, *weights));
  };
}

Builder unary(std::function<Tensor(const Tensor&)> op, Shape shape, double lo = -2.0, double hi = 2.0) {
  return [op = std::move(op), shape, lo, hi](Rng& rng) {
    Tensor x = randu(shape, rng, lo, hi);
    return Case{projected([op, x] { return op(x); }, rng.next_u64()), {x}};
  };
}

Builder binary(std::function<Tensor(const Tensor&, const Tensor&)> op, Shape sa, Shape sb, double lo = -2.0,
               double hi = 2.0) {
  return [op = std::move(op), sa, sb, lo, hi](Rng& rng) {
    Tensor a = randu(sa, rng, lo, hi);
    Tensor b = randu(sb, rng, lo, hi);
    return Case{projected([op, a, b] { return op(a, b); }, rng.next_u64()), {a, b}};
  };
}

/// Random biases keep ReLU inputs off their kink: with zero biases a node
/// whose previous activations all vanish has a pre-activation of exactly 0.
void jitter(const std::vector<Tensor>& params, Rng& rng, double sd = 0.1) {
  for (auto p : params) {
    for (auto& v : p.mutable_data()) v += sd * rng.normal();
  }
}

CapsNetConfig tiny_capsnet() {
  CapsNetConfig c;
  c.in_features = 4;
  c.gcn_layers = 4;
  c.gcn_filters = 8;
  c.feature_caps = 4;
  c.caps_dim = 4;
  c.classes = 3;
  c.recon_hidden = 8;
  c.theta = 0.5;
  return c;
}

AttNetConfig tiny_attnet() {
  AttNetConfig c;
  c.in_features = 4;
  c.gcn_layers = 2;
  c.gcn_filters = 4;
  c.pooled_nodes = 10;
  c.blocks = 2;
  c.heads = 2;
  c.mlp_ratio = 2;
  return c;
}

std::vector<std::pair<std::string, Builder>> primitive_cases() {
  std::vector<std::pair<std::string, Builder>> cases;
  cases.emplace_back("add (broadcast)", binary([](auto& a, auto& b) { return add(a, b); }, {3, 4}, {4}));
  cases.emplace_back("sub (broadcast)", binary([](auto& a, auto& b) { return sub(a, b); }, {2, 3, 4}, {3, 1}));
  cases.emplace_back("mul (broadcast)", binary([](auto& a, auto& b) { return mul(a, b); }, {3, 4}, {3, 1}));
  cases.emplace_back("div", binary([](auto& a, auto& b) { return div(a, b); }, {3, 4}, {3, 4}, 0.5, 2.0));
  cases.emplace_back("neg/scale/add_scalar",
                     unary([](auto& a) { return add_scalar(scale(neg(a), 1.7), 0.3); }, {5}));
  cases.emplace_back("square", unary([](auto& a) { return square(a); }, {4, 3}));
  cases.emplace_back("sqrt", unary([](auto& a) { return sqrt(a); }, {4, 3}, 0.5, 2.0));
  cases.emplace_back("exp", unary([](auto& a) { return exp(a); }, {4, 3}));
  cases.emplace_back("relu", unary([](auto& a) { return relu(a); }, {4, 3}));
  cases.emplace_back("sigmoid", unary([](auto& a) { return sigmoid(a); }, {4, 3}));
  cases.emplace_back("tanh", unary([](auto& a) { return tanh(a); }, {4, 3}));
  cases.emplace_back("gelu", unary([](auto& a) { return gelu(a); }, {4, 3}));
  cases.emplace_back("matmul", binary([](auto& a, auto& b) { return matmul(a, b); }, {3, 4}, {4, 5}));
  cases.emplace_back("bmm", binary([](auto& a, auto& b) { return bmm(a, b); }, {2, 3, 4}, {2, 4, 5}));
  cases.emplace_back("spmm", [](Rng& rng) {
    auto a = std::make_shared<const SparseMatrix>(build_chain_graph(randn({6, 2}, rng)).normalized);
    Tensor x = randn({6, 3}, rng);
    return Case{projected([a, x] { return spmm(*a, x); }, rng.next_u64()), {x}};
  });
  cases.emplace_back("transpose", unary([](auto& a) { return transpose(a); }, {3, 4}));
  cases.emplace_back("swap_axes", unary([](auto& a) { return swap_axes(a, 0, 2); }, {2, 3, 4}));
  cases.emplace_back("reshape", unary([](auto& a) { return reshape(a, {4, 3}); }, {2, 6}));
  cases.emplace_back("concat", binary([](auto& a, auto& b) { return concat({a, b}, 1); }, {3, 2}, {3, 4}));
  cases.emplace_back("stack", binary([](auto& a, auto& b) { return stack({a, b}); }, {3, 2}, {3, 2}));
  cases.emplace_back("slice", unary([](auto& a) { return slice(a, 1, 1, 2); }, {3, 4}));
  cases.emplace_back("sum", unary([](auto& a) { return mul(sum(a), sum(a, 1)); }, {3, 4}));
  cases.emplace_back("mean", unary([](auto& a) { return mul(mean(a), mean(a, 0)); }, {3, 4}));
  cases.emplace_back("softmax", unary([](auto& a) { return softmax(a, 1); }, {3, 4}));
  cases.emplace_back("layer_norm", unary([](auto& a) { return layer_norm(a); }, {3, 5}));
  cases.emplace_back("l2_norm", unary([](auto& a) { return l2_norm(a, 1); }, {3, 4}));
  cases.emplace_back("squash", unary([](auto& a) { return squash(a, 2); }, {2, 3, 4}));
  return cases;
}

std::vector<std::pair<std::string, Builder>> layer_cases() {
  std::vector<std::pair<std::string, Builder>> cases;
  cases.emplace_back("gcn stack", [](Rng& rng) {
    ParameterSet params;
    auto gcn = std::make_shared<GcnStack>(3, 4, 3, params, "gcn", rng);
    auto g = std::make_shared<ChainGraph>(build_chain_graph(randn({6, 3}, rng)));
    auto inputs = params.tensors();
    jitter(inputs, rng);
    inputs.push_back(g->x);
    return Case{projected([gcn, g] { return stack_capsules(gcn->forward(g->normalized, g->x)); }, rng.next_u64()),
                inputs};
  });
  cases.emplace_back("attention block", [](Rng& rng) {
    ParameterSet params;
    auto block = std::make_shared<AttentionBlock>(4, 3, params, "att", rng);
    Tensor s = randn({4, 5, 3}, rng);
    auto inputs = params.tensors();
    jitter(inputs, rng);
    inputs.push_back(s);
    return Case{projected([block, s] { return block->forward(s).capsules; }, rng.next_u64()), inputs};
  });
  cases.emplace_back("routing stage", [](Rng& rng) {
    ParameterSet params;
    auto stage = std::make_shared<RoutingStage>(3, 4, 4, 3, 3, params, "route", rng);
    Tensor u = squash(randn({3, 5, 4}, rng), 2);
    auto inputs = params.tensors();
    jitter(inputs, rng);
    inputs.push_back(u);
    return Case{projected([stage, u] { return stage->forward(u).capsules; }, rng.next_u64()), inputs};
  });
  cases.emplace_back("dynamic routing", [](Rng& rng) {
    Tensor votes = randn({6, 3, 4}, rng, 0.5);
    return Case{projected([votes] { return dynamic_routing(votes, 3).capsules; }, rng.next_u64()), {votes}};
  });
  cases.emplace_back("layer norm (affine)", [](Rng& rng) {
    ParameterSet params;
    auto ln = std::make_shared<LayerNorm>(5, params, "ln");
    jitter(params.tensors(), rng, 0.3);
    Tensor x = randn({4, 5}, rng);
    auto inputs = params.tensors();
    jitter(inputs, rng);
    inputs.push_back(x);
    return Case{projected([ln, x] { return ln->forward(x); }, rng.next_u64()), inputs};
  });
  cases.emplace_back("multi-head attention", [](Rng& rng) {
    ParameterSet params;
    auto mha = std::make_shared<MultiHeadAttention>(6, 2, params, "mha", rng);
    Tensor x = randn({5, 6}, rng);
    auto inputs = params.tensors();
    jitter(inputs, rng);
    inputs.push_back(x);
    return Case{projected([mha, x] { return mha->forward(x).out; }, rng.next_u64()), inputs};
  });
  cases.emplace_back("encoder block", [](Rng& rng) {
    ParameterSet params;
    auto block = std::make_shared<EncoderBlock>(4, 2, 2, params, "blk", rng);
    Tensor x = randn({5, 4}, rng);
    auto inputs = params.tensors();
    jitter(inputs, rng);
    inputs.push_back(x);
    return Case{projected([block, x] { return block->forward(x).out; }, rng.next_u64()), inputs};
  });
  cases.emplace_back("pool + token", [](Rng& rng) {
    Tensor x = randn({13, 3}, rng);
    Tensor token = randn({1, 3}, rng);
    return Case{projected([x, token] { return prepend_token(pool_nodes(x, 5), token); }, rng.next_u64()), {x, token}};
  });
  cases.emplace_back("margin loss", [](Rng& rng) {
    Tensor caps = randn({3, 4}, rng, 0.35);
    const std::size_t cls = rng.below(3);
    return Case{[caps, cls] { return margin_loss(caps, cls); }, {caps}};
  });
  cases.emplace_back("reconstruction loss", [](Rng& rng) {
    Tensor decoded = randu({6}, rng, 0.0, 1.0);
    std::vector<double> hist(6), presence(6);
    for (std::size_t i = 0; i < 6; ++i) {
      presence[i] = rng.uniform() < 0.5 ? 1.0 : 0.0;
      hist[i] = presence[i] * rng.uniform();
    }
    return Case{[decoded, hist, presence] { return reconstruction_loss(decoded, hist, presence); }, {decoded}};
  });
  cases.emplace_back("total loss", [](Rng& rng) {
    Tensor a = randu({1}, rng, 0.0, 1.0);
    Tensor b = randu({1}, rng, 0.0, 1.0);
    return Case{[a, b] { return total_loss(square(a), square(b), 0.0005); }, {a, b}};
  });
  cases.emplace_back("rmse loss", [](Rng& rng) {
    Tensor pred = randn({4, 2}, rng);
    Tensor target = randu({4, 2}, rng, 0.0, 1.0);
    return Case{[pred, target] { return rmse_loss(pred, target); }, {pred}};
  });
  return cases;
}

std::vector<std::pair<std::string, Builder>> model_cases() {
  std::vector<std::pair<std::string, Builder>> cases;
  cases.emplace_back("GraphCapsNet (tiny)", [](Rng& rng) {
    const CapsNetConfig cfg = tiny_capsnet();
    auto model = std::make_shared<GraphCapsNet>(cfg, rng.next_u64());
    jitter(model->parameters().tensors(), rng);
    auto g = std::make_shared<ChainGraph>(build_chain_graph(randn({8, cfg.in_features}, rng)));
    auto target = std::make_shared<AttributeHistogram>(attribute_histogram(g->x));
    const std::size_t cls = rng.below(cfg.classes);
    return Case{[model, g, target, cls] { return model->loss(model->forward(*g), cls, *target, cls).total; },
                model->parameters().tensors()};
  });
  cases.emplace_back("GraphANet (tiny)", [](Rng& rng) {
    const AttNetConfig cfg = tiny_attnet();
    auto model = std::make_shared<GraphANet>(cfg, rng.next_u64());
    jitter(model->parameters().tensors(), rng);
    auto g = std::make_shared<ChainGraph>(build_chain_graph(randn({12, cfg.in_features}, rng)));
    Tensor target = randu({1, 2}, rng, 0.0, 1.0);
    return Case{[model, g, target] { return rmse_loss(reshape(model->forward(*g), {1, 2}), target); },
                model->parameters().tensors()};
  });
  return cases;
}

}  // namespace

std::vector<GradCheckRow> run_gradcheck_suite(const GradSuiteOptions& options) {
  auto cases = primitive_cases();
  for (auto& c : layer_cases()) cases.push_back(std::move(c));
  if (options.include_models) {
    for (auto& c : model_cases()) cases.push_back(std::move(c));
  }
  std::vector<GradCheckRow> rows;
  for (std::size_t ci = 0; ci < cases.size(); ++ci) {
    GradCheckRow row;
    row.name = cases[ci].first;
    row.tolerance = options.tolerance;
    for (std::size_t s = 0; s < options.seeds; ++s) {
      Rng rng = Rng(options.base_seed).split(ci * 1000 + s);
      Case c = cases[ci].second(rng);
      const auto r = gradient_check(c.loss, c.inputs, 1e-5, kAbsFloor);
      row.max_rel_error = std::max(row.max_rel_error, r.max_rel_error);
      row.entries += r.entries;
      ++row.seeds;
    }
    row.passed = row.max_rel_error < options.tolerance;
    rows.push_back(row);
  }
  return rows;
}

std::string format_gradcheck_table(const std::vector<GradCheckRow>& rows) {
  char buf[160];
  std::string out;
  std::snprintf(buf, sizeof(buf), "%-24s%8s%10s%14s%8s\n", "op", "seeds", "entries", "max_rel_err", "status");
  out += buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%-24s%8zu%10zu%14.3e%8s\n", r.name.c_str(), r.seeds, r.entries, r.max_rel_error,
                  r.passed ? "PASS" : "FAIL");
    out += buf;
  }
  return out;
}

}  // namespace gasgraph
