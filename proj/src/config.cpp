#include "gasgraph/config.hpp"

#include <fstream>
#include <set>

#include "gasgraph/errors.hpp"

namespace gasgraph {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const json& reference, const std::string& where) {
  if (!j.is_object()) throw ContractError(where + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!reference.contains(key)) throw ContractError("unknown config key '" + where + key + "'");
    if (reference[key].is_object()) reject_unknown(value, reference[key], where + key + ".");
  }
}

template <typename T>
void read(const json& j, const char* key, T& field) {
  if (!j.contains(key)) return;
  try {
    field = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ContractError(std::string("config key '") + key + "': " + e.what());
  }
}

}  // namespace

TrainOptions RunConfig::train_options() const {
  TrainOptions o;
  o.epochs = epochs();
  o.batch_size = train_batch_size;
  o.eval_batch_size = val_batch_size;
  o.test_batch_size = test_batch_size;
  o.adam = adam;
  o.seed = seed;
  o.folds_parallel = folds_parallel;
  o.max_folds = max_folds;
  o.eval_test_each_epoch = eval_test_each_epoch;
  return o;
}

json RunConfig::to_json() const {
  return json{{"task", task},
              {"seed", seed},
              {"corpus", corpus},
              {"split", split},
              {"preprocess", {{"downsample_factor", downsample_factor}, {"skip_seconds", skip_seconds}}},
              {"splitting", {{"test_fraction", test_fraction}, {"folds", folds}}},
              {"training",
               {{"classifier_epochs", classifier_epochs},
                {"regressor_epochs", regressor_epochs},
                {"train_batch_size", train_batch_size},
                {"val_batch_size", val_batch_size},
                {"test_batch_size", test_batch_size},
                {"learning_rate", adam.lr},
                {"beta1", adam.beta1},
                {"beta2", adam.beta2},
                {"eps", adam.eps},
                {"weight_decay", adam.weight_decay},
                {"max_folds", max_folds},
                {"folds_parallel", folds_parallel},
                {"eval_test_each_epoch", eval_test_each_epoch}}},
              {"capsnet", capsnet.to_json()},
              {"attnet", attnet.to_json()}};
}

RunConfig RunConfig::from_json(const json& j) {
  RunConfig c;
  reject_unknown(j, c.to_json(), "");
  read(j, "task", c.task);
  read(j, "seed", c.seed);
  read(j, "corpus", c.corpus);
  read(j, "split", c.split);
  if (j.contains("preprocess")) {
    const auto& p = j["preprocess"];
    read(p, "downsample_factor", c.downsample_factor);
    read(p, "skip_seconds", c.skip_seconds);
  }
  if (j.contains("splitting")) {
    const auto& s = j["splitting"];
    read(s, "test_fraction", c.test_fraction);
    read(s, "folds", c.folds);
  }
  if (j.contains("training")) {
    const auto& t = j["training"];
    read(t, "classifier_epochs", c.classifier_epochs);
    read(t, "regressor_epochs", c.regressor_epochs);
    read(t, "train_batch_size", c.train_batch_size);
    read(t, "val_batch_size", c.val_batch_size);
    read(t, "test_batch_size", c.test_batch_size);
    read(t, "learning_rate", c.adam.lr);
    read(t, "beta1", c.adam.beta1);
    read(t, "beta2", c.adam.beta2);
    read(t, "eps", c.adam.eps);
    read(t, "weight_decay", c.adam.weight_decay);
    read(t, "max_folds", c.max_folds);
    read(t, "folds_parallel", c.folds_parallel);
    read(t, "eval_test_each_epoch", c.eval_test_each_epoch);
  }
  try {
    if (j.contains("capsnet")) c.capsnet = CapsNetConfig::from_json(j["capsnet"]);
    if (j.contains("attnet")) c.attnet = AttNetConfig::from_json(j["attnet"]);
  } catch (const json::exception& e) {
    throw ContractError(std::string("architecture config: ") + e.what());
  }
  c.validate();
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ContractError("cannot read config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ContractError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return from_json(j);
}

void RunConfig::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out << to_json().dump(2) << '\n';
}

void RunConfig::validate() const {
  if (task != "classify" && task != "regress") throw ContractError("task must be 'classify' or 'regress', got '" + task + "'");
  if (downsample_factor == 0) throw ContractError("downsample_factor must be >= 1");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ContractError("test_fraction must lie in (0, 1)");
  if (folds < 2) throw ContractError("folds must be >= 2");
  if (train_batch_size == 0 || val_batch_size == 0 || test_batch_size == 0) throw ContractError("batch sizes must be positive");
  if (!(adam.lr > 0.0)) throw ContractError("learning_rate must be positive");
  if (capsnet.routing_iters == 0) throw ContractError("routing_iters must be >= 1");
  if (attnet.heads == 0 || attnet.width() % attnet.heads != 0) {
    throw ContractError("attnet width " + std::to_string(attnet.width()) + " is not divisible by " +
                        std::to_string(attnet.heads) + " heads");
  }
  if (attnet.pooled_nodes == 0) throw ContractError("pooled_nodes must be positive");
}

}  // namespace gasgraph
