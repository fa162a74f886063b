#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "gasgraph/attnet.hpp"
#include "gasgraph/capsnet.hpp"
#include "gasgraph/training.hpp"

namespace gasgraph {

/// Everything a run depends on. Serialized in full so two runs can be
/// compared by diffing their resolved configs.
struct RunConfig {
  std::string task = "classify";  // classify | regress
  std::uint64_t seed = 0;
  std::string corpus;
  std::string split;

  // preprocessing
  std::size_t downsample_factor = 20;
  double skip_seconds = 100.0;

  // splitting
  double test_fraction = 0.16;
  std::size_t folds = 5;

  // optimization
  std::size_t classifier_epochs = 200;
  std::size_t regressor_epochs = 1000;
  std::size_t train_batch_size = 16;
  std::size_t val_batch_size = 16;
  std::size_t test_batch_size = 4;
  AdamConfig adam;
  std::size_t max_folds = 0;
  bool folds_parallel = false;
  bool eval_test_each_epoch = true;

  CapsNetConfig capsnet;
  AttNetConfig attnet;

  std::size_t epochs() const { return task == "regress" ? regressor_epochs : classifier_epochs; }
  TrainOptions train_options() const;

  nlohmann::json to_json() const;
  /// Missing keys keep their defaults; unknown keys are a contract error.
  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
  void validate() const;
};

}  // namespace gasgraph
