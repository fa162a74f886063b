#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "gasgraph/optim.hpp"

namespace gasgraph {

/// Optimization protocol shared by both models.
struct TrainOptions {
  std::size_t epochs = 200;
  std::size_t batch_size = 16;
  std::size_t eval_batch_size = 16;
  std::size_t test_batch_size = 4;
  AdamConfig adam;
  std::uint64_t seed = 0;
  bool folds_parallel = false;
  /// Train only the first `max_folds` folds; 0 trains all of them.
  std::size_t max_folds = 0;
  /// Evaluate the test set after every epoch (for learning curves).
  bool eval_test_each_epoch = true;
  /// Optional progress sink; called from the fold's thread.
  std::function<void(const std::string&)> log;
};

/// One row of the classifier learning curve.
struct HistoryRow {
  std::size_t epoch = 0;
  std::size_t fold = 0;
  double train_acc = 0.0;
  double val_acc = 0.0;
  double test_acc = 0.0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double test_loss = 0.0;
};

/// One row of the regressor learning curve (RMSE on normalized targets).
struct RegressionHistoryRow {
  std::size_t epoch = 0;
  std::size_t fold = 0;
  double train_rmse = 0.0;
  double val_rmse = 0.0;
  double test_rmse = 0.0;
};

/// Header `epoch,fold,train_acc,val_acc,test_acc,train_loss,val_loss,test_loss`.
void write_history_csv(const std::vector<HistoryRow>& rows, const std::filesystem::path& path);
/// Header `epoch,fold,train_rmse,val_rmse,test_rmse`.
void write_history_csv(const std::vector<RegressionHistoryRow>& rows, const std::filesystem::path& path);

/// Contiguous mini-batches over `order`.
std::vector<std::vector<std::size_t>> make_batches(const std::vector<std::size_t>& order, std::size_t batch_size);

/// Runs fn(fold) for each fold, on separate threads when `parallel`.
/// The first exception raised by any fold is rethrown.
void run_folds(std::size_t folds, bool parallel, const std::function<void(std::size_t)>& fn);

std::size_t folds_to_train(std::size_t available, const TrainOptions& opts);

}  // namespace gasgraph
