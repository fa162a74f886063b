#include "gasgraph/training.hpp"

#include <charconv>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

#include "gasgraph/errors.hpp"

namespace gasgraph {

namespace {

void put(std::string& out, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  out.append(buf, res.ptr);
}

void write_text(const std::string& text, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out << text;
}

}  // namespace

void write_history_csv(const std::vector<HistoryRow>& rows, const std::filesystem::path& path) {
  std::string text = "epoch,fold,train_acc,val_acc,test_acc,train_loss,val_loss,test_loss\n";
  for (const auto& r : rows) {
    text += std::to_string(r.epoch) + ',' + std::to_string(r.fold);
    for (double v : {r.train_acc, r.val_acc, r.test_acc, r.train_loss, r.val_loss, r.test_loss}) {
      text += ',';
      put(text, v);
    }
    text += '\n';
  }
  write_text(text, path);
}

void write_history_csv(const std::vector<RegressionHistoryRow>& rows, const std::filesystem::path& path) {
  std::string text = "epoch,fold,train_rmse,val_rmse,test_rmse\n";
  for (const auto& r : rows) {
    text += std::to_string(r.epoch) + ',' + std::to_string(r.fold);
    for (double v : {r.train_rmse, r.val_rmse, r.test_rmse}) {
      text += ',';
      put(text, v);
    }
    text += '\n';
  }
  write_text(text, path);
}

std::vector<std::vector<std::size_t>> make_batches(const std::vector<std::size_t>& order, std::size_t batch_size) {
  if (batch_size == 0) throw ContractError("batch size must be positive");
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < order.size(); i += batch_size) {
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                     order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), i + batch_size)));
  }
  return out;
}

void run_folds(std::size_t folds, bool parallel, const std::function<void(std::size_t)>& fn) {
  if (!parallel || folds < 2) {
    for (std::size_t f = 0; f < folds; ++f) fn(f);
    return;
  }
  std::exception_ptr first_error;
  std::mutex mu;
  std::vector<std::thread> threads;
  threads.reserve(folds);
  for (std::size_t f = 0; f < folds; ++f) {
    threads.emplace_back([&, f] {
      try {
        fn(f);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

std::size_t folds_to_train(std::size_t available, const TrainOptions& opts) {
  if (available == 0) throw ContractError("split plan has no folds");
  return opts.max_folds == 0 ? available : std::min(available, opts.max_folds);
}

}  // namespace gasgraph
