#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace gasgraph {

// ---------------------------------------------------------------------------
// Classification

/// Counts with the true class on rows and the predicted class on columns.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t classes);
  static ConfusionMatrix from_counts(const std::vector<std::vector<std::size_t>>& counts);
  static ConfusionMatrix from_predictions(std::size_t classes, const std::vector<std::size_t>& truth,
                                          const std::vector<std::size_t>& predicted);

  void add(std::size_t truth, std::size_t predicted);
  std::size_t at(std::size_t truth, std::size_t predicted) const { return counts_.at(truth).at(predicted); }
  std::size_t classes() const { return counts_.size(); }
  std::size_t total() const;
  const std::vector<std::vector<std::size_t>>& counts() const { return counts_; }

 private:
  std::vector<std::vector<std::size_t>> counts_;
};

struct ClassificationReport {
  double accuracy = 0.0;
  double precision = 0.0;  // support-weighted
  double recall = 0.0;
  double f1 = 0.0;
  std::vector<double> class_precision;
  std::vector<double> class_recall;
  std::vector<double> class_f1;
  std::vector<std::size_t> support;
};

/// A class with no predicted samples has precision 0; F1 is 0 when P + R = 0.
ClassificationReport classification_report(const ConfusionMatrix& cm);

nlohmann::json to_json(const ClassificationReport& report, const ConfusionMatrix& cm,
                       const std::vector<std::string>& labels);
std::string to_text(const ClassificationReport& report, const ConfusionMatrix& cm,
                    const std::vector<std::string>& labels);

// ---------------------------------------------------------------------------
// Cross-dataset accuracy

enum class Coverage { PureOnly, PartialMixtures, AllMixtures };

struct DatasetDescriptor {
  std::string name;
  std::size_t gas_count = 0;  // C_j
  Coverage coverage = Coverage::PureOnly;
  /// N_k: number of k-component mixtures present, k = 2..C_j (partial coverage only).
  std::map<std::size_t, std::size_t> census;
  double support = 0.0;   // S_j
  double accuracy = 0.0;  // A_j
};

/// f(C_j): C_j for pure gases only, 2^C_j when every mixture is present, and
/// (sum_k N_k k)(2^C_j - C_j) / (C_j (2^(C_j-1) - 1)) + C_j otherwise.
double difficulty(const DatasetDescriptor& d);

/// sum S_j A_j / sum S_j
double support_weighted_accuracy(const std::vector<DatasetDescriptor>& ds);

/// sum f_j sqrt(S_j) A_j / sum f_j sqrt(S_j)
double comprehensive_accuracy(const std::vector<DatasetDescriptor>& ds);

/// Half-up rounding to `decimals` places (ties away from zero).
double round_half_up(double value, int decimals = 3);

/// A k/S accuracy that rounds to `reported`, chosen with k = round(reported S);
/// `reported` itself when k/S does not round back to it.
double snap_to_count(double reported, double support, int decimals = 3);

// ---------------------------------------------------------------------------
// Regression

struct RegressionReport {
  /// Per gas, R^2 over pure samples, mixed samples and all samples.
  std::array<std::optional<double>, 2> r2_pure;
  std::array<std::optional<double>, 2> r2_mixed;
  std::array<std::optional<double>, 2> r2_total;
  /// Both components pooled.
  std::optional<double> r2;
  std::optional<double> mae;
  std::optional<double> rmse;
  std::optional<double> mape_percent;
  std::optional<double> ev;
  std::size_t samples = 0;
  std::size_t mape_excluded = 0;
};

/// Targets below this (normalized) are left out of MAPE.
inline constexpr double kMapeFloor = 1e-6;

/// R^2 about the sample's own mean; empty when fewer than 2 values or zero variance.
std::optional<double> r2_score(const std::vector<double>& truth, const std::vector<double>& pred);
std::optional<double> explained_variance(const std::vector<double>& truth, const std::vector<double>& pred);

RegressionReport regression_report(const std::vector<std::array<double, 2>>& pred,
                                   const std::vector<std::array<double, 2>>& truth,
                                   const std::vector<std::string>& subsets);

/// Undefined metrics become null.
nlohmann::json to_json(const RegressionReport& report, const std::array<std::string, 2>& gases);
/// Undefined metrics print as "n/a".
std::string to_text(const RegressionReport& report, const std::array<std::string, 2>& gases);

}  // namespace gasgraph
