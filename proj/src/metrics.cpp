#include "gasgraph/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "gasgraph/errors.hpp"

namespace gasgraph {

using nlohmann::json;

ConfusionMatrix::ConfusionMatrix(std::size_t classes) : counts_(classes, std::vector<std::size_t>(classes, 0)) {
  if (classes == 0) throw ContractError("confusion matrix needs at least one class");
}

ConfusionMatrix ConfusionMatrix::from_counts(const std::vector<std::vector<std::size_t>>& counts) {
  ConfusionMatrix cm(counts.size());
  for (const auto& row : counts) {
    if (row.size() != counts.size()) throw DimensionError("confusion matrix must be square");
  }
  cm.counts_ = counts;
  return cm;
}

ConfusionMatrix ConfusionMatrix::from_predictions(std::size_t classes, const std::vector<std::size_t>& truth,
                                                  const std::vector<std::size_t>& predicted) {
  if (truth.size() != predicted.size()) throw DimensionError("truth and prediction lengths differ");
  ConfusionMatrix cm(classes);
  for (std::size_t i = 0; i < truth.size(); ++i) cm.add(truth[i], predicted[i]);
  return cm;
}

void ConfusionMatrix::add(std::size_t truth, std::size_t predicted) {
  if (truth >= classes() || predicted >= classes()) throw ContractError("class id out of range");
  ++counts_[truth][predicted];
}

std::size_t ConfusionMatrix::total() const {
  std::size_t t = 0;
  for (const auto& row : counts_)
    for (auto c : row) t += c;
  return t;
}

ClassificationReport classification_report(const ConfusionMatrix& cm) {
  const std::size_t c = cm.classes();
  const std::size_t total = cm.total();
  if (total == 0) throw ContractError("classification report needs at least one sample");
  ClassificationReport r;
  r.class_precision.assign(c, 0.0);
  r.class_recall.assign(c, 0.0);
  r.class_f1.assign(c, 0.0);
  r.support.assign(c, 0);
  std::size_t trace = 0;
  for (std::size_t k = 0; k < c; ++k) {
    std::size_t predicted = 0;
    for (std::size_t t = 0; t < c; ++t) {
      r.support[k] += cm.at(k, t);
      predicted += cm.at(t, k);
    }
    const double tp = static_cast<double>(cm.at(k, k));
    trace += cm.at(k, k);
    if (predicted > 0) r.class_precision[k] = tp / static_cast<double>(predicted);
    if (r.support[k] > 0) r.class_recall[k] = tp / static_cast<double>(r.support[k]);
    const double pr = r.class_precision[k] + r.class_recall[k];
    if (pr > 0.0) r.class_f1[k] = 2.0 * r.class_precision[k] * r.class_recall[k] / pr;
    const double w = static_cast<double>(r.support[k]) / static_cast<double>(total);
    r.precision += w * r.class_precision[k];
    r.recall += w * r.class_recall[k];
    r.f1 += w * r.class_f1[k];
  }
  r.accuracy = static_cast<double>(trace) / static_cast<double>(total);
  return r;
}

json to_json(const ClassificationReport& report, const ConfusionMatrix& cm, const std::vector<std::string>& labels) {
  json per_class = json::array();
  for (std::size_t k = 0; k < cm.classes(); ++k) {
    per_class.push_back({{"label", k < labels.size() ? labels[k] : std::to_string(k)},
                         {"precision", report.class_precision[k]},
                         {"recall", report.class_recall[k]},
                         {"f1", report.class_f1[k]},
                         {"support", report.support[k]}});
  }
  return json{{"accuracy", report.accuracy},   {"weighted_precision", report.precision},
              {"weighted_recall", report.recall}, {"weighted_f1", report.f1},
              {"per_class", per_class},        {"labels", labels},
              {"confusion_matrix", cm.counts()}};
}

std::string to_text(const ClassificationReport& report, const ConfusionMatrix& cm,
                    const std::vector<std::string>& labels) {
  std::size_t w = 8;
  for (const auto& l : labels) w = std::max(w, l.size() + 1);
  char buf[256];
  std::string out = "confusion matrix (rows: true, columns: predicted)\n";
  out += std::string(w, ' ');
  for (std::size_t k = 0; k < cm.classes(); ++k) {
    std::snprintf(buf, sizeof(buf), "%*s", static_cast<int>(w), labels.at(k).c_str());
    out += buf;
  }
  out += '\n';
  for (std::size_t t = 0; t < cm.classes(); ++t) {
    std::snprintf(buf, sizeof(buf), "%-*s", static_cast<int>(w), labels.at(t).c_str());
    out += buf;
    for (std::size_t p = 0; p < cm.classes(); ++p) {
      std::snprintf(buf, sizeof(buf), "%*zu", static_cast<int>(w), cm.at(t, p));
      out += buf;
    }
    out += '\n';
  }
  out += '\n';
  std::snprintf(buf, sizeof(buf), "%-*s%10s%10s%10s%10s\n", static_cast<int>(w), "class", "precision", "recall", "f1",
                "support");
  out += buf;
  for (std::size_t k = 0; k < cm.classes(); ++k) {
    std::snprintf(buf, sizeof(buf), "%-*s%10.3f%10.3f%10.3f%10zu\n", static_cast<int>(w), labels.at(k).c_str(),
                  report.class_precision[k], report.class_recall[k], report.class_f1[k], report.support[k]);
    out += buf;
  }
  std::snprintf(buf, sizeof(buf), "%-*s%10.3f%10.3f%10.3f%10zu\n", static_cast<int>(w), "weighted", report.precision,
                report.recall, report.f1, cm.total());
  out += buf;
  std::snprintf(buf, sizeof(buf), "accuracy %.4f\n", report.accuracy);
  out += buf;
  return out;
}

// ---------------------------------------------------------------------------

namespace {

double binomial(std::size_t n, std::size_t k) {
  double r = 1.0;
  for (std::size_t i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return r;
}

void check_descriptor(const DatasetDescriptor& d) {
  if (d.gas_count == 0) throw ContractError("dataset '" + d.name + "' has no gases");
  if (!(d.support > 0.0)) throw ContractError("dataset '" + d.name + "' needs a positive support");
  if (!(d.accuracy >= 0.0 && d.accuracy <= 1.0)) throw ContractError("dataset '" + d.name + "' accuracy outside [0,1]");
}

}  // namespace

double difficulty(const DatasetDescriptor& d) {
  check_descriptor(d);
  const double c = static_cast<double>(d.gas_count);
  switch (d.coverage) {
    case Coverage::PureOnly:
      if (!d.census.empty()) throw ContractError("dataset '" + d.name + "' is pure-only but has a mixture census");
      return c;
    case Coverage::AllMixtures:
      return std::ldexp(1.0, static_cast<int>(d.gas_count));
    case Coverage::PartialMixtures: {
      if (d.gas_count < 2) throw ContractError("dataset '" + d.name + "' cannot hold mixtures with one gas");
      double weighted = 0.0;
      for (const auto& [k, n] : d.census) {
        if (k < 2 || k > d.gas_count) throw ContractError("mixture order " + std::to_string(k) + " out of range");
        if (static_cast<double>(n) > binomial(d.gas_count, k)) {
          throw ContractError("census N_" + std::to_string(k) + " exceeds C(" + std::to_string(d.gas_count) + "," +
                              std::to_string(k) + ")");
        }
        weighted += static_cast<double>(n * k);
      }
      const double full = std::ldexp(1.0, static_cast<int>(d.gas_count));
      const double half = std::ldexp(1.0, static_cast<int>(d.gas_count) - 1);
      return weighted * (full - c) / (c * (half - 1.0)) + c;
    }
  }
  throw ContractError("unknown coverage kind");
}

double support_weighted_accuracy(const std::vector<DatasetDescriptor>& ds) {
  if (ds.empty()) throw ContractError("no datasets");
  double num = 0.0, den = 0.0;
  for (const auto& d : ds) {
    check_descriptor(d);
    num += d.support * d.accuracy;
    den += d.support;
  }
  return num / den;
}

double comprehensive_accuracy(const std::vector<DatasetDescriptor>& ds) {
  if (ds.empty()) throw ContractError("no datasets");
  double num = 0.0, den = 0.0;
  for (const auto& d : ds) {
    const double w = difficulty(d) * std::sqrt(d.support);
    num += w * d.accuracy;
    den += w;
  }
  return num / den;
}

double round_half_up(double value, int decimals) {
  const double scale = std::pow(10.0, decimals);
  // The small nudge absorbs representation error in values such as 0.9475.
  const double scaled = value * scale;
  const double nudged = scaled + std::copysign(1e-9 * std::max(1.0, std::fabs(scaled)), scaled);
  return std::copysign(std::floor(std::fabs(nudged) + 0.5), value) / scale;
}

double snap_to_count(double reported, double support, int decimals) {
  if (!(support > 0.0)) throw ContractError("support must be positive");
  const double k = std::round(reported * support);
  const double snapped = k / support;
  const double half_ulp = 0.5 * std::pow(10.0, -decimals);
  return std::fabs(snapped - reported) < half_ulp ? snapped : reported;
}

// ---------------------------------------------------------------------------

namespace {

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

std::optional<double> r2_score(const std::vector<double>& truth, const std::vector<double>& pred) {
  if (truth.size() != pred.size()) throw DimensionError("truth and prediction lengths differ");
  if (truth.size() < 2) return std::nullopt;
  const double mu = mean_of(truth);
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    ss_res += (truth[i] - pred[i]) * (truth[i] - pred[i]);
    ss_tot += (truth[i] - mu) * (truth[i] - mu);
  }
  if (ss_tot == 0.0) return std::nullopt;
  return 1.0 - ss_res / ss_tot;
}

std::optional<double> explained_variance(const std::vector<double>& truth, const std::vector<double>& pred) {
  if (truth.size() != pred.size()) throw DimensionError("truth and prediction lengths differ");
  if (truth.size() < 2) return std::nullopt;
  std::vector<double> res(truth.size());
  for (std::size_t i = 0; i < truth.size(); ++i) res[i] = truth[i] - pred[i];
  const double mu_t = mean_of(truth);
  const double mu_r = mean_of(res);
  double var_t = 0.0, var_r = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    var_t += (truth[i] - mu_t) * (truth[i] - mu_t);
    var_r += (res[i] - mu_r) * (res[i] - mu_r);
  }
  if (var_t == 0.0) return std::nullopt;
  return 1.0 - var_r / var_t;
}

RegressionReport regression_report(const std::vector<std::array<double, 2>>& pred,
                                   const std::vector<std::array<double, 2>>& truth,
                                   const std::vector<std::string>& subsets) {
  if (pred.size() != truth.size() || pred.size() != subsets.size()) {
    throw DimensionError("regression report inputs differ in length: " + std::to_string(pred.size()) + " predictions, " +
                         std::to_string(truth.size()) + " targets, " + std::to_string(subsets.size()) + " subsets");
  }
  for (const auto& s : subsets) {
    if (s != "pure" && s != "mixed") throw ContractError("unknown subset '" + s + "'");
  }
  RegressionReport r;
  r.samples = pred.size();
  for (int g = 0; g < 2; ++g) {
    std::vector<double> t_pure, p_pure, t_mixed, p_mixed, t_all, p_all;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      auto& tt = subsets[i] == "pure" ? t_pure : t_mixed;
      auto& pp = subsets[i] == "pure" ? p_pure : p_mixed;
      tt.push_back(truth[i][g]);
      pp.push_back(pred[i][g]);
      t_all.push_back(truth[i][g]);
      p_all.push_back(pred[i][g]);
    }
    r.r2_pure[g] = r2_score(t_pure, p_pure);
    r.r2_mixed[g] = r2_score(t_mixed, p_mixed);
    r.r2_total[g] = r2_score(t_all, p_all);
  }

  std::vector<double> t, p;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    for (int g = 0; g < 2; ++g) {
      t.push_back(truth[i][g]);
      p.push_back(pred[i][g]);
    }
  }
  r.r2 = r2_score(t, p);
  r.ev = explained_variance(t, p);
  if (!t.empty()) {
    double abs_sum = 0.0, sq_sum = 0.0, pct_sum = 0.0;
    std::size_t pct_n = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double e = p[i] - t[i];
      abs_sum += std::fabs(e);
      sq_sum += e * e;
      if (std::fabs(t[i]) >= kMapeFloor) {
        pct_sum += std::fabs(e) / std::fabs(t[i]);
        ++pct_n;
      } else {
        ++r.mape_excluded;
      }
    }
    const double n = static_cast<double>(t.size());
    r.mae = abs_sum / n;
    r.rmse = std::sqrt(sq_sum / n);
    if (pct_n > 0) r.mape_percent = 100.0 * pct_sum / static_cast<double>(pct_n);
  }
  return r;
}

namespace {

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string fmt(const std::optional<double>& v) {
  if (!v) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", *v);
  return buf;
}

}  // namespace

json to_json(const RegressionReport& report, const std::array<std::string, 2>& gases) {
  json per_gas = json::array();
  for (int g = 0; g < 2; ++g) {
    per_gas.push_back({{"gas", gases[g]},
                       {"r2_pure", opt(report.r2_pure[g])},
                       {"r2_mixed", opt(report.r2_mixed[g])},
                       {"r2_total", opt(report.r2_total[g])}});
  }
  return json{{"samples", report.samples},
              {"per_gas", per_gas},
              {"overall",
               {{"r2", opt(report.r2)},
                {"mae", opt(report.mae)},
                {"rmse", opt(report.rmse)},
                {"mape_percent", opt(report.mape_percent)},
                {"ev", opt(report.ev)},
                {"mape_excluded", report.mape_excluded}}}};
}

std::string to_text(const RegressionReport& report, const std::array<std::string, 2>& gases) {
  char buf[256];
  std::string out;
  std::snprintf(buf, sizeof(buf), "%-12s%10s%10s%10s\n", "gas", "R2 pure", "R2 mixed", "R2 total");
  out += buf;
  for (int g = 0; g < 2; ++g) {
    std::snprintf(buf, sizeof(buf), "%-12s%10s%10s%10s\n", gases[g].c_str(), fmt(report.r2_pure[g]).c_str(),
                  fmt(report.r2_mixed[g]).c_str(), fmt(report.r2_total[g]).c_str());
    out += buf;
  }
  std::snprintf(buf, sizeof(buf), "\n%-12s%10s%10s%10s%10s%10s\n", "overall", "R2", "MAE", "RMSE", "MAPE%", "EV");
  out += buf;
  std::snprintf(buf, sizeof(buf), "%-12s%10s%10s%10s%10s%10s\n", "", fmt(report.r2).c_str(), fmt(report.mae).c_str(),
                fmt(report.rmse).c_str(), fmt(report.mape_percent).c_str(), fmt(report.ev).c_str());
  out += buf;
  std::snprintf(buf, sizeof(buf), "samples %zu, MAPE excluded %zu near-zero targets\n", report.samples,
                report.mape_excluded);
  out += buf;
  return out;
}

}  // namespace gasgraph
