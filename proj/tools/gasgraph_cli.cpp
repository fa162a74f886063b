// gasgraph command-line front end.
//
// Exit codes: 0 success, 2 usage/config/format error, 3 numerical failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "gasgraph/attnet.hpp"
#include "gasgraph/capsnet.hpp"
#include "gasgraph/checkpoint.hpp"
#include "gasgraph/config.hpp"
#include "gasgraph/errors.hpp"
#include "gasgraph/gradcheck_suite.hpp"
#include "gasgraph/graphio.hpp"
#include "gasgraph/metrics.hpp"
#include "gasgraph/synthetic.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace gasgraph;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;

// Per-class segment counts of the public recordings, keyed by group.
const std::map<std::string, std::map<std::string, std::size_t>> kUciReferenceCounts = {
    {"A", {{"Air", 89}, {"CO", 71}, {"C2H4", 111}, {"CO-C2H4", 100}}},
    {"B", {{"Air", 98}, {"CH4", 76}, {"C2H4", 89}, {"CH4-C2H4", 86}}},
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out << text;
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

/// --seed, then GASGRAPH_SEED, then the config value.
std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag, std::uint64_t fallback) {
  if (flag) return *flag;
  if (const char* env = std::getenv("GASGRAPH_SEED"); env != nullptr && *env != '\0') {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(env, &used);
      if (used != std::string(env).size()) throw std::invalid_argument("trailing characters");
      return v;
    } catch (const std::exception&) {
      throw ContractError(std::string("GASGRAPH_SEED is not an unsigned integer: '") + env + "'");
    }
  }
  return fallback;
}

struct Dataset {
  std::vector<SensorSample> samples;
  std::array<std::string, 2> gases;
  std::size_t channels = 0;
};

Dataset load_datasets(const std::vector<std::string>& dirs) {
  if (dirs.empty()) throw ContractError("at least one --corpus is required");
  Dataset d;
  for (const auto& dir : dirs) {
    Corpus c = load_corpus(dir);
    if (d.channels == 0) {
      d.channels = c.sensor_count;
      d.gases = c.gases;
    } else if (c.sensor_count != d.channels) {
      throw ContractError("corpus " + dir + " has " + std::to_string(c.sensor_count) + " channels, expected " +
                          std::to_string(d.channels));
    }
    for (auto& s : c.samples) d.samples.push_back(std::move(s));
  }
  return d;
}

void check_split(const SplitPlan& plan, std::size_t n) {
  auto check = [&](const std::vector<std::size_t>& idx) {
    for (auto i : idx) {
      if (i >= n) throw ContractError("split index " + std::to_string(i) + " exceeds corpus size " + std::to_string(n));
    }
  };
  check(plan.test);
  for (const auto& f : plan.folds) {
    check(f.train);
    check(f.val);
  }
}

std::string count_table(const std::vector<SensorSample>& samples) {
  std::map<std::string, std::map<std::string, std::size_t>> counts;
  for (const auto& s : samples) ++counts[s.group_id][s.label];
  std::string out;
  char buf[160];
  for (const auto& [group, per_label] : counts) {
    const auto ref_it = kUciReferenceCounts.find(group);
    std::size_t total = 0, ref_total = 0;
    for (const auto& [label, n] : per_label) {
      total += n;
      if (ref_it != kUciReferenceCounts.end() && ref_it->second.count(label)) {
        const std::size_t ref = ref_it->second.at(label);
        ref_total += ref;
        std::snprintf(buf, sizeof(buf), "group %-3s %-10s %6zu   reference %4zu   deviation %+6.1f%%\n", group.c_str(),
                      label.c_str(), n, ref, 100.0 * (static_cast<double>(n) - ref) / ref);
      } else {
        std::snprintf(buf, sizeof(buf), "group %-3s %-10s %6zu\n", group.c_str(), label.c_str(), n);
      }
      out += buf;
    }
    if (ref_total > 0) {
      std::snprintf(buf, sizeof(buf), "group %-3s %-10s %6zu   reference %4zu   deviation %+6.1f%%\n", group.c_str(),
                    "total", total, ref_total, 100.0 * (static_cast<double>(total) - ref_total) / ref_total);
    } else {
      std::snprintf(buf, sizeof(buf), "group %-3s %-10s %6zu\n", group.c_str(), "total", total);
    }
    out += buf;
  }
  return out;
}

void prepare_run_dir(const fs::path& out, const RunConfig& cfg, const std::vector<std::string>& argv) {
  fs::create_directories(out);
  cfg.save(out / "config.json");
  write_json(out / "run.json", {{"seed", cfg.seed}, {"version", GASGRAPH_VERSION}, {"argv", argv}});
}

// ---------------------------------------------------------------------------

struct PreprocessArgs {
  std::string kind;
  std::vector<std::string> raw;
  std::string out;
  std::string dataset_id;
  std::string config;
};

int cmd_preprocess(const PreprocessArgs& a) {
  RunConfig cfg = a.config.empty() ? RunConfig{} : RunConfig::load(a.config);
  if (a.kind == "uci") {
    std::vector<fs::path> files;
    for (const auto& r : a.raw) {
      if (fs::is_directory(r)) {
        for (const auto& e : fs::directory_iterator(r)) {
          if (e.is_regular_file()) files.push_back(e.path());
        }
      } else {
        files.push_back(r);
      }
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw ContractError("no UCI recordings found");
    std::map<std::string, Corpus> by_group;
    for (const auto& f : files) {
      RawRecording rec = load_uci_recording(f, cfg.downsample_factor);
      auto samples = segment_uci(rec, cfg.skip_seconds);
      Corpus& c = by_group[rec.group_id];
      c.dataset_id = a.dataset_id.empty() ? "uci" : a.dataset_id;
      c.group_id = rec.group_id;
      c.sensor_count = rec.num_channels;
      c.sample_rate_hz = rec.sample_rate_hz;
      c.gases = rec.gases;
      for (auto& s : samples) {
        s.dataset_id = c.dataset_id;
        c.samples.push_back(std::move(s));
      }
      std::cout << f.filename().string() << ": " << samples.size() << " segments\n";
    }
    std::vector<SensorSample> all;
    for (auto& [group, corpus] : by_group) {
      const fs::path dir = fs::path(a.out) / ("group_" + group);
      save_corpus(corpus, dir);
      std::cout << "wrote " << corpus.samples.size() << " samples to " << dir.string() << "\n";
      all.insert(all.end(), corpus.samples.begin(), corpus.samples.end());
    }
    std::cout << count_table(all);
    return 0;
  }
  if (a.kind == "custom") {
    if (a.raw.size() != 1) throw ContractError("custom preprocessing takes exactly one --raw directory");
    Corpus c = load_custom_raw(a.raw.front(), a.dataset_id.empty() ? "custom" : a.dataset_id);
    save_corpus(c, a.out);
    std::cout << "wrote " << c.samples.size() << " samples to " << a.out << "\n" << count_table(c.samples);
    return 0;
  }
  throw ContractError("unknown dataset kind '" + a.kind + "' (expected uci or custom)");
}

struct SplitArgs {
  std::vector<std::string> corpus;
  std::string out;
  std::string config;
  std::optional<std::uint64_t> seed;
};

int cmd_split(const SplitArgs& a) {
  RunConfig cfg = a.config.empty() ? RunConfig{} : RunConfig::load(a.config);
  const std::uint64_t seed = resolve_seed(a.seed, cfg.seed);
  Dataset d = load_datasets(a.corpus);
  SplitPlan plan = stratified_split(d.samples, cfg.test_fraction, cfg.folds, seed);
  save_split(plan, a.out);
  std::map<std::string, std::size_t> test_counts, totals;
  for (const auto& s : d.samples) ++totals[s.group_id + "/" + s.label];
  for (auto i : plan.test) ++test_counts[d.samples[i].group_id + "/" + d.samples[i].label];
  for (const auto& [stratum, n] : totals) {
    std::printf("%-20s total %5zu  test %4zu  train-val %5zu\n", stratum.c_str(), n, test_counts[stratum],
                n - test_counts[stratum]);
  }
  std::printf("%-20s total %5zu  test %4zu  train-val %5zu\n", "all", d.samples.size(), plan.test.size(),
              d.samples.size() - plan.test.size());
  return 0;
}

struct TrainArgs {
  std::string config;
  std::vector<std::string> corpus;
  std::string split;
  std::string out;
  std::string task;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> max_folds;
  bool folds_parallel = false;
  bool quiet = false;
};

int cmd_train(const TrainArgs& a, const std::vector<std::string>& argv) {
  RunConfig cfg = a.config.empty() ? RunConfig{} : RunConfig::load(a.config);
  if (!a.task.empty()) cfg.task = a.task;
  cfg.seed = resolve_seed(a.seed, cfg.seed);
  if (a.epochs) (cfg.task == "regress" ? cfg.regressor_epochs : cfg.classifier_epochs) = *a.epochs;
  if (a.max_folds) cfg.max_folds = *a.max_folds;
  if (a.folds_parallel) cfg.folds_parallel = true;
  if (!a.corpus.empty()) cfg.corpus = a.corpus.front();
  if (!a.split.empty()) cfg.split = a.split;

  std::vector<std::string> corpora = a.corpus;
  if (corpora.empty() && !cfg.corpus.empty()) corpora.push_back(cfg.corpus);
  Dataset d = load_datasets(corpora);
  if (cfg.split.empty()) throw ContractError("--split is required");
  SplitPlan plan = load_split(cfg.split);
  check_split(plan, d.samples.size());

  TrainOptions opts = cfg.train_options();
  std::ofstream log_file;
  const fs::path out = a.out;
  fs::create_directories(out);
  log_file.open(out / "train.log", std::ios::trunc);
  opts.log = [&](const std::string& line) {
    log_file << line << '\n';
    if (!a.quiet) std::cout << line << '\n';
  };

  if (cfg.task == "classify") {
    ClassMap classes = ClassMap::from_samples(d.samples);
    cfg.capsnet.in_features = d.channels;
    cfg.capsnet.classes = classes.size();
    cfg.validate();
    prepare_run_dir(out, cfg, argv);
    ClassifierData data = prepare_classifier_data(d.samples, classes);
    auto result = train_classifier(data, plan, cfg.capsnet, opts);
    save_checkpoint(result.checkpoint, out / "checkpoint.bin");
    write_history_csv(result.history, out / "history.csv");
    GraphCapsNet model = GraphCapsNet::from_checkpoint(result.checkpoint);
    const auto test = evaluate_classifier(model, data, plan.test);
    std::printf("selected fold %zu epoch %zu (val acc %.4f); test acc %.4f\n", result.best_fold, result.best_epoch,
                result.best_val_acc, test.accuracy);
  } else {
    if (a.corpus.size() > 1) throw ContractError("regression trains on a single corpus (one gas pair)");
    cfg.attnet.in_features = d.channels;
    cfg.validate();
    prepare_run_dir(out, cfg, argv);
    const auto maxima = per_gas_max(d.samples);
    RegressorData data = prepare_regressor_data(d.samples, maxima, d.gases);
    auto result = train_regressor(data, plan, cfg.attnet, opts);
    save_checkpoint(result.checkpoint, out / "checkpoint.bin");
    write_history_csv(result.history, out / "history.csv");
    GraphANet model = GraphANet::from_checkpoint(result.checkpoint);
    const auto test = evaluate_regressor(model, data, plan.test);
    std::printf("selected fold %zu epoch %zu (val rmse %.5f); test rmse %.5f\n", result.best_fold, result.best_epoch,
                result.best_val_rmse, test.rmse);
  }
  return 0;
}

struct EvaluateArgs {
  std::string checkpoint;
  std::vector<std::string> corpus;
  std::string split;
  std::string out;
  std::string subset = "test";
};

std::vector<std::size_t> evaluation_indices(const SplitPlan& plan, const std::string& subset, std::size_t n) {
  if (subset == "test") return plan.test;
  if (subset == "train-val") return plan.train_val();
  if (subset == "all") {
    std::vector<std::size_t> all(n);
    for (std::size_t i = 0; i < n; ++i) all[i] = i;
    return all;
  }
  throw ContractError("unknown subset '" + subset + "' (expected test, train-val or all)");
}

int cmd_evaluate(const EvaluateArgs& a) {
  Checkpoint ckpt = load_checkpoint(a.checkpoint);
  Dataset d = load_datasets(a.corpus);
  SplitPlan plan = load_split(a.split);
  check_split(plan, d.samples.size());
  const auto indices = evaluation_indices(plan, a.subset, d.samples.size());
  const fs::path out = a.out;
  fs::create_directories(out);
  const std::string model_kind = ckpt.architecture.value("model", "");

  if (model_kind == "GraphCapsNet") {
    ClassMap classes(ckpt.architecture.at("classes").get<std::vector<std::string>>());
    GraphCapsNet model = GraphCapsNet::from_checkpoint(ckpt);
    if (model.config().in_features != d.channels) {
      throw DimensionError("checkpoint expects " + std::to_string(model.config().in_features) + " channels, corpus has " +
                           std::to_string(d.channels));
    }
    ClassifierData data = prepare_classifier_data(d.samples, classes);
    const auto ev = evaluate_classifier(model, data, indices);
    std::vector<std::size_t> truth;
    for (auto i : indices) truth.push_back(data.labels[i]);
    const auto cm = ConfusionMatrix::from_predictions(classes.size(), truth, ev.predictions);
    const auto report = classification_report(cm);
    json j = to_json(report, cm, classes.labels());
    j["loss"] = ev.loss;
    j["subset"] = a.subset;
    write_json(out / "report.json", j);
    const std::string text = to_text(report, cm, classes.labels());
    write_text(out / "report.txt", text);
    std::string csv;
    for (std::size_t t = 0; t < cm.classes(); ++t) {
      for (std::size_t p = 0; p < cm.classes(); ++p) csv += (p ? "," : "") + std::to_string(cm.at(t, p));
      csv += '\n';
    }
    write_text(out / "confusion.csv", csv);
    std::cout << text;
    return 0;
  }
  if (model_kind == "GraphANet") {
    GraphANet model = GraphANet::from_checkpoint(ckpt);
    if (model.config().in_features != d.channels) {
      throw DimensionError("checkpoint expects " + std::to_string(model.config().in_features) + " channels, corpus has " +
                           std::to_string(d.channels));
    }
    const auto maxima = ckpt.architecture.at("maxima_ppm").get<std::array<double, 2>>();
    const auto gases = ckpt.architecture.at("gases").get<std::array<std::string, 2>>();
    RegressorData data = prepare_regressor_data(d.samples, maxima, gases);
    const auto ev = evaluate_regressor(model, data, indices);
    std::vector<PredictionRow> rows;
    std::vector<std::array<double, 2>> truth;
    std::vector<std::string> subsets;
    for (std::size_t k = 0; k < indices.size(); ++k) {
      const auto i = indices[k];
      rows.push_back({i, data.subsets[i], data.targets[i], ev.predictions[k]});
      truth.push_back(data.targets[i]);
      subsets.push_back(data.subsets[i]);
    }
    write_predictions_csv(rows, out / "predictions.csv");
    const auto report = regression_report(ev.predictions, truth, subsets);
    json j = to_json(report, gases);
    j["subset"] = a.subset;
    j["maxima_ppm"] = maxima;
    write_json(out / "report.json", j);
    const std::string text = to_text(report, gases);
    write_text(out / "report.txt", text);
    std::cout << text;
    return 0;
  }
  throw FormatError("checkpoint holds unknown model '" + model_kind + "'");
}

struct GradcheckArgs {
  std::size_t seeds = 20;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool skip_models = false;
};

int cmd_gradcheck(const GradcheckArgs& a) {
  GradSuiteOptions opts;
  opts.seeds = a.seeds;
  opts.base_seed = resolve_seed(a.seed, 0);
  opts.include_models = !a.skip_models;
  const auto rows = run_gradcheck_suite(opts);
  const std::string table = format_gradcheck_table(rows);
  std::cout << table;
  if (!a.out.empty()) write_text(a.out, table);
  bool ok = true;
  for (const auto& r : rows) ok = ok && r.passed;
  return ok ? 0 : kExitNumeric;
}

struct ReportArgs {
  std::string descriptors;
  bool snap = false;
  std::string out;
};

Coverage parse_coverage(const std::string& s) {
  if (s == "pure_only") return Coverage::PureOnly;
  if (s == "partial_mixtures") return Coverage::PartialMixtures;
  if (s == "all_mixtures") return Coverage::AllMixtures;
  throw ContractError("unknown coverage '" + s + "'");
}

/// Input: {"datasets": [{"name", "gas_count", "coverage", "census": {"2": n}, "support"}],
///         "models": [{"name", "accuracies": [A_1, ...]}]}
int cmd_report(const ReportArgs& a) {
  std::ifstream in(a.descriptors);
  if (!in) throw ContractError("cannot read " + a.descriptors);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ContractError("descriptor file is not valid JSON: " + std::string(e.what()));
  }
  std::vector<DatasetDescriptor> base;
  for (const auto& dj : j.at("datasets")) {
    DatasetDescriptor d;
    d.name = dj.value("name", "");
    d.gas_count = dj.at("gas_count").get<std::size_t>();
    d.coverage = parse_coverage(dj.at("coverage").get<std::string>());
    if (dj.contains("census")) {
      for (const auto& [k, n] : dj["census"].items()) d.census[std::stoul(k)] = n.get<std::size_t>();
    }
    d.support = dj.at("support").get<double>();
    base.push_back(d);
  }
  json out = json::array();
  std::printf("%-16s%12s%14s\n", "model", "support-wtd", "comprehensive");
  for (const auto& mj : j.at("models")) {
    const auto acc = mj.at("accuracies").get<std::vector<double>>();
    if (acc.size() != base.size()) throw DimensionError("model accuracies do not match the dataset count");
    auto ds = base;
    for (std::size_t i = 0; i < ds.size(); ++i) {
      ds[i].accuracy = a.snap ? snap_to_count(acc[i], ds[i].support) : acc[i];
    }
    const double swa = support_weighted_accuracy(ds);
    const double ca = comprehensive_accuracy(ds);
    const std::string name = mj.value("name", "");
    std::printf("%-16s%12.3f%14.3f\n", name.c_str(), round_half_up(swa), round_half_up(ca));
    out.push_back({{"name", name}, {"support_weighted_accuracy", swa}, {"comprehensive_accuracy", ca}});
  }
  json difficulties = json::array();
  for (const auto& d : base) difficulties.push_back({{"name", d.name}, {"difficulty", difficulty(d)}});
  if (!a.out.empty()) write_json(a.out, {{"models", out}, {"difficulty", difficulties}, {"snapped", a.snap}});
  return 0;
}

struct SynthArgs {
  std::string task = "classify";
  std::string out;
  std::optional<std::uint64_t> seed;
  std::size_t samples = 0;
};

int cmd_synth(const SynthArgs& a) {
  const std::uint64_t seed = resolve_seed(a.seed, 0);
  Corpus c;
  if (a.task == "classify") {
    SyntheticClassificationConfig cfg;
    if (a.samples) cfg.samples = a.samples;
    c = synthetic_classification(cfg, seed);
  } else if (a.task == "regress") {
    SyntheticRegressionConfig cfg;
    if (a.samples) cfg.samples = a.samples;
    c = synthetic_regression(cfg, seed);
  } else {
    throw ContractError("unknown task '" + a.task + "'");
  }
  save_corpus(c, a.out);
  std::cout << "wrote " << c.samples.size() << " samples to " << a.out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  CLI::App app{"gasgraph: temporal-graph gas mixture identification and concentration estimation"};
  app.set_version_flag("--version", std::string(GASGRAPH_VERSION));
  app.require_subcommand(1);

  PreprocessArgs pre;
  auto* c_pre = app.add_subcommand("preprocess", "Convert raw recordings into a corpus");
  c_pre->add_option("--kind", pre.kind, "uci or custom")->required();
  c_pre->add_option("--raw", pre.raw, "Raw recording file(s) or directory")->required();
  c_pre->add_option("--out", pre.out, "Output corpus directory")->required();
  c_pre->add_option("--dataset-id", pre.dataset_id, "Dataset id written to the manifest");
  c_pre->add_option("--config", pre.config, "Run config (JSON)");

  SplitArgs split;
  auto* c_split = app.add_subcommand("split", "Write a stratified test/5-fold split");
  c_split->add_option("--corpus", split.corpus, "Corpus directory (repeatable)")->required();
  c_split->add_option("--out", split.out, "Split file (JSON)")->required();
  c_split->add_option("--config", split.config, "Run config (JSON)");
  c_split->add_option("--seed", split.seed, "Seed (falls back to GASGRAPH_SEED, then the config)");

  TrainArgs train;
  auto* c_train = app.add_subcommand("train", "Train a classifier or regressor");
  c_train->add_option("--config", train.config, "Run config (JSON)");
  c_train->add_option("--corpus", train.corpus, "Corpus directory (repeatable for classification)");
  c_train->add_option("--split", train.split, "Split file");
  c_train->add_option("--out", train.out, "Run directory")->required();
  c_train->add_option("--task", train.task, "classify or regress");
  c_train->add_option("--seed", train.seed, "Seed (falls back to GASGRAPH_SEED, then the config)");
  c_train->add_option("--epochs", train.epochs, "Override the epoch count for the task");
  c_train->add_option("--max-folds", train.max_folds, "Train only the first n folds");
  c_train->add_flag("--folds-parallel", train.folds_parallel, "Train folds on separate threads");
  c_train->add_flag("--quiet", train.quiet, "Log only to train.log");

  EvaluateArgs eval;
  auto* c_eval = app.add_subcommand("evaluate", "Evaluate a checkpoint and write reports");
  c_eval->add_option("--checkpoint", eval.checkpoint, "Checkpoint file")->required();
  c_eval->add_option("--corpus", eval.corpus, "Corpus directory (repeatable)")->required();
  c_eval->add_option("--split", eval.split, "Split file")->required();
  c_eval->add_option("--out", eval.out, "Report directory")->required();
  c_eval->add_option("--subset", eval.subset, "test, train-val or all");

  GradcheckArgs grad;
  auto* c_grad = app.add_subcommand("gradcheck", "Finite-difference check of every layer type");
  c_grad->add_option("--seeds", grad.seeds, "Random draws per op");
  c_grad->add_option("--seed", grad.seed, "Base seed");
  c_grad->add_option("--out", grad.out, "Write the table to a file");
  c_grad->add_flag("--skip-models", grad.skip_models, "Skip the two full models");

  ReportArgs rep;
  auto* c_rep = app.add_subcommand("report", "Support-weighted and comprehensive accuracy across datasets");
  c_rep->add_option("--descriptors", rep.descriptors, "Descriptor JSON")->required();
  c_rep->add_flag("--snap", rep.snap, "Snap rounded accuracies to the nearest k/support");
  c_rep->add_option("--out", rep.out, "Write results as JSON");

  SynthArgs syn;
  auto* c_syn = app.add_subcommand("synth", "Generate a synthetic corpus");
  c_syn->add_option("--task", syn.task, "classify or regress");
  c_syn->add_option("--out", syn.out, "Output corpus directory")->required();
  c_syn->add_option("--seed", syn.seed, "Seed");
  c_syn->add_option("--samples", syn.samples, "Sample count");

  double v_ppm = 0.0, v_liters = 0.0, v_beta = 1.0;
  auto* c_vol = app.add_subcommand("volume", "Gas volume to inject for a target concentration");
  c_vol->add_option("--ppm", v_ppm, "Target concentration (ppm)")->required();
  c_vol->add_option("--chamber", v_liters, "Chamber volume (liters)")->required();
  c_vol->add_option("--beta", v_beta, "Source gas fraction");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*c_pre) return cmd_preprocess(pre);
    if (*c_split) return cmd_split(split);
    if (*c_train) return cmd_train(train, args);
    if (*c_eval) return cmd_evaluate(eval);
    if (*c_grad) return cmd_gradcheck(grad);
    if (*c_rep) return cmd_report(rep);
    if (*c_syn) return cmd_synth(syn);
    if (*c_vol) {
      std::printf("%.9g\n", target_gas_volume(v_ppm, v_liters, v_beta));
      return 0;
    }
  } catch (const NumericError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const json::exception& e) {
    std::cerr << "error: malformed JSON input: " << e.what() << '\n';
    return kExitUsage;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
