#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "gasgraph/sparse.hpp"
#include "gasgraph/tensor.hpp"

namespace gasgraph {

// ---------------------------------------------------------------------------
// Labels

/// Canonical label vocabulary, in class-id order. Pure gases use their formula,
/// binary mixtures join the two formulas with '-' and clean air is "Air".
const std::vector<std::string>& known_labels();
bool is_known_label(const std::string& label);

/// Label for a two-component setpoint: which of the gases are present.
std::string composition_label(const std::array<std::string, 2>& gases, bool first_present, bool second_present);

/// Maps the labels present in a corpus onto dense class ids, ordered as in
/// known_labels(). Air from different recording groups is a single class.
class ClassMap {
 public:
  ClassMap() = default;
  explicit ClassMap(std::vector<std::string> labels);

  template <class Samples>
  static ClassMap from_samples(const Samples& samples) {
    std::vector<std::string> labels;
    for (const auto& s : samples) labels.push_back(s.label);
    return from_labels(labels);
  }
  static ClassMap from_labels(const std::vector<std::string>& labels);

  std::size_t size() const { return labels_.size(); }
  std::size_t id(const std::string& label) const;
  const std::string& label(std::size_t id) const { return labels_.at(id); }
  const std::vector<std::string>& labels() const { return labels_; }

 private:
  std::vector<std::string> labels_;
};

// ---------------------------------------------------------------------------
// Samples and recordings

/// One labeled recording: N time points x F channels of raw sensor values.
struct SensorSample {
  Tensor features;
  std::string label;
  std::array<double, 2> conc_ppm{0.0, 0.0};
  std::string dataset_id;
  std::string group_id;

  std::size_t num_nodes() const { return features.dim(0); }
  std::size_t num_channels() const { return features.dim(1); }
};

/// Continuous multi-channel recording, time-major.
struct RawRecording {
  double sample_rate_hz = 0.0;
  std::size_t num_channels = 0;
  std::vector<double> values;  // num_points() x num_channels
  std::vector<std::array<double, 2>> setpoints;  // empty, or one per time point
  std::array<std::string, 2> gases;
  std::string dataset_id;
  std::string group_id;

  std::size_t num_points() const { return num_channels == 0 ? 0 : values.size() / num_channels; }
  double duration_s() const { return sample_rate_hz > 0.0 ? num_points() / sample_rate_hz : 0.0; }
};

/// Keeps every factor-th point (no anti-alias filtering).
RawRecording downsample(const RawRecording& rec, std::size_t factor);

/// Splits a recording with per-time setpoints into constant-setpoint samples,
/// after dropping `skip_s` seconds at both ends.
std::vector<SensorSample> segment_uci(const RawRecording& rec, double skip_s = 100.0);

/// Reads a UCI gas-mixture text file ("Time (seconds), <gas> conc (ppm),
/// Ethylene conc (ppm), 16 sensor readings"), keeping every `factor`-th row.
RawRecording load_uci_recording(const std::filesystem::path& path, std::size_t factor = 1);

// ---------------------------------------------------------------------------
// Chain graphs

/// Path graph over time points with self-loops, plus its normalized form.
struct ChainGraph {
  Tensor x;
  SparseMatrix adjacency;
  SparseMatrix normalized;

  std::size_t num_nodes() const { return x.dim(0); }
  std::size_t num_features() const { return x.dim(1); }
  /// Undirected non-loop edges (i, i+1).
  std::vector<std::pair<std::size_t, std::size_t>> chain_edges() const;
  std::size_t self_loops() const;
};

ChainGraph build_chain_graph(const SensorSample& sample);
ChainGraph build_chain_graph(const Tensor& features);

/// Deg^{-1/2} A Deg^{-1/2}, degrees taken from A including self-loops.
SparseMatrix normalize_adjacency(const SparseMatrix& a);

// ---------------------------------------------------------------------------
// Targets

/// Per-gas maximum concentration over the given samples.
std::array<double, 2> per_gas_max(const std::vector<SensorSample>& samples);

/// y / max(y) per gas. A zero maximum is a contract error.
std::vector<std::array<double, 2>> normalize_concentrations(const std::vector<std::array<double, 2>>& conc,
                                                            const std::array<double, 2>& max_ppm);
std::vector<std::array<double, 2>> normalize_concentrations(const std::vector<SensorSample>& samples,
                                                            const std::array<double, 2>& max_ppm);

/// Gas volume to inject into a chamber: (C_t * V_cav / beta) * 1e-6 liters.
double target_gas_volume(double target_ppm, double chamber_liters, double beta);

// ---------------------------------------------------------------------------
// Splitting

struct Fold {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
};

struct SplitPlan {
  std::uint64_t seed = 0;
  std::vector<std::size_t> test;
  std::vector<Fold> folds;

  /// All indices outside the test set, sorted.
  std::vector<std::size_t> train_val() const;
};

/// Stratified hold-out plus k-fold partition of the remainder.
///
/// Each stratum key (one per sample) contributes ceil(count * test_frac)
/// samples to the test set; the rest is dealt round-robin into k folds.
SplitPlan stratified_split(const std::vector<std::string>& strata, double test_frac, std::size_t k,
                           std::uint64_t seed);
/// Strata are (group_id, label) pairs.
SplitPlan stratified_split(const std::vector<SensorSample>& samples, double test_frac = 0.16, std::size_t k = 5,
                           std::uint64_t seed = 0);
std::vector<std::string> strata_of(const std::vector<SensorSample>& samples);

void save_split(const SplitPlan& plan, const std::filesystem::path& path);
SplitPlan load_split(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Corpus on disk

/// A dataset directory: manifest.json plus one CSV per sample.
struct Corpus {
  static constexpr int kSchemaVersion = 1;

  std::string dataset_id;
  std::string group_id;
  std::size_t sensor_count = 0;
  double sample_rate_hz = 0.0;
  std::array<std::string, 2> gases;
  std::vector<SensorSample> samples;
};

void save_corpus(const Corpus& corpus, const std::filesystem::path& dir);
Corpus load_corpus(const std::filesystem::path& dir);

/// Reads one sample CSV (header `t,s1..sF`).
Tensor read_sample_csv(const std::filesystem::path& path, std::size_t expected_channels);
void write_sample_csv(const Tensor& features, double sample_rate_hz, const std::filesystem::path& path);

/// Reads a directory of independently collected recordings: an `index.csv`
/// with header `file,label,<gas1>_ppm,<gas2>_ppm` and one sample CSV per row.
Corpus load_custom_raw(const std::filesystem::path& dir, const std::string& dataset_id);

}  // namespace gasgraph
