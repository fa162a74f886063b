#include "gasgraph/graphio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "gasgraph/errors.hpp"
#include "gasgraph/rng.hpp"

namespace gasgraph {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Labels

const std::vector<std::string>& known_labels() {
  static const std::vector<std::string> labels{"Air", "CO", "CH4", "C2H4", "H2", "CO-C2H4", "CH4-C2H4", "H2-C2H4"};
  return labels;
}

bool is_known_label(const std::string& label) {
  const auto& k = known_labels();
  return std::find(k.begin(), k.end(), label) != k.end();
}

std::string composition_label(const std::array<std::string, 2>& gases, bool first_present, bool second_present) {
  std::string label;
  if (first_present && second_present) {
    label = gases[0] + "-" + gases[1];
  } else if (first_present) {
    label = gases[0];
  } else if (second_present) {
    label = gases[1];
  } else {
    label = "Air";
  }
  if (!is_known_label(label)) throw ContractError("composition '" + label + "' is not a known gas label");
  return label;
}

ClassMap::ClassMap(std::vector<std::string> labels) : labels_(std::move(labels)) {
  for (const auto& l : labels_) {
    if (!is_known_label(l)) throw ContractError("unknown class label '" + l + "'");
  }
}

ClassMap ClassMap::from_labels(const std::vector<std::string>& labels) {
  std::set<std::string> present(labels.begin(), labels.end());
  std::vector<std::string> ordered;
  for (const auto& l : known_labels()) {
    if (present.erase(l)) ordered.push_back(l);
  }
  if (!present.empty()) throw ContractError("unknown class label '" + *present.begin() + "'");
  return ClassMap(std::move(ordered));
}

std::size_t ClassMap::id(const std::string& label) const {
  const auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) throw ContractError("label '" + label + "' is not in the class map");
  return static_cast<std::size_t>(it - labels_.begin());
}

// ---------------------------------------------------------------------------
// Recordings

RawRecording downsample(const RawRecording& rec, std::size_t factor) {
  if (factor == 0) throw ContractError("downsample factor must be >= 1");
  RawRecording out = rec;
  out.sample_rate_hz = rec.sample_rate_hz / static_cast<double>(factor);
  if (factor == 1) return out;
  const std::size_t n = rec.num_points();
  const std::size_t f = rec.num_channels;
  out.values.clear();
  out.setpoints.clear();
  out.values.reserve((n + factor - 1) / factor * f);
  for (std::size_t t = 0; t < n; t += factor) {
    out.values.insert(out.values.end(), rec.values.begin() + t * f, rec.values.begin() + (t + 1) * f);
    if (!rec.setpoints.empty()) out.setpoints.push_back(rec.setpoints[t]);
  }
  return out;
}

std::vector<SensorSample> segment_uci(const RawRecording& rec, double skip_s) {
  const std::size_t n = rec.num_points();
  if (rec.setpoints.empty()) throw FormatError("recording has no setpoint channels; cannot segment");
  if (rec.setpoints.size() != n) {
    throw FormatError("setpoint channel length " + std::to_string(rec.setpoints.size()) +
                      " differs from sensor length " + std::to_string(n));
  }
  if (!(rec.sample_rate_hz > 0.0)) throw ContractError("sample rate must be positive");
  const auto skip = static_cast<std::size_t>(std::llround(skip_s * rec.sample_rate_hz));
  std::vector<SensorSample> out;
  if (n <= 2 * skip) return out;
  const std::size_t begin = skip;
  const std::size_t end = n - skip;
  const std::size_t f = rec.num_channels;

  auto emit = [&](std::size_t from, std::size_t to) {
    SensorSample s;
    s.features = Tensor({to - from, f}, std::vector<double>(rec.values.begin() + from * f, rec.values.begin() + to * f));
    s.conc_ppm = rec.setpoints[from];
    s.label = composition_label(rec.gases, s.conc_ppm[0] > 0.0, s.conc_ppm[1] > 0.0);
    s.dataset_id = rec.dataset_id;
    s.group_id = rec.group_id;
    out.push_back(std::move(s));
  };

  std::size_t start = begin;
  for (std::size_t t = begin + 1; t < end; ++t) {
    if (rec.setpoints[t] != rec.setpoints[t - 1]) {
      emit(start, t);
      start = t;
    }
  }
  emit(start, end);
  return out;
}

namespace {

bool parse_double(std::string_view s, double& out) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size() && std::isfinite(out);
}

std::vector<std::string_view> split_fields(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const auto next = line.find(sep, pos);
    out.push_back(line.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

std::vector<std::string_view> split_whitespace(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

[[noreturn]] void format_fail(const fs::path& path, std::size_t line, const std::string& msg) {
  throw FormatError(path.string() + ":" + std::to_string(line) + ": " + msg);
}

}  // namespace

RawRecording load_uci_recording(const fs::path& path, std::size_t factor) {
  if (factor == 0) throw ContractError("downsample factor must be >= 1");
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open UCI recording " + path.string());
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) format_fail(path, 1, "empty file");
  ++lineno;

  RawRecording rec;
  rec.dataset_id = "uci";
  if (line.find("CO conc") != std::string::npos) {
    rec.gases = {"CO", "C2H4"};
    rec.group_id = "A";
  } else if (line.find("Methane") != std::string::npos) {
    rec.gases = {"CH4", "C2H4"};
    rec.group_id = "B";
  } else {
    format_fail(path, 1, "header names neither CO nor Methane");
  }
  rec.num_channels = 16;
  rec.sample_rate_hz = 100.0 / static_cast<double>(factor);

  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (row++ % factor != 0) continue;
    const auto fields = split_whitespace(line);
    if (fields.size() != 19) {
      format_fail(path, lineno, "expected 19 columns (time, 2 setpoints, 16 sensors), got " +
                                    std::to_string(fields.size()));
    }
    std::array<double, 2> sp{};
    for (std::size_t c = 0; c < 2; ++c) {
      if (!parse_double(fields[1 + c], sp[c])) format_fail(path, lineno, "bad setpoint value");
    }
    rec.setpoints.push_back(sp);
    for (std::size_t c = 0; c < 16; ++c) {
      double v = 0.0;
      if (!parse_double(fields[3 + c], v)) format_fail(path, lineno, "bad sensor value in column " + std::to_string(4 + c));
      rec.values.push_back(v);
    }
  }
  return rec;
}

// ---------------------------------------------------------------------------
// Chain graphs

std::vector<std::pair<std::size_t, std::size_t>> ChainGraph::chain_edges() const {
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t r = 0; r < adjacency.rows; ++r) {
    for (std::size_t p = adjacency.row_ptr[r]; p < adjacency.row_ptr[r + 1]; ++p) {
      if (adjacency.col_idx[p] > r) edges.emplace_back(r, adjacency.col_idx[p]);
    }
  }
  return edges;
}

std::size_t ChainGraph::self_loops() const {
  std::size_t n = 0;
  for (std::size_t r = 0; r < adjacency.rows; ++r) {
    for (std::size_t p = adjacency.row_ptr[r]; p < adjacency.row_ptr[r + 1]; ++p) {
      if (adjacency.col_idx[p] == r) ++n;
    }
  }
  return n;
}

ChainGraph build_chain_graph(const Tensor& features) {
  if (!features.defined() || features.rank() != 2) throw ContractError("chain graph needs an N x F feature matrix");
  const std::size_t n = features.dim(0);
  std::vector<SparseMatrix::Triplet> trip;
  trip.reserve(3 * n);
  for (std::size_t i = 0; i < n; ++i) {
    trip.push_back({i, i, 1.0});
    if (i + 1 < n) {
      trip.push_back({i, i + 1, 1.0});
      trip.push_back({i + 1, i, 1.0});
    }
  }
  ChainGraph g;
  g.x = features;
  g.adjacency = SparseMatrix::from_triplets(n, n, std::move(trip));
  g.normalized = normalize_adjacency(g.adjacency);
  return g;
}

ChainGraph build_chain_graph(const SensorSample& sample) {
  if (!sample.features.defined() || sample.features.numel() == 0) throw ContractError("empty sample");
  return build_chain_graph(sample.features);
}

SparseMatrix normalize_adjacency(const SparseMatrix& a) {
  if (a.rows != a.cols) throw DimensionError("adjacency must be square");
  std::vector<double> inv_sqrt_deg(a.rows);
  for (std::size_t r = 0; r < a.rows; ++r) {
    double d = 0.0;
    for (std::size_t p = a.row_ptr[r]; p < a.row_ptr[r + 1]; ++p) d += a.values[p];
    if (!(d > 0.0)) throw ContractError("node " + std::to_string(r) + " has zero degree");
    inv_sqrt_deg[r] = 1.0 / std::sqrt(d);
  }
  SparseMatrix out = a;
  for (std::size_t r = 0; r < a.rows; ++r) {
    for (std::size_t p = a.row_ptr[r]; p < a.row_ptr[r + 1]; ++p) {
      out.values[p] = a.values[p] * inv_sqrt_deg[r] * inv_sqrt_deg[a.col_idx[p]];
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Targets

std::array<double, 2> per_gas_max(const std::vector<SensorSample>& samples) {
  std::array<double, 2> mx{0.0, 0.0};
  for (const auto& s : samples) {
    for (std::size_t g = 0; g < 2; ++g) mx[g] = std::max(mx[g], s.conc_ppm[g]);
  }
  return mx;
}

std::vector<std::array<double, 2>> normalize_concentrations(const std::vector<std::array<double, 2>>& conc,
                                                            const std::array<double, 2>& max_ppm) {
  for (std::size_t g = 0; g < 2; ++g) {
    if (!(max_ppm[g] > 0.0)) {
      throw ContractError("gas " + std::to_string(g + 1) + " has zero maximum concentration; cannot normalize");
    }
  }
  std::vector<std::array<double, 2>> out;
  out.reserve(conc.size());
  for (const auto& c : conc) {
    if (c[0] < 0.0 || c[1] < 0.0) throw ContractError("negative concentration");
    out.push_back({c[0] / max_ppm[0], c[1] / max_ppm[1]});
  }
  return out;
}

std::vector<std::array<double, 2>> normalize_concentrations(const std::vector<SensorSample>& samples,
                                                            const std::array<double, 2>& max_ppm) {
  std::vector<std::array<double, 2>> conc;
  conc.reserve(samples.size());
  for (const auto& s : samples) conc.push_back(s.conc_ppm);
  return normalize_concentrations(conc, max_ppm);
}

double target_gas_volume(double target_ppm, double chamber_liters, double beta) {
  if (!(beta > 0.0)) throw ContractError("target_gas_volume: beta must be positive");
  if (target_ppm < 0.0 || chamber_liters < 0.0) throw ContractError("target_gas_volume: negative input");
  return target_ppm * chamber_liters / beta * 1e-6;
}

// ---------------------------------------------------------------------------
// Splitting

std::vector<std::size_t> SplitPlan::train_val() const {
  std::vector<std::size_t> out;
  for (const auto& f : folds) out.insert(out.end(), f.val.begin(), f.val.end());
  std::sort(out.begin(), out.end());
  return out;
}

SplitPlan stratified_split(const std::vector<std::string>& strata, double test_frac, std::size_t k,
                           std::uint64_t seed) {
  if (k < 2) throw ContractError("need at least 2 folds");
  if (!(test_frac >= 0.0 && test_frac < 1.0)) throw ContractError("test fraction must lie in [0, 1)");
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < strata.size(); ++i) groups[strata[i]].push_back(i);

  Rng rng(seed);
  SplitPlan plan;
  plan.seed = seed;
  plan.folds.resize(k);
  std::size_t deal = 0;
  for (auto& [key, idx] : groups) {
    if (idx.size() < k) {
      throw ContractError("class '" + key + "' has " + std::to_string(idx.size()) + " samples, fewer than " +
                          std::to_string(k) + " folds");
    }
    rng.shuffle(idx);
    // The epsilon keeps exact products such as 150 * 0.16 from rounding up.
    const auto n_test = static_cast<std::size_t>(std::ceil(static_cast<double>(idx.size()) * test_frac - 1e-9));
    plan.test.insert(plan.test.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_test));
    for (std::size_t i = n_test; i < idx.size(); ++i) plan.folds[deal++ % k].val.push_back(idx[i]);
  }
  std::sort(plan.test.begin(), plan.test.end());
  for (std::size_t f = 0; f < k; ++f) {
    std::sort(plan.folds[f].val.begin(), plan.folds[f].val.end());
    for (std::size_t g = 0; g < k; ++g) {
      if (g != f) plan.folds[f].train.insert(plan.folds[f].train.end(), plan.folds[g].val.begin(), plan.folds[g].val.end());
    }
  }
  for (auto& f : plan.folds) std::sort(f.train.begin(), f.train.end());
  return plan;
}

std::vector<std::string> strata_of(const std::vector<SensorSample>& samples) {
  std::vector<std::string> keys;
  keys.reserve(samples.size());
  for (const auto& s : samples) keys.push_back(s.group_id + "/" + s.label);
  return keys;
}

SplitPlan stratified_split(const std::vector<SensorSample>& samples, double test_frac, std::size_t k,
                           std::uint64_t seed) {
  return stratified_split(strata_of(samples), test_frac, k, seed);
}

void save_split(const SplitPlan& plan, const fs::path& path) {
  json j;
  j["seed"] = plan.seed;
  j["test"] = plan.test;
  j["folds"] = json::array();
  for (const auto& f : plan.folds) j["folds"].push_back({{"train", f.train}, {"val", f.val}});
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot write split file " + path.string());
  out << j.dump(1) << '\n';
}

SplitPlan load_split(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open split file " + path.string());
  try {
    const json j = json::parse(in);
    SplitPlan plan;
    plan.seed = j.at("seed").get<std::uint64_t>();
    plan.test = j.at("test").get<std::vector<std::size_t>>();
    for (const auto& f : j.at("folds")) {
      plan.folds.push_back({f.at("train").get<std::vector<std::size_t>>(), f.at("val").get<std::vector<std::size_t>>()});
    }
    return plan;
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": malformed split file: " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Corpus

namespace {

void append_double(std::string& out, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  out.append(buf, res.ptr);
}

struct CsvSample {
  Tensor features;
  std::vector<double> time;
};

CsvSample read_csv_with_time(const fs::path& path, std::size_t expected_channels) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open sample file " + path.string());
  std::string line;
  if (!std::getline(in, line)) format_fail(path, 1, "empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_fields(line, ',');
  if (header.empty() || header[0] != "t") format_fail(path, 1, "header must start with 't'");
  const std::size_t channels = header.size() - 1;
  if (expected_channels != 0 && channels != expected_channels) {
    format_fail(path, 1, "header has " + std::to_string(channels) + " channels, expected " +
                             std::to_string(expected_channels));
  }
  for (std::size_t c = 0; c < channels; ++c) {
    if (header[c + 1] != "s" + std::to_string(c + 1)) format_fail(path, 1, "header column " + std::to_string(c + 2) + " must be s" + std::to_string(c + 1));
  }
  if (channels == 0) format_fail(path, 1, "no sensor channels");

  CsvSample out;
  std::vector<double> values;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_fields(line, ',');
    if (fields.size() != channels + 1) {
      format_fail(path, lineno, "expected " + std::to_string(channels) + " channels, got " +
                                    std::to_string(fields.empty() ? 0 : fields.size() - 1));
    }
    double t = 0.0;
    if (!parse_double(fields[0], t)) format_fail(path, lineno, "bad time value");
    out.time.push_back(t);
    for (std::size_t c = 0; c < channels; ++c) {
      double v = 0.0;
      if (!parse_double(fields[c + 1], v)) format_fail(path, lineno, "bad value in column s" + std::to_string(c + 1));
      values.push_back(v);
    }
  }
  if (out.time.empty()) format_fail(path, lineno, "no data rows");
  out.features = Tensor({out.time.size(), channels}, std::move(values));
  return out;
}

std::string sample_file_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "sample_%05zu.csv", i);
  return buf;
}

}  // namespace

Tensor read_sample_csv(const fs::path& path, std::size_t expected_channels) {
  return read_csv_with_time(path, expected_channels).features;
}

void write_sample_csv(const Tensor& features, double sample_rate_hz, const fs::path& path) {
  if (features.rank() != 2) throw DimensionError("sample features must be N x F, got " + shape_to_string(features.shape()));
  const std::size_t n = features.dim(0);
  const std::size_t f = features.dim(1);
  std::string text = "t";
  for (std::size_t c = 0; c < f; ++c) text += ",s" + std::to_string(c + 1);
  text += '\n';
  const auto v = features.data();
  for (std::size_t i = 0; i < n; ++i) {
    append_double(text, sample_rate_hz > 0.0 ? static_cast<double>(i) / sample_rate_hz : static_cast<double>(i));
    for (std::size_t c = 0; c < f; ++c) {
      text += ',';
      append_double(text, v[i * f + c]);
    }
    text += '\n';
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out << text;
}

void save_corpus(const Corpus& corpus, const fs::path& dir) {
  fs::create_directories(dir);
  json manifest;
  manifest["schema_version"] = Corpus::kSchemaVersion;
  manifest["dataset_id"] = corpus.dataset_id;
  manifest["group_id"] = corpus.group_id;
  manifest["sensor_count"] = corpus.sensor_count;
  manifest["sample_rate_hz"] = corpus.sample_rate_hz;
  manifest["gases"] = corpus.gases;
  manifest["samples"] = json::array();
  for (std::size_t i = 0; i < corpus.samples.size(); ++i) {
    const auto& s = corpus.samples[i];
    if (s.num_channels() != corpus.sensor_count) {
      throw ContractError("sample " + std::to_string(i) + " has " + std::to_string(s.num_channels()) +
                          " channels, corpus declares " + std::to_string(corpus.sensor_count));
    }
    if (!is_known_label(s.label)) throw ContractError("sample " + std::to_string(i) + " has unknown label '" + s.label + "'");
    const std::string file = sample_file_name(i);
    write_sample_csv(s.features, corpus.sample_rate_hz, dir / file);
    manifest["samples"].push_back({{"file", file}, {"label", s.label}, {"conc_ppm", s.conc_ppm}});
  }
  std::ofstream out(dir / "manifest.json", std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write manifest in " + dir.string());
  out << manifest.dump(2) << '\n';
}

Corpus load_corpus(const fs::path& dir) {
  const fs::path manifest_path = dir / "manifest.json";
  std::ifstream in(manifest_path);
  if (!in) throw FormatError("cannot open " + manifest_path.string());
  json m;
  try {
    m = json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError(manifest_path.string() + ": invalid JSON: " + e.what());
  }
  Corpus c;
  try {
    const int version = m.at("schema_version").get<int>();
    if (version != Corpus::kSchemaVersion) {
      throw FormatError(manifest_path.string() + ": unsupported schema_version " + std::to_string(version));
    }
    c.dataset_id = m.at("dataset_id").get<std::string>();
    c.group_id = m.at("group_id").get<std::string>();
    c.sensor_count = m.at("sensor_count").get<std::size_t>();
    c.sample_rate_hz = m.at("sample_rate_hz").get<double>();
    if (m.contains("gases")) c.gases = m.at("gases").get<std::array<std::string, 2>>();
    const auto& samples = m.at("samples");
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const auto& e = samples[i];
      SensorSample s;
      s.label = e.at("label").get<std::string>();
      if (!is_known_label(s.label)) {
        throw FormatError(manifest_path.string() + ": sample " + std::to_string(i) + " has unknown label '" + s.label + "'");
      }
      s.conc_ppm = e.at("conc_ppm").get<std::array<double, 2>>();
      if (s.conc_ppm[0] < 0.0 || s.conc_ppm[1] < 0.0) {
        throw FormatError(manifest_path.string() + ": sample " + std::to_string(i) + " has a negative concentration");
      }
      s.features = read_sample_csv(dir / e.at("file").get<std::string>(), c.sensor_count);
      s.dataset_id = c.dataset_id;
      s.group_id = c.group_id;
      c.samples.push_back(std::move(s));
    }
  } catch (const json::exception& e) {
    throw FormatError(manifest_path.string() + ": malformed manifest: " + e.what());
  }
  return c;
}

Corpus load_custom_raw(const fs::path& dir, const std::string& dataset_id) {
  const fs::path index_path = dir / "index.csv";
  std::ifstream in(index_path);
  if (!in) throw FormatError("cannot open " + index_path.string());
  std::string line;
  if (!std::getline(in, line)) format_fail(index_path, 1, "empty index");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_fields(line, ',');
  auto gas_name = [&](std::string_view col) {
    if (col.size() <= 4 || col.substr(col.size() - 4) != "_ppm") format_fail(index_path, 1, "concentration columns must be named <gas>_ppm");
    return std::string(col.substr(0, col.size() - 4));
  };
  if (header.size() != 4 || header[0] != "file" || header[1] != "label") {
    format_fail(index_path, 1, "header must be file,label,<gas1>_ppm,<gas2>_ppm");
  }
  Corpus c;
  c.dataset_id = dataset_id;
  c.group_id = dataset_id;
  c.gases = {gas_name(header[2]), gas_name(header[3])};

  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_fields(line, ',');
    if (fields.size() != 4) format_fail(index_path, lineno, "expected 4 fields");
    SensorSample s;
    s.label = std::string(fields[1]);
    if (!is_known_label(s.label)) format_fail(index_path, lineno, "unknown label '" + s.label + "'");
    for (std::size_t g = 0; g < 2; ++g) {
      if (!parse_double(fields[2 + g], s.conc_ppm[g]) || s.conc_ppm[g] < 0.0) format_fail(index_path, lineno, "bad concentration");
    }
    auto csv = read_csv_with_time(dir / std::string(fields[0]), c.sensor_count);
    if (c.samples.empty()) {
      c.sensor_count = csv.features.dim(1);
      c.sample_rate_hz = csv.time.size() >= 2 && csv.time[1] > csv.time[0] ? std::round(1.0 / (csv.time[1] - csv.time[0]) * 1e6) / 1e6 : 10.0;
    }
    s.features = csv.features;
    s.dataset_id = dataset_id;
    s.group_id = dataset_id;
    c.samples.push_back(std::move(s));
  }
  return c;
}

}  // namespace gasgraph
