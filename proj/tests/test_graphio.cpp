#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <queue>
#include <set>

#include <nlohmann/json.hpp>

#include "gasgraph/errors.hpp"
#include "gasgraph/graphio.hpp"
#include "gasgraph/rng.hpp"

using namespace gasgraph;
namespace fs = std::filesystem;

namespace {

Tensor random_features(std::size_t n, std::size_t f, Rng& rng) {
  std::vector<double> v(n * f);
  for (auto& x : v) x = rng.normal();
  return Tensor({n, f}, std::move(v));
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("gasgraph_graphio_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::size_t reachable_from_first(const SparseMatrix& a) {
  std::vector<bool> seen(a.rows, false);
  std::queue<std::size_t> q;
  q.push(0);
  seen[0] = true;
  std::size_t count = 0;
  while (!q.empty()) {
    const std::size_t r = q.front();
    q.pop();
    ++count;
    for (std::size_t p = a.row_ptr[r]; p < a.row_ptr[r + 1]; ++p) {
      if (!seen[a.col_idx[p]]) {
        seen[a.col_idx[p]] = true;
        q.push(a.col_idx[p]);
      }
    }
  }
  return count;
}

std::vector<std::string> class_strata(const std::vector<std::pair<std::string, std::size_t>>& counts) {
  std::vector<std::string> strata;
  for (const auto& [key, n] : counts) strata.insert(strata.end(), n, key);
  return strata;
}

std::map<std::string, std::size_t> test_counts(const SplitPlan& plan, const std::vector<std::string>& strata) {
  std::map<std::string, std::size_t> out;
  for (auto i : plan.test) ++out[strata[i]];
  return out;
}

RawRecording setpoint_recording(const std::vector<std::pair<std::size_t, std::array<double, 2>>>& runs, double hz) {
  RawRecording rec;
  rec.sample_rate_hz = hz;
  rec.num_channels = 2;
  rec.gases = {"CO", "C2H4"};
  rec.dataset_id = "uci";
  rec.group_id = "A";
  for (const auto& [len, sp] : runs) {
    for (std::size_t t = 0; t < len; ++t) {
      const double k = static_cast<double>(rec.setpoints.size());
      rec.values.push_back(k);
      rec.values.push_back(-k);
      rec.setpoints.push_back(sp);
    }
  }
  return rec;
}

}  // namespace

// ---------------------------------------------------------------------------
// Chain graphs

TEST(ChainGraph, ThreeNodes) {
  Rng rng(1);
  const ChainGraph g = build_chain_graph(random_features(3, 2, rng));
  using E = std::pair<std::size_t, std::size_t>;
  EXPECT_EQ(g.chain_edges(), (std::vector<E>{{0, 1}, {1, 2}}));
  EXPECT_EQ(g.self_loops(), 3u);
}

TEST(ChainGraph, SingleNodeHasOnlyASelfLoop) {
  Rng rng(1);
  const ChainGraph g = build_chain_graph(random_features(1, 4, rng));
  EXPECT_TRUE(g.chain_edges().empty());
  EXPECT_EQ(g.self_loops(), 1u);
  EXPECT_EQ(g.normalized.to_dense(), std::vector<double>{1.0});
}

TEST(ChainGraph, ShapesAndSymmetry) {
  Rng rng(2);
  const Tensor x = random_features(10, 16, rng);
  const ChainGraph g = build_chain_graph(x);
  EXPECT_EQ(g.x.shape(), (Shape{10, 16}));
  EXPECT_TRUE(std::equal(x.data().begin(), x.data().end(), g.x.data().begin()));
  ASSERT_EQ(g.adjacency.rows, 10u);
  ASSERT_EQ(g.adjacency.cols, 10u);
  const auto a = g.adjacency.to_dense();
  for (std::size_t i = 0; i < 10; ++i) {
    for (std::size_t j = 0; j < 10; ++j) EXPECT_EQ(a[i * 10 + j], a[j * 10 + i]);
  }
}

TEST(ChainGraph, EdgeCountsAndConnectivity) {
  Rng rng(3);
  for (std::size_t n : {1u, 2u, 5u, 37u, 400u}) {
    const ChainGraph g = build_chain_graph(random_features(n, 3, rng));
    EXPECT_EQ(g.chain_edges().size(), n - 1);
    EXPECT_EQ(g.self_loops(), n);
    EXPECT_EQ(g.adjacency.nnz(), 2 * (n - 1) + n);
    EXPECT_EQ(reachable_from_first(g.adjacency), n);
  }
}

TEST(ChainGraph, EmptySampleIsContractError) {
  SensorSample s;
  EXPECT_THROW(build_chain_graph(s), ContractError);
}

TEST(NormalizeAdjacency, TwoNodeChainIsAllHalves) {
  Rng rng(4);
  const ChainGraph g = build_chain_graph(random_features(2, 1, rng));
  for (double v : g.normalized.to_dense()) EXPECT_DOUBLE_EQ(v, 0.5);
}

TEST(NormalizeAdjacency, FiveNodeRowSums) {
  // Row sums of D^-1/2 A D^-1/2 for a 5-node chain, computed independently.
  const double want[5] = {0.9082482904638631, 1.0749149571305296, 1.0, 1.0749149571305296, 0.9082482904638631};
  Rng rng(5);
  const ChainGraph g = build_chain_graph(random_features(5, 1, rng));
  const auto d = g.normalized.to_dense();
  for (std::size_t r = 0; r < 5; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < 5; ++c) s += d[r * 5 + c];
    EXPECT_NEAR(s, want[r], 1e-15);
  }
  EXPECT_NEAR(d[2 * 5 + 1], 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(d[0 * 5 + 1], 1.0 / std::sqrt(6.0), 1e-15);
}

// ---------------------------------------------------------------------------
// Downsampling and segmentation

TEST(Downsample, HundredHertzByTwentyIsFiveHertz) {
  RawRecording rec;
  rec.sample_rate_hz = 100.0;
  rec.num_channels = 1;
  rec.values.assign(4'320'000, 0.0);
  const RawRecording out = downsample(rec, 20);
  EXPECT_DOUBLE_EQ(out.sample_rate_hz, 5.0);
  EXPECT_EQ(out.num_points(), 216'000u);
}

TEST(Downsample, FactorOneIsIdentity) {
  const RawRecording rec = setpoint_recording({{7, {0, 0}}, {5, {200, 0}}}, 10.0);
  const RawRecording out = downsample(rec, 1);
  EXPECT_EQ(out.values, rec.values);
  EXPECT_EQ(out.setpoints, rec.setpoints);
  EXPECT_DOUBLE_EQ(out.sample_rate_hz, rec.sample_rate_hz);
}

TEST(Downsample, ComposesMultiplicatively) {
  const RawRecording rec = setpoint_recording({{53, {0, 0}}, {40, {200, 0}}}, 100.0);
  for (std::size_t f1 : {2u, 3u}) {
    for (std::size_t f2 : {1u, 4u, 5u}) {
      const RawRecording a = downsample(downsample(rec, f1), f2);
      const RawRecording b = downsample(rec, f1 * f2);
      EXPECT_EQ(a.values, b.values);
      EXPECT_EQ(a.setpoints, b.setpoints);
      EXPECT_DOUBLE_EQ(a.sample_rate_hz, b.sample_rate_hz);
    }
  }
}

TEST(SegmentUci, SetpointChangesStartNewSegments) {
  const RawRecording rec = setpoint_recording({{20, {0, 0}}, {30, {200, 0}}, {25, {200, 10}}}, 1.0);
  const auto segs = segment_uci(rec, 0.0);
  ASSERT_EQ(segs.size(), 3u);
  EXPECT_EQ(segs[0].label, "Air");
  EXPECT_EQ(segs[1].label, "CO");
  EXPECT_EQ(segs[2].label, "CO-C2H4");
  EXPECT_EQ(segs[2].conc_ppm, (std::array<double, 2>{200, 10}));
  EXPECT_EQ(segs[1].num_nodes(), 30u);
}

TEST(SegmentUci, ConstantSetpointsGiveOneSegment) {
  const RawRecording rec = setpoint_recording({{50, {0, 10}}}, 1.0);
  const auto segs = segment_uci(rec, 0.0);
  ASSERT_EQ(segs.size(), 1u);
  EXPECT_EQ(segs[0].label, "C2H4");
}

TEST(SegmentUci, OneSecondAtFiveHertzIsFiveNodes) {
  const RawRecording rec = setpoint_recording({{10, {0, 0}}, {5, {100, 0}}, {10, {0, 0}}}, 5.0);
  const auto segs = segment_uci(rec, 0.0);
  ASSERT_EQ(segs.size(), 3u);
  EXPECT_EQ(segs[1].num_nodes(), 5u);
}

TEST(SegmentUci, SkipWindowsAndPartition) {
  // 100 s at each end at 5 Hz = 500 points dropped per side.
  const RawRecording rec = setpoint_recording({{700, {0, 0}}, {400, {200, 0}}, {300, {200, 10}}, {900, {0, 0}}}, 5.0);
  const auto segs = segment_uci(rec, 100.0);
  ASSERT_EQ(segs.size(), 4u);
  std::size_t total = 0;
  for (const auto& s : segs) total += s.num_nodes();
  EXPECT_EQ(total, rec.num_points() - 1000);
  EXPECT_EQ(segs.front().num_nodes(), 200u);
  EXPECT_EQ(segs.back().num_nodes(), 400u);
  // Sensor values are copied verbatim: channel 0 holds the point index.
  EXPECT_DOUBLE_EQ(segs[0].features.at({0, 0}), 500.0);
}

TEST(SegmentUci, MissingSetpointsIsFormatError) {
  RawRecording rec = setpoint_recording({{10, {0, 0}}}, 1.0);
  rec.setpoints.clear();
  EXPECT_THROW(segment_uci(rec, 0.0), FormatError);
}

// ---------------------------------------------------------------------------
// Targets

TEST(NormalizeConcentrations, DividesByMaximum) {
  const auto y = normalize_concentrations({{0, 1}, {250, 1}, {500, 2}}, {500, 2});
  EXPECT_DOUBLE_EQ(y[0][0], 0.0);
  EXPECT_DOUBLE_EQ(y[1][0], 0.5);
  EXPECT_DOUBLE_EQ(y[2][0], 1.0);
}

TEST(NormalizeConcentrations, MaximumMapsToExactlyOne) {
  const auto y = normalize_concentrations({{200, 0}, {533.33, 5}}, {533.33, 5});
  EXPECT_EQ(y[1][0], 1.0);
  EXPECT_EQ(y[1][1], 1.0);
}

TEST(NormalizeConcentrations, IdempotentAfterFirstApplication) {
  Rng rng(6);
  std::vector<std::array<double, 2>> c(40);
  for (auto& v : c) v = {rng.uniform(0, 500), rng.uniform(0, 80)};
  std::vector<SensorSample> samples(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) samples[i].conc_ppm = c[i];
  const auto once = normalize_concentrations(c, per_gas_max(samples));
  for (std::size_t i = 0; i < c.size(); ++i) samples[i].conc_ppm = once[i];
  const auto twice = normalize_concentrations(once, per_gas_max(samples));
  EXPECT_EQ(once, twice);
  for (std::size_t i = 0; i < c.size(); ++i) {
    EXPECT_NEAR(once[i][0] / once[0][0], c[i][0] / c[0][0], 1e-12);
  }
}

TEST(NormalizeConcentrations, AllZeroGasIsContractError) {
  EXPECT_THROW(normalize_concentrations({{0, 1}}, {0, 1}), ContractError);
}

TEST(TargetGasVolume, Formula) {
  EXPECT_DOUBLE_EQ(target_gas_volume(1000, 5, 1), 0.005);
  EXPECT_DOUBLE_EQ(target_gas_volume(0, 5, 1), 0.0);
  EXPECT_DOUBLE_EQ(target_gas_volume(300, 2, 0.5), 2.0 * target_gas_volume(300, 2, 1.0));
  EXPECT_THROW(target_gas_volume(1, 1, 0), ContractError);
}

// ---------------------------------------------------------------------------
// Splitting

TEST(StratifiedSplit, CustomDatasetTestCounts) {
  const auto strata = class_strata({{"CO", 150}, {"C2H4", 150}, {"CO-C2H4", 300}});
  const SplitPlan plan = stratified_split(strata, 0.16, 5, 42);
  EXPECT_EQ(plan.test.size(), 96u);
  const auto counts = test_counts(plan, strata);
  EXPECT_EQ(counts.at("CO"), 24u);
  EXPECT_EQ(counts.at("C2H4"), 24u);
  EXPECT_EQ(counts.at("CO-C2H4"), 48u);
}

TEST(StratifiedSplit, UciPoolTestCounts) {
  const auto strata = class_strata({{"A/Air", 89}, {"A/CO", 71}, {"A/C2H4", 111}, {"A/CO-C2H4", 100},
                                    {"B/Air", 98}, {"B/CH4", 76}, {"B/C2H4", 89}, {"B/CH4-C2H4", 86}});
  ASSERT_EQ(strata.size(), 720u);
  const SplitPlan plan = stratified_split(strata, 0.16, 5, 7);
  EXPECT_EQ(plan.test.size(), 119u);
  EXPECT_EQ(plan.train_val().size(), 601u);
}

TEST(StratifiedSplit, FourClassesOfTwentyFive) {
  const auto strata = class_strata({{"a", 25}, {"b", 25}, {"c", 25}, {"d", 25}});
  const SplitPlan plan = stratified_split(strata, 0.16, 5, 1);
  EXPECT_EQ(plan.test.size(), 16u);
  for (const auto& [k, n] : test_counts(plan, strata)) EXPECT_EQ(n, 4u) << k;
}

TEST(StratifiedSplit, PartitionsAreDisjointAndExhaustive) {
  const auto strata = class_strata({{"x", 31}, {"y", 57}, {"z", 12}});
  const SplitPlan plan = stratified_split(strata, 0.16, 5, 9);
  ASSERT_EQ(plan.folds.size(), 5u);
  std::set<std::size_t> test(plan.test.begin(), plan.test.end());
  const auto tv = plan.train_val();
  std::set<std::size_t> all(tv.begin(), tv.end());
  for (auto i : test) EXPECT_FALSE(all.count(i));
  all.insert(test.begin(), test.end());
  EXPECT_EQ(all.size(), strata.size());

  std::vector<int> seen(strata.size(), 0);
  for (const auto& f : plan.folds) {
    for (auto i : f.val) ++seen[i];
    std::set<std::size_t> tr(f.train.begin(), f.train.end());
    for (auto i : f.val) EXPECT_FALSE(tr.count(i));
    EXPECT_EQ(f.train.size() + f.val.size(), tv.size());
  }
  for (auto i : tv) EXPECT_EQ(seen[i], 1);
}

TEST(StratifiedSplit, ProportionsWithinOneSample) {
  Rng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::pair<std::string, std::size_t>> spec;
    for (int c = 0; c < 4; ++c) spec.emplace_back("c" + std::to_string(c), 5 + rng.below(200));
    const auto strata = class_strata(spec);
    const SplitPlan plan = stratified_split(strata, 0.16, 5, trial);
    const auto counts = test_counts(plan, strata);
    for (const auto& [k, n] : spec) EXPECT_LT(std::abs(static_cast<double>(counts.at(k)) - 0.16 * n), 1.0);
  }
}

TEST(StratifiedSplit, SameSeedIdenticalDifferentSeedSameCounts) {
  const auto strata = class_strata({{"CO", 150}, {"C2H4", 150}, {"CO-C2H4", 300}});
  const SplitPlan a = stratified_split(strata, 0.16, 5, 100);
  const SplitPlan b = stratified_split(strata, 0.16, 5, 100);
  const SplitPlan c = stratified_split(strata, 0.16, 5, 101);
  EXPECT_EQ(a.test, b.test);
  for (std::size_t f = 0; f < 5; ++f) EXPECT_EQ(a.folds[f].val, b.folds[f].val);
  EXPECT_NE(a.test, c.test);
  EXPECT_EQ(test_counts(a, strata), test_counts(c, strata));
}

TEST(StratifiedSplit, TooFewMembersIsContractError) {
  EXPECT_THROW(stratified_split(class_strata({{"a", 30}, {"b", 4}}), 0.16, 5, 0), ContractError);
}

TEST(StratifiedSplit, FileRoundTrip) {
  const auto strata = class_strata({{"a", 30}, {"b", 20}});
  const SplitPlan plan = stratified_split(strata, 0.16, 5, 3);
  const fs::path path = scratch_dir("split") / "split.json";
  save_split(plan, path);
  const SplitPlan back = load_split(path);
  EXPECT_EQ(back.seed, plan.seed);
  EXPECT_EQ(back.test, plan.test);
  ASSERT_EQ(back.folds.size(), plan.folds.size());
  for (std::size_t f = 0; f < plan.folds.size(); ++f) {
    EXPECT_EQ(back.folds[f].train, plan.folds[f].train);
    EXPECT_EQ(back.folds[f].val, plan.folds[f].val);
  }
}

// ---------------------------------------------------------------------------
// Corpus files

namespace {

Corpus random_corpus(std::size_t n, std::size_t channels, Rng& rng) {
  Corpus c;
  c.dataset_id = "rt";
  c.group_id = "G";
  c.sensor_count = channels;
  c.sample_rate_hz = 5.0;
  c.gases = {"CO", "C2H4"};
  const char* labels[] = {"CO", "C2H4", "CO-C2H4"};
  for (std::size_t i = 0; i < n; ++i) {
    SensorSample s;
    s.features = random_features(3 + rng.below(20), channels, rng);
    s.label = labels[i % 3];
    s.conc_ppm = {i % 3 == 1 ? 0.0 : rng.uniform(1, 500), i % 3 == 0 ? 0.0 : rng.uniform(1, 20)};
    s.dataset_id = c.dataset_id;
    s.group_id = c.group_id;
    c.samples.push_back(std::move(s));
  }
  return c;
}

}  // namespace

TEST(Corpus, SaveLoadRoundTrip) {
  Rng rng(14);
  const Corpus c = random_corpus(10, 8, rng);
  const fs::path dir = scratch_dir("roundtrip");
  save_corpus(c, dir);
  const Corpus back = load_corpus(dir);
  EXPECT_EQ(back.dataset_id, c.dataset_id);
  EXPECT_EQ(back.group_id, c.group_id);
  EXPECT_EQ(back.sensor_count, c.sensor_count);
  EXPECT_EQ(back.gases, c.gases);
  ASSERT_EQ(back.samples.size(), c.samples.size());
  for (std::size_t i = 0; i < c.samples.size(); ++i) {
    const auto& a = c.samples[i];
    const auto& b = back.samples[i];
    EXPECT_EQ(a.label, b.label);
    EXPECT_EQ(a.conc_ppm, b.conc_ppm);
    EXPECT_EQ(a.group_id, b.group_id);
    ASSERT_EQ(a.features.shape(), b.features.shape());
    EXPECT_TRUE(std::equal(a.features.data().begin(), a.features.data().end(), b.features.data().begin()));
  }
}

TEST(Corpus, SaveIsByteIdenticalOnRerun) {
  Rng rng(15);
  const Corpus c = random_corpus(4, 3, rng);
  const fs::path a = scratch_dir("bytes_a"), b = scratch_dir("bytes_b");
  save_corpus(c, a);
  save_corpus(c, b);
  for (const auto& e : fs::directory_iterator(a)) {
    std::ifstream fa(e.path()), fb(b / e.path().filename());
    const std::string sa((std::istreambuf_iterator<char>(fa)), {});
    const std::string sb((std::istreambuf_iterator<char>(fb)), {});
    EXPECT_EQ(sa, sb) << e.path();
  }
}

TEST(Corpus, WrongChannelCountIsRejected) {
  Rng rng(16);
  const Corpus c = random_corpus(2, 4, rng);
  const fs::path dir = scratch_dir("channels");
  save_corpus(c, dir);
  write_sample_csv(random_features(5, 3, rng), 5.0, dir / "sample_00001.csv");
  try {
    load_corpus(dir);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("3"), std::string::npos) << msg;
    EXPECT_NE(msg.find("4"), std::string::npos) << msg;
    EXPECT_NE(msg.find("sample_00001.csv"), std::string::npos) << msg;
  }
}

TEST(Corpus, UnknownManifestLabelIsRejected) {
  Rng rng(17);
  const fs::path dir = scratch_dir("label");
  save_corpus(random_corpus(2, 2, rng), dir);
  nlohmann::json m;
  {
    std::ifstream in(dir / "manifest.json");
    in >> m;
  }
  m["samples"][0]["label"] = "Xenon";
  {
    std::ofstream out(dir / "manifest.json");
    out << m.dump(2);
  }
  EXPECT_THROW(load_corpus(dir), FormatError);
}

TEST(Corpus, CustomRawDirectory) {
  Rng rng(18);
  const fs::path dir = scratch_dir("custom_raw");
  {
    std::ofstream idx(dir / "index.csv");
    idx << "file,label,CO_ppm,C2H4_ppm\n";
    idx << "a.csv,CO,200,0\n";
    idx << "b.csv,CO-C2H4,100,5\n";
  }
  write_sample_csv(random_features(6, 8, rng), 5.0, dir / "a.csv");
  write_sample_csv(random_features(9, 8, rng), 5.0, dir / "b.csv");
  const Corpus c = load_custom_raw(dir, "custom");
  ASSERT_EQ(c.samples.size(), 2u);
  EXPECT_EQ(c.sensor_count, 8u);
  EXPECT_DOUBLE_EQ(c.sample_rate_hz, 5.0);
  EXPECT_EQ(c.gases, (std::array<std::string, 2>{"CO", "C2H4"}));
  EXPECT_EQ(c.samples[1].label, "CO-C2H4");
  EXPECT_EQ(c.samples[1].num_nodes(), 9u);
}

TEST(ClassMap, AirFromBothGroupsIsOneClass) {
  const ClassMap m = ClassMap::from_labels({"Air", "CO", "Air", "CH4", "C2H4", "CO-C2H4", "CH4-C2H4"});
  EXPECT_EQ(m.size(), 6u);
  EXPECT_EQ(m.id("Air"), 0u);
}
