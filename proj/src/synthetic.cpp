#include "gasgraph/synthetic.hpp"

#include <cmath>

#include "gasgraph/errors.hpp"
#include "gasgraph/rng.hpp"

namespace gasgraph {

namespace {

const std::array<std::string, 2> kGases{"CO", "C2H4"};

std::size_t draw_nodes(Rng& rng, std::size_t lo, std::size_t hi) {
  if (lo == 0 || hi < lo) throw ContractError("invalid node-count range");
  return lo + rng.below(hi - lo + 1);
}

}  // namespace

Corpus synthetic_classification(const SyntheticClassificationConfig& config, std::uint64_t seed) {
  if (config.channels == 0) throw ContractError("synthetic corpus needs channels");
  Rng rng(seed);
  Corpus corpus;
  corpus.dataset_id = "synthetic-classify";
  corpus.group_id = "S";
  corpus.sensor_count = config.channels;
  corpus.sample_rate_hz = config.sample_rate_hz;
  corpus.gases = kGases;

  // Rise and decay time constants as fractions of the recording length.
  constexpr double kRise[3] = {0.05, 0.30, 0.05};
  constexpr double kDecay[3] = {0.40, 0.40, 0.06};
  const std::array<std::array<double, 2>, 3> conc{{{200.0, 0.0}, {0.0, 10.0}, {200.0, 10.0}}};

  for (std::size_t i = 0; i < config.samples; ++i) {
    const std::size_t k = i % 3;
    const std::size_t n = draw_nodes(rng, config.min_nodes, config.max_nodes);
    const double nd = static_cast<double>(n);
    const double rise = kRise[k] * nd * rng.uniform(0.8, 1.2);
    const double decay = kDecay[k] * nd * rng.uniform(0.8, 1.2);
    const double off = 0.6 * nd;
    std::vector<double> v(n * config.channels);
    for (std::size_t c = 0; c < config.channels; ++c) {
      const double amp = (1.0 + 0.5 * std::sin(static_cast<double>(c) + 2.0 * static_cast<double>(k))) *
                         rng.uniform(0.8, 1.2);
      for (std::size_t t = 0; t < n; ++t) {
        const double td = static_cast<double>(t);
        double s = amp * (1.0 - std::exp(-td / rise));
        if (td > off) s *= std::exp(-(td - off) / decay);
        v[t * config.channels + c] = s + config.noise * amp * rng.normal();
      }
    }
    SensorSample sample;
    sample.features = Tensor({n, config.channels}, std::move(v));
    sample.conc_ppm = conc[k];
    sample.label = composition_label(kGases, conc[k][0] > 0.0, conc[k][1] > 0.0);
    sample.dataset_id = corpus.dataset_id;
    sample.group_id = corpus.group_id;
    corpus.samples.push_back(std::move(sample));
  }
  return corpus;
}

Corpus synthetic_regression(const SyntheticRegressionConfig& config, std::uint64_t seed) {
  if (config.channels == 0 || config.levels == 0) throw ContractError("synthetic corpus needs channels and levels");
  Rng rng(seed);
  Corpus corpus;
  corpus.dataset_id = "synthetic-regress";
  corpus.group_id = "S";
  corpus.sensor_count = config.channels;
  corpus.sample_rate_hz = config.sample_rate_hz;
  corpus.gases = kGases;

  std::vector<std::array<double, 2>> gain(config.channels);
  for (std::size_t c = 0; c < config.channels; ++c) {
    gain[c] = {0.5 + 0.3 * static_cast<double>(c % 4), 1.2 - 0.4 * static_cast<double>(c % 3)};
  }
  auto level = [&](std::size_t gas) {
    return config.max_ppm[gas] * static_cast<double>(1 + rng.below(config.levels)) / static_cast<double>(config.levels);
  };

  for (std::size_t i = 0; i < config.samples; ++i) {
    std::array<double, 2> conc{0.0, 0.0};
    switch (i % 3) {
      case 0: conc[0] = level(0); break;
      case 1: conc[1] = level(1); break;
      default: conc = {level(0), level(1)}; break;
    }
    const std::size_t n = draw_nodes(rng, config.min_nodes, config.max_nodes);
    const double tau = 0.15 * static_cast<double>(n);
    std::vector<double> v(n * config.channels);
    for (std::size_t c = 0; c < config.channels; ++c) {
      const double steady =
          0.2 + gain[c][0] * conc[0] / config.max_ppm[0] + gain[c][1] * conc[1] / config.max_ppm[1];
      for (std::size_t t = 0; t < n; ++t) {
        v[t * config.channels + c] =
            steady * (1.0 - std::exp(-static_cast<double>(t) / tau)) + config.noise * rng.normal();
      }
    }
    SensorSample sample;
    sample.features = Tensor({n, config.channels}, std::move(v));
    sample.conc_ppm = conc;
    sample.label = composition_label(kGases, conc[0] > 0.0, conc[1] > 0.0);
    sample.dataset_id = corpus.dataset_id;
    sample.group_id = corpus.group_id;
    corpus.samples.push_back(std::move(sample));
  }
  return corpus;
}

}  // namespace gasgraph
