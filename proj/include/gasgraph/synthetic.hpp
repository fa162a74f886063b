#pragma once

#include <array>
#include <cstddef>
#include <cstdint>

#include "gasgraph/graphio.hpp"

namespace gasgraph {

/// Three classes (CO, C2H4, CO-C2H4) whose channels follow class-specific
/// rise/decay curves with per-sample jitter and Gaussian noise.
struct SyntheticClassificationConfig {
  std::size_t samples = 120;
  std::size_t channels = 8;
  std::size_t min_nodes = 180;
  std::size_t max_nodes = 220;
  double noise = 0.05;  // standard deviation relative to the channel amplitude
  double sample_rate_hz = 5.0;
};

Corpus synthetic_classification(const SyntheticClassificationConfig& config, std::uint64_t seed);

/// Each channel rises to a steady state that is affine in the two
/// concentrations. Samples are a third pure gas 1, a third pure gas 2 and a
/// third mixtures, at concentrations drawn from `levels` evenly spaced steps.
struct SyntheticRegressionConfig {
  std::size_t samples = 150;
  std::size_t channels = 8;
  std::size_t min_nodes = 80;
  std::size_t max_nodes = 120;
  std::size_t levels = 10;
  double noise = 0.01;
  std::array<double, 2> max_ppm{500.0, 100.0};
  double sample_rate_hz = 5.0;
};

Corpus synthetic_regression(const SyntheticRegressionConfig& config, std::uint64_t seed);

}  // namespace gasgraph
