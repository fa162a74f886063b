#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace gasgraph {

struct GradCheckRow {
  std::string name;
  std::size_t seeds = 0;
  std::size_t entries = 0;
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

struct GradSuiteOptions {
  std::size_t seeds = 20;
  double tolerance = 1e-4;
  std::uint64_t base_seed = 0;
  bool include_models = true;
};

/// Finite-difference checks of every primitive, every layer type, the losses
/// and tiny instances of both full models, each over `seeds` random draws.
std::vector<GradCheckRow> run_gradcheck_suite(const GradSuiteOptions& options);

std::string format_gradcheck_table(const std::vector<GradCheckRow>& rows);

}  // namespace gasgraph
