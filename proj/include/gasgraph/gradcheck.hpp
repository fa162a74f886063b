#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "gasgraph/tensor.hpp"

namespace gasgraph {

struct GradCheckResult {
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::size_t entries = 0;
};

/// Compares reverse-mode gradients of a scalar function against central finite
/// differences (f(x+h) - f(x-h)) / 2h for every entry of every input.
///
/// The relative error of one entry is |a - n| / max(|a|, |n|, abs_floor); the
/// floor keeps entries whose true gradient is ~0 from reporting pure rounding
/// noise as a relative error.
GradCheckResult gradient_check(const std::function<Tensor()>& loss_fn, const std::vector<Tensor>& inputs,
                               double h = 1e-5, double abs_floor = 1e-6);

}  // namespace gasgraph
