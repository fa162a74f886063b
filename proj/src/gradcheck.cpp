#include "gasgraph/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "gasgraph/errors.hpp"

namespace gasgraph {

GradCheckResult gradient_check(const std::function<Tensor()>& loss_fn, const std::vector<Tensor>& inputs,
                               double h, double abs_floor) {
  std::vector<Tensor> leaves = inputs;
  for (auto& t : leaves) {
    t.set_requires_grad(true);
    t.zero_grad();
  }
  ComputeTape::current().clear();
  backward(loss_fn());

  GradCheckResult result;
  NoGradGuard no_grad;
  for (auto& t : leaves) {
    const std::vector<double> analytic(t.grad().begin(), t.grad().end());
    auto values = t.mutable_data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double orig = values[i];
      values[i] = orig + h;
      const double up = loss_fn().item();
      values[i] = orig - h;
      const double down = loss_fn().item();
      values[i] = orig;
      const double numeric = (up - down) / (2.0 * h);
      const double abs_err = std::abs(analytic[i] - numeric);
      const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), abs_floor});
      result.max_abs_error = std::max(result.max_abs_error, abs_err);
      result.max_rel_error = std::max(result.max_rel_error, abs_err / denom);
      ++result.entries;
    }
    t.clear_grad();
  }
  return result;
}

}  // namespace gasgraph
