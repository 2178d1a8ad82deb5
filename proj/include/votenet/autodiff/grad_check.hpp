#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "votenet/autodiff/graph.hpp"

namespace votenet::ad {

/// Builds a scalar from `inputs` on the supplied graph. Must be deterministic.
using ScalarBuilder = std::function<Tensor(Graph&, std::span<const Tensor> inputs)>;

struct GradCheckReport {
  /// Largest relative error over all checked elements.
  double max_relative_error = 0.0;
  /// Largest relative error per input tensor.
  std::vector<double> per_input;
  std::size_t elements_checked = 0;
  bool passed = false;
  /// Non-empty when the builder itself threw; the check is then failed.
  std::string failure;
};

/// Relative error used by the checker: |a - n| / max(|a|, |n|, floor).
/// The floor keeps gradients that are zero up to round-off from dominating.
double relative_error(double analytic, double numeric, double floor = 1e-6);

/// Compares backward() against central differences of step `h` for every
/// element of every input. Input values are restored before returning.
GradCheckReport grad_check(const ScalarBuilder& builder, std::vector<Tensor> inputs,
                           double h = 1e-5, double tolerance = 1e-4);

}  // namespace votenet::ad
