#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "votenet/autodiff/tensor.hpp"

namespace votenet::ad {

struct AdamState {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t step = 0;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;

  /// Zeroed accumulators shaped like `params`.
  static AdamState for_params(std::span<const Tensor> params, double learning_rate = 1e-4,
                              double beta1 = 0.9, double beta2 = 0.999, double epsilon = 1e-8);
};

/// One bias-corrected Adam update of every parameter, in place. Throws
/// std::invalid_argument when a parameter has no gradient or does not match
/// the accumulator layout.
void adam_step(std::span<Tensor> params, AdamState& state);

}  // namespace votenet::ad
