#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "votenet/autodiff/graph.hpp"

namespace votenet::net {

using ad::Graph;
using ad::Tensor;

enum class CountMode { raw, area_normalized };

std::string to_string(CountMode mode);
CountMode parse_count_mode(const std::string& text);

/// Number of semantic classes: background (0) and contour (1).
inline constexpr std::size_t kClassCount = 2;
/// Total spatial downsampling of the backbone encoder.
inline constexpr std::size_t kDownsampling = 8;
/// Guard for empty segments in area normalization.
inline constexpr double kSegmentEpsilon = 1e-8;

struct NetworkConfig {
  std::size_t segments = 10;  // K
  std::size_t height = 64;
  std::size_t width = 64;
  /// Channel widths of the full-resolution stage and the three downsampled
  /// stages.
  std::array<std::size_t, 4> widths{16, 32, 64, 96};
  double count_temperature = 0.1;
  CountMode count_mode = CountMode::area_normalized;
  /// Per-channel input standardization (x - mean) / std applied before the
  /// first convolution. Defaults match the synthetic scene generator.
  std::array<double, 3> input_mean{0.42, 0.42, 0.33};
  std::array<double, 3> input_std{0.07, 0.065, 0.065};

  /// Throws std::invalid_argument on K < 2, H or W < 8, non-positive
  /// temperature or a zero width.
  void validate() const;
  bool operator==(const NetworkConfig&) const = default;
};

/// Named trainable tensors in a fixed order.
class ParameterSet {
 public:
  void add(std::string name, Tensor tensor);
  const Tensor& get(const std::string& name) const;
  std::size_t size() const { return entries_.size(); }
  std::size_t scalar_count() const;

  const std::vector<std::pair<std::string, Tensor>>& entries() const { return entries_; }
  /// Handles aliasing the stored tensors, in order.
  std::vector<Tensor> tensors() const;
  /// Deep copy.
  ParameterSet clone() const;

 private:
  std::vector<std::pair<std::string, Tensor>> entries_;
};

/// Layer names and kernel shapes implied by a configuration, in parameter
/// order. Each conv contributes "<name>.weight" and "<name>.bias".
std::vector<std::pair<std::string, ad::Shape>> parameter_layout(const NetworkConfig& config);

/// Uniform initialization in +-sqrt(6 / fan_in); biases start at zero.
ParameterSet init_parameters(const NetworkConfig& config, std::uint64_t seed);

struct BackboneOutput {
  Tensor segment_logits;  // H x W x K
  Tensor class_logits;    // H x W x 2
};

/// Substitute encoder-decoder: one full-resolution conv, three stride-2
/// convs, three upsample + skip-concat + conv stages, then two 1x1 heads.
BackboneOutput backbone_forward(Graph& graph, const Tensor& image, const NetworkConfig& config,
                                const ParameterSet& params);

struct SegmentStack {
  Tensor memberships;  // H x W x K, simplex along K
};

SegmentStack segment_softmax(Graph& graph, const Tensor& segment_logits);

struct VoteOutcome {
  Tensor counts;         // (N_b, N_c), possibly area-normalized
  Tensor probabilities;  // (p_b, p_c)
  Tensor mask;           // H x W x 2
};

/// Differentiable majority vote inside one soft segment. `segment` is H x W
/// or H x W x 1; `class_probs` is H x W x 2.
VoteOutcome voting_block(Graph& graph, const Tensor& segment, const Tensor& class_probs,
                         double temperature, CountMode mode);

struct FusedMap {
  Tensor fused;  // H x W x 2
};

/// Sums the masks of one voting block per slice of `segments`.
FusedMap fusion_block(Graph& graph, const SegmentStack& segments, const Tensor& class_probs,
                      const NetworkConfig& config);

struct ForwardResult {
  SegmentStack segments;
  Tensor class_logits;
  Tensor class_probs;
  FusedMap fused;
};

ForwardResult forward(Graph& graph, const Tensor& image, const NetworkConfig& config,
                      const ParameterSet& params);

}  // namespace votenet::net
