#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "votenet/autodiff/tensor.hpp"

namespace votenet::infer {

/// How the last window along an axis is placed when the stride does not land
/// on the image edge.
enum class EdgePolicy {
  clamp,  // final window shifted back to end exactly at the edge
  pad,    // windows start at every stride multiple below the extent and may
          // hang over the edge; the overhang is mirror-padded
};

struct TileOrigin {
  std::size_t y = 0;
  std::size_t x = 0;
  bool operator==(const TileOrigin&) const = default;
};

struct TilePlan {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t window = 0;
  std::size_t stride = 0;
  EdgePolicy edge = EdgePolicy::clamp;
  std::vector<TileOrigin> origins;  // raster order

  std::size_t size() const { return origins.size(); }
};

/// Window start positions along one axis.
std::vector<std::size_t> axis_positions(std::size_t extent, std::size_t window, std::size_t stride,
                                        EdgePolicy edge = EdgePolicy::clamp);

/// Throws std::invalid_argument when the window exceeds the image or the
/// stride is zero.
TilePlan plan_tiles(std::size_t height, std::size_t width, std::size_t window, std::size_t stride,
                    EdgePolicy edge = EdgePolicy::clamp);

/// Output of the model on one window.
struct WindowPrediction {
  ad::Tensor fused;                   // window x window x 2 probabilities
  std::vector<std::int32_t> segments; // window x window argmax of S; may be empty
};

using WindowPredictor = std::function<WindowPrediction(const ad::Tensor& window)>;

/// Whole-image prediction assembled from overlapping windows.
struct PredictionMap {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> probabilities;        // H x W x 2, mean over covering windows
  std::vector<std::uint32_t> counts;        // windows covering each pixel
  /// Segment id per pixel from the last window covering it, made unique per
  /// window; -1 when the predictor reports no segments.
  std::vector<std::int64_t> segment_labels;
  std::size_t windows = 0;

  /// Per-pixel argmax; ties go to background.
  std::vector<std::uint8_t> hard_labels() const;
};

/// Runs the predictor on every window of `plan` and averages the class
/// probabilities of overlapping windows.
PredictionMap predict_image(const ad::Tensor& image, const WindowPredictor& predictor,
                            const TilePlan& plan);

}  // namespace votenet::infer
