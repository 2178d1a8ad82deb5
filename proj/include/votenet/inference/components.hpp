#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "votenet/inference/tiling.hpp"

namespace votenet::infer {

struct Component {
  std::size_t id = 0;
  std::int64_t label = 0;
  std::vector<std::size_t> pixels;  // flat indices, ascending

  std::size_t area() const { return pixels.size(); }
};

/// Maximal 4-connected regions of equal label, ordered by their first pixel
/// in raster order.
struct ComponentSet {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t min_area = 0;
  std::vector<Component> components;

  /// Components with area >= min_area.
  std::vector<const Component*> eligible() const;
  std::vector<const Component*> ineligible() const;
};

ComponentSet connected_components(std::span<const std::int64_t> labels, std::size_t height,
                                  std::size_t width, std::size_t min_area);
ComponentSet connected_components(std::span<const std::uint8_t> labels, std::size_t height,
                                  std::size_t width, std::size_t min_area);

/// Minimum voting area for an image: 2000 pixels per 512 x 512 window,
/// scaled by area, never below 16.
std::size_t default_min_area(std::size_t height, std::size_t width);

/// Classical majority vote: every pixel of a segment takes the segment's
/// most frequent hard label (ties to background). Pixels outside all segments
/// keep their own label. Throws std::invalid_argument on overlapping segments.
std::vector<std::uint8_t> majority_vote(std::span<const std::uint8_t> hard_labels,
                                        const std::vector<std::vector<std::size_t>>& segments);

std::vector<std::uint8_t> majority_vote_postprocess(
    const PredictionMap& prediction, const std::vector<std::vector<std::size_t>>& segments);

/// Voting regions from a prediction's segment labels: eligible components of
/// the segment-label map.
std::vector<std::vector<std::size_t>> voting_segments(const PredictionMap& prediction,
                                                      std::size_t min_area);

}  // namespace votenet::infer
