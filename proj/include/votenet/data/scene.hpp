#pragma once

#include <cstdint>

#include "votenet/data/raster.hpp"

namespace votenet::data {

/// Parameters of a synthetic farmland scene. Fields are random star-shaped
/// polygons; a share of them are contour-levee fields textured with curved
/// periodic ridges, the rest carry straight crop rows.
struct SceneSpec {
  std::size_t height = 256;
  std::size_t width = 256;
  std::size_t field_count = 5;
  double levee_fraction = 0.5;
  std::size_t min_field_size = 56;
  std::size_t max_field_size = 104;
  double min_stripe_period = 6.0;
  double max_stripe_period = 11.0;
  double noise_level = 0.04;
  std::uint64_t seed = 1;
  std::size_t max_placement_attempts = 1000;

  void validate() const;
  bool operator==(const SceneSpec&) const = default;
};

/// Renders a scene. The mask marks every pixel of every levee field; the
/// field map holds 1-based ids for all fields. Throws DataError when a field
/// cannot be placed without overlap within the attempt budget.
LabeledRaster generate_scene(const SceneSpec& spec);

}  // namespace votenet::data
