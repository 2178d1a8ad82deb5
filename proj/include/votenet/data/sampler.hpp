#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "votenet/data/raster.hpp"

namespace votenet::data {

/// Training-patch sampling parameters.
///
/// Contour patches are centred on points of circles around each levee
/// field's centroid, with radii r_fractions * R where R is the smaller side
/// of the field's bounding box, one point every `angle_step` degrees.
struct SamplerConfig {
  std::vector<double> r_fractions{0.1, 0.2, 0.3};
  double angle_step = 30.0;  // degrees; must divide 360
  double keep_threshold = 0.35;
  std::size_t patch_size = 64;
  std::size_t background_stride = 64;
  /// Largest contour fraction a background window may contain.
  double background_tolerance = 0.0;
  std::vector<double> rotation_set = default_rotation_set();

  static std::vector<double> default_rotation_set();  // 5, 10, ..., 180
  void validate() const;
  bool operator==(const SamplerConfig&) const = default;
};

enum class PatchClass { contour, background };
std::string to_string(PatchClass c);
PatchClass parse_patch_class(const std::string& text);

struct Patch {
  std::string id;
  std::size_t source_scene = 0;
  /// Window centre in scene pixel coordinates (after any inward shift).
  long center_x = 0;
  long center_y = 0;
  std::size_t origin_x = 0;
  std::size_t origin_y = 0;
  double rotation_deg = 0.0;
  PatchClass patch_class = PatchClass::contour;
  LabeledRaster raster;
};

struct ContourCandidate {
  std::uint16_t field = 0;
  double field_center_x = 0.0;
  double field_center_y = 0.0;
  double radius = 0.0;
  double angle_deg = 0.0;
  /// Exact point on the circle.
  double circle_x = 0.0;
  double circle_y = 0.0;
  /// Window origin after rounding the circle point and shifting inward.
  std::size_t origin_x = 0;
  std::size_t origin_y = 0;
  double contour_fraction = 0.0;
  bool kept = false;
};

/// Every candidate window for every levee field, kept or not, in field-id,
/// radius, angle order. Requires the raster's field map.
std::vector<ContourCandidate> contour_candidates(const LabeledRaster& raster,
                                                 const SamplerConfig& config);

std::vector<Patch> sample_contour_patches(const LabeledRaster& raster, const SamplerConfig& config,
                                          std::size_t source_scene = 0);

/// Windows on a regular grid (no edge clamping) whose contour fraction does
/// not exceed the background tolerance.
std::vector<Patch> sample_background_patches(const LabeledRaster& raster,
                                             const SamplerConfig& config,
                                             std::size_t source_scene = 0);

/// Rotation about the patch centre: bilinear for the image, nearest for the
/// mask, mirror reflection for samples that fall outside the patch.
LabeledRaster rotate_raster(const LabeledRaster& patch, double degrees);

/// The original patch followed by one rotated copy per angle.
std::vector<Patch> augment_rotations(const Patch& patch, const std::vector<double>& rotation_set);

}  // namespace votenet::data
