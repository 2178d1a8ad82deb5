#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "votenet/autodiff/tensor.hpp"

namespace votenet::data {

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// RGB image plus binary contour mask, and optionally the field-instance map
/// the mask was derived from.
struct LabeledRaster {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> image;         // H x W x 3, values in [0, 1]
  std::vector<std::uint8_t> mask;    // H x W, 1 = contour levee
  std::vector<std::uint16_t> fields; // H x W field ids, 0 = no field; empty if absent

  LabeledRaster() = default;
  LabeledRaster(std::size_t h, std::size_t w);

  bool has_fields() const { return !fields.empty(); }
  std::size_t pixels() const { return height * width; }
  std::size_t contour_pixels() const;

  /// Checks matching dimensions and value ranges; throws DataError.
  void validate() const;

  /// Square-or-rectangular crop; the field map is carried along when present.
  LabeledRaster crop(std::size_t y0, std::size_t x0, std::size_t h, std::size_t w) const;

  ad::Tensor image_tensor() const;

  bool operator==(const LabeledRaster&) const = default;
};

}  // namespace votenet::data
