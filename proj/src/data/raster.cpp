#include "votenet/data/raster.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace votenet::data {

LabeledRaster::LabeledRaster(std::size_t h, std::size_t w)
    : height(h), width(w), image(h * w * 3, 0.0), mask(h * w, 0) {}

std::size_t LabeledRaster::contour_pixels() const {
  return static_cast<std::size_t>(std::count_if(mask.begin(), mask.end(),
                                                [](std::uint8_t v) { return v != 0; }));
}

void LabeledRaster::validate() const {
  if (image.size() != height * width * 3) {
    throw DataError("raster: image holds " + std::to_string(image.size()) + " values, expected " +
                    std::to_string(height * width * 3));
  }
  if (mask.size() != height * width) {
    throw DataError("raster: mask holds " + std::to_string(mask.size()) + " values, expected " +
                    std::to_string(height * width));
  }
  if (!fields.empty() && fields.size() != height * width) {
    throw DataError("raster: field map size does not match the image");
  }
  for (double v : image) {
    if (!(v >= 0.0 && v <= 1.0)) throw DataError("raster: image value outside [0, 1]");
  }
  for (std::uint8_t v : mask) {
    if (v > 1) throw DataError("raster: mask must be binary");
  }
}

LabeledRaster LabeledRaster::crop(std::size_t y0, std::size_t x0, std::size_t h,
                                  std::size_t w) const {
  if (y0 + h > height || x0 + w > width) {
    throw DataError("raster: crop window exceeds raster bounds");
  }
  LabeledRaster out(h, w);
  if (has_fields()) out.fields.assign(h * w, 0);
  for (std::size_t y = 0; y < h; ++y) {
    const std::size_t src = (y0 + y) * width + x0;
    std::copy_n(image.begin() + static_cast<std::ptrdiff_t>(src * 3), w * 3,
                out.image.begin() + static_cast<std::ptrdiff_t>(y * w * 3));
    std::copy_n(mask.begin() + static_cast<std::ptrdiff_t>(src), w,
                out.mask.begin() + static_cast<std::ptrdiff_t>(y * w));
    if (has_fields()) {
      std::copy_n(fields.begin() + static_cast<std::ptrdiff_t>(src), w,
                  out.fields.begin() + static_cast<std::ptrdiff_t>(y * w));
    }
  }
  return out;
}

ad::Tensor LabeledRaster::image_tensor() const { return ad::Tensor({height, width, 3}, image); }

}  // namespace votenet::data
