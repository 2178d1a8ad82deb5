#include "votenet/inference/overlay.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "votenet/data/png_io.hpp"

namespace votenet::infer {

std::vector<std::uint8_t> render_overlay(std::span<const double> image,
                                         std::span<const std::uint8_t> contour_labels,
                                         double alpha) {
  if (image.size() != contour_labels.size() * 3) {
    throw std::invalid_argument("render_overlay: image and labels differ in size");
  }
  std::vector<double> blended(image.begin(), image.end());
  for (std::size_t p = 0; p < contour_labels.size(); ++p) {
    if (contour_labels[p] == 0) continue;
    blended[p * 3] *= 1.0 - alpha;
    blended[p * 3 + 1] = blended[p * 3 + 1] * (1.0 - alpha) + alpha;
    blended[p * 3 + 2] *= 1.0 - alpha;
  }
  return data::quantize_image(blended);
}

void write_overlay_png(const std::filesystem::path& path, std::size_t height, std::size_t width,
                       std::span<const double> image, std::span<const std::uint8_t> contour_labels,
                       double alpha) {
  data::write_png_rgb8(path, height, width, render_overlay(image, contour_labels, alpha));
}

}  // namespace votenet::infer
