#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace votenet::infer {

/// RGB8 rendering of `image` (H x W x 3 in [0, 1]) with contour pixels
/// alpha-blended towards pure green.
std::vector<std::uint8_t> render_overlay(std::span<const double> image,
                                         std::span<const std::uint8_t> contour_labels,
                                         double alpha = 0.5);

void write_overlay_png(const std::filesystem::path& path, std::size_t height, std::size_t width,
                       std::span<const double> image, std::span<const std::uint8_t> contour_labels,
                       double alpha = 0.5);

}  // namespace votenet::infer
