#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "votenet/data/raster.hpp"

namespace votenet::data {

struct PngPixels {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;  // 1 or 3
  std::vector<std::uint16_t> samples;
};

void write_png_rgb8(const std::filesystem::path& path, std::size_t height, std::size_t width,
                    std::span<const std::uint8_t> rgb);
void write_png_gray8(const std::filesystem::path& path, std::size_t height, std::size_t width,
                     std::span<const std::uint8_t> gray);
void write_png_gray16(const std::filesystem::path& path, std::size_t height, std::size_t width,
                      std::span<const std::uint16_t> gray);

/// Reads an 8-bit RGB (channels = 3) or gray (channels = 1) PNG.
PngPixels read_png8(const std::filesystem::path& path, std::size_t channels);
/// Reads a 16-bit single-channel PNG.
PngPixels read_png_gray16(const std::filesystem::path& path);

/// Files written for a raster stem: "<stem>_image.png" (RGB, 8 bit),
/// "<stem>_mask.png" (gray, 0/255) and, when a field map is present,
/// "<stem>_fields.png" (gray, 16 bit).
std::filesystem::path image_path(const std::filesystem::path& stem);
std::filesystem::path mask_path(const std::filesystem::path& stem);
std::filesystem::path fields_path(const std::filesystem::path& stem);

void write_raster(const LabeledRaster& raster, const std::filesystem::path& stem);
/// Throws DataError on unreadable files or when image and mask sizes differ.
LabeledRaster read_raster(const std::filesystem::path& stem);

std::vector<std::uint8_t> quantize_image(std::span<const double> image);

}  // namespace votenet::data
