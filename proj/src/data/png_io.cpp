#include "votenet/data/png_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

namespace votenet::data {

namespace {

void write_png(const std::filesystem::path& path, std::size_t height, std::size_t width,
               png_uint_32 format, const void* buffer) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(width);
  img.height = static_cast<png_uint_32>(height);
  img.format = format;
  if (png_image_write_to_file(&img, path.c_str(), 0, buffer, 0, nullptr) == 0) {
    const std::string message = img.message;
    png_image_free(&img);
    throw DataError("cannot write " + path.string() + ": " + message);
  }
}

PngPixels read_png(const std::filesystem::path& path, png_uint_32 format, std::size_t channels,
                   bool sixteen_bit) {
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  if (png_image_begin_read_from_file(&img, path.c_str()) == 0) {
    const std::string message = img.message;
    png_image_free(&img);
    throw DataError("cannot read " + path.string() + ": " + message);
  }
  const bool file_is_linear = (img.format & PNG_FORMAT_FLAG_LINEAR) != 0;
  if (file_is_linear != sixteen_bit) {
    png_image_free(&img);
    throw DataError("unexpected bit depth in " + path.string());
  }
  img.format = format;
  PngPixels out;
  out.height = img.height;
  out.width = img.width;
  out.channels = channels;
  const std::size_t n = out.height * out.width * channels;
  if (sixteen_bit) {
    out.samples.resize(n);
    if (png_image_finish_read(&img, nullptr, out.samples.data(), 0, nullptr) == 0) {
      const std::string message = img.message;
      png_image_free(&img);
      throw DataError("malformed PNG " + path.string() + ": " + message);
    }
  } else {
    std::vector<std::uint8_t> bytes(n);
    if (png_image_finish_read(&img, nullptr, bytes.data(), 0, nullptr) == 0) {
      const std::string message = img.message;
      png_image_free(&img);
      throw DataError("malformed PNG " + path.string() + ": " + message);
    }
    out.samples.assign(bytes.begin(), bytes.end());
  }
  return out;
}

}  // namespace

void write_png_rgb8(const std::filesystem::path& path, std::size_t height, std::size_t width,
                    std::span<const std::uint8_t> rgb) {
  if (rgb.size() != height * width * 3) throw DataError("write_png_rgb8: buffer size mismatch");
  write_png(path, height, width, PNG_FORMAT_RGB, rgb.data());
}

void write_png_gray8(const std::filesystem::path& path, std::size_t height, std::size_t width,
                     std::span<const std::uint8_t> gray) {
  if (gray.size() != height * width) throw DataError("write_png_gray8: buffer size mismatch");
  write_png(path, height, width, PNG_FORMAT_GRAY, gray.data());
}

void write_png_gray16(const std::filesystem::path& path, std::size_t height, std::size_t width,
                      std::span<const std::uint16_t> gray) {
  if (gray.size() != height * width) throw DataError("write_png_gray16: buffer size mismatch");
  write_png(path, height, width, PNG_FORMAT_LINEAR_Y, gray.data());
}

PngPixels read_png8(const std::filesystem::path& path, std::size_t channels) {
  if (channels != 1 && channels != 3) throw DataError("read_png8: channels must be 1 or 3");
  return read_png(path, channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY, channels, false);
}

PngPixels read_png_gray16(const std::filesystem::path& path) {
  return read_png(path, PNG_FORMAT_LINEAR_Y, 1, true);
}

std::filesystem::path image_path(const std::filesystem::path& stem) {
  return std::filesystem::path(stem.string() + "_image.png");
}
std::filesystem::path mask_path(const std::filesystem::path& stem) {
  return std::filesystem::path(stem.string() + "_mask.png");
}
std::filesystem::path fields_path(const std::filesystem::path& stem) {
  return std::filesystem::path(stem.string() + "_fields.png");
}

std::vector<std::uint8_t> quantize_image(std::span<const double> image) {
  std::vector<std::uint8_t> bytes(image.size());
  for (std::size_t i = 0; i < image.size(); ++i) {
    bytes[i] = static_cast<std::uint8_t>(std::lround(std::clamp(image[i], 0.0, 1.0) * 255.0));
  }
  return bytes;
}

void write_raster(const LabeledRaster& raster, const std::filesystem::path& stem) {
  raster.validate();
  write_png_rgb8(image_path(stem), raster.height, raster.width, quantize_image(raster.image));
  std::vector<std::uint8_t> mask(raster.mask.size());
  std::transform(raster.mask.begin(), raster.mask.end(), mask.begin(),
                 [](std::uint8_t v) { return static_cast<std::uint8_t>(v != 0 ? 255 : 0); });
  write_png_gray8(mask_path(stem), raster.height, raster.width, mask);
  if (raster.has_fields()) {
    write_png_gray16(fields_path(stem), raster.height, raster.width, raster.fields);
  }
}

LabeledRaster read_raster(const std::filesystem::path& stem) {
  const PngPixels img = read_png8(image_path(stem), 3);
  const PngPixels msk = read_png8(mask_path(stem), 1);
  if (img.height != msk.height || img.width != msk.width) {
    throw DataError("dimension mismatch: image is " + std::to_string(img.height) + "x" +
                    std::to_string(img.width) + " but mask is " + std::to_string(msk.height) +
                    "x" + std::to_string(msk.width));
  }
  LabeledRaster out(img.height, img.width);
  for (std::size_t i = 0; i < img.samples.size(); ++i) out.image[i] = img.samples[i] / 255.0;
  for (std::size_t i = 0; i < msk.samples.size(); ++i) out.mask[i] = msk.samples[i] >= 128 ? 1 : 0;
  if (std::filesystem::exists(fields_path(stem))) {
    const PngPixels ids = read_png_gray16(fields_path(stem));
    if (ids.height != out.height || ids.width != out.width) {
      throw DataError("dimension mismatch between image and field map for " + stem.string());
    }
    out.fields.assign(ids.samples.begin(), ids.samples.end());
  }
  return out;
}

}  // namespace votenet::data
