#include "votenet/data/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

namespace votenet::data {

std::vector<double> SamplerConfig::default_rotation_set() {
  std::vector<double> out;
  for (int deg = 5; deg <= 180; deg += 5) out.push_back(deg);
  return out;
}

void SamplerConfig::validate() const {
  if (r_fractions.empty()) throw DataError("sampler: r_fractions is empty");
  for (double r : r_fractions) {
    if (!(r > 0.0 && r < 0.5)) throw DataError("sampler: r_fraction must lie in (0, 0.5)");
  }
  if (!(angle_step > 0.0)) throw DataError("sampler: angle step must be positive");
  const double steps = 360.0 / angle_step;
  if (std::abs(steps - std::round(steps)) > 1e-9) {
    throw DataError("sampler: angle step must divide 360 evenly");
  }
  if (!(keep_threshold > 0.0 && keep_threshold < 1.0)) {
    throw DataError("sampler: keep_threshold must lie in (0, 1)");
  }
  if (patch_size == 0 || background_stride == 0) throw DataError("sampler: sizes must be positive");
  if (background_tolerance < 0.0 || background_tolerance >= 1.0) {
    throw DataError("sampler: background tolerance must lie in [0, 1)");
  }
}

std::string to_string(PatchClass c) { return c == PatchClass::contour ? "contour" : "background"; }

PatchClass parse_patch_class(const std::string& text) {
  if (text == "contour") return PatchClass::contour;
  if (text == "background") return PatchClass::background;
  throw DataError("unknown patch class '" + text + "'");
}

namespace {

double window_contour_fraction(const LabeledRaster& r, std::size_t y0, std::size_t x0,
                               std::size_t size) {
  std::size_t count = 0;
  for (std::size_t y = y0; y < y0 + size; ++y)
    for (std::size_t x = x0; x < x0 + size; ++x) count += r.mask[y * r.width + x] != 0 ? 1 : 0;
  return static_cast<double>(count) / static_cast<double>(size * size);
}

std::size_t shift_inward(long start, std::size_t size, std::size_t extent) {
  const long hi = static_cast<long>(extent - size);
  return static_cast<std::size_t>(std::clamp(start, 0L, hi));
}

struct FieldStats {
  double sum_x = 0, sum_y = 0;
  std::size_t count = 0, contour = 0;
  std::size_t min_x = SIZE_MAX, max_x = 0, min_y = SIZE_MAX, max_y = 0;
};

void require_fit(const LabeledRaster& r, const SamplerConfig& c) {
  if (c.patch_size > r.height || c.patch_size > r.width) {
    throw DataError("sampler: patch size " + std::to_string(c.patch_size) + " larger than raster " +
                    std::to_string(r.height) + "x" + std::to_string(r.width));
  }
}

}  // namespace

std::vector<ContourCandidate> contour_candidates(const LabeledRaster& raster,
                                                 const SamplerConfig& config) {
  config.validate();
  raster.validate();
  require_fit(raster, config);
  if (!raster.has_fields()) throw DataError("sampler: raster has no field-instance map");

  std::map<std::uint16_t, FieldStats> stats;
  for (std::size_t y = 0; y < raster.height; ++y) {
    for (std::size_t x = 0; x < raster.width; ++x) {
      const std::size_t p = y * raster.width + x;
      const std::uint16_t id = raster.fields[p];
      if (id == 0) continue;
      FieldStats& s = stats[id];
      s.sum_x += static_cast<double>(x);
      s.sum_y += static_cast<double>(y);
      ++s.count;
      s.contour += raster.mask[p] != 0 ? 1 : 0;
      s.min_x = std::min(s.min_x, x);
      s.max_x = std::max(s.max_x, x);
      s.min_y = std::min(s.min_y, y);
      s.max_y = std::max(s.max_y, y);
    }
  }

  const std::size_t size = config.patch_size;
  const auto steps = static_cast<std::size_t>(std::lround(360.0 / config.angle_step));
  std::vector<ContourCandidate> out;
  for (const auto& [id, s] : stats) {
    if (2 * s.contour <= s.count) continue;  // not a levee field
    const double cx = s.sum_x / static_cast<double>(s.count);
    const double cy = s.sum_y / static_cast<double>(s.count);
    const double extent = static_cast<double>(std::min(s.max_x - s.min_x + 1, s.max_y - s.min_y + 1));
    for (double fraction : config.r_fractions) {
      const double radius = fraction * extent;
      for (std::size_t k = 0; k < steps; ++k) {
        const double deg = static_cast<double>(k) * config.angle_step;
        const double rad = deg * std::numbers::pi / 180.0;
        ContourCandidate c;
        c.field = id;
        c.field_center_x = cx;
        c.field_center_y = cy;
        c.radius = radius;
        c.angle_deg = deg;
        c.circle_x = cx + radius * std::cos(rad);
        c.circle_y = cy + radius * std::sin(rad);
        const long px = std::lround(c.circle_x), py = std::lround(c.circle_y);
        const long half = static_cast<long>(size / 2);
        c.origin_x = shift_inward(px - half, size, raster.width);
        c.origin_y = shift_inward(py - half, size, raster.height);
        c.contour_fraction = window_contour_fraction(raster, c.origin_y, c.origin_x, size);
        c.kept = c.contour_fraction >= config.keep_threshold;
        out.push_back(c);
      }
    }
  }
  return out;
}

std::vector<Patch> sample_contour_patches(const LabeledRaster& raster, const SamplerConfig& config,
                                          std::size_t source_scene) {
  std::vector<Patch> out;
  std::size_t index = 0;
  for (const ContourCandidate& c : contour_candidates(raster, config)) {
    if (!c.kept) continue;
    Patch p;
    p.id = "s" + std::to_string(source_scene) + "-c" + std::to_string(index++);
    p.source_scene = source_scene;
    p.origin_x = c.origin_x;
    p.origin_y = c.origin_y;
    p.center_x = static_cast<long>(c.origin_x + config.patch_size / 2);
    p.center_y = static_cast<long>(c.origin_y + config.patch_size / 2);
    p.patch_class = PatchClass::contour;
    p.raster = raster.crop(c.origin_y, c.origin_x, config.patch_size, config.patch_size);
    p.raster.fields.clear();
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<Patch> sample_background_patches(const LabeledRaster& raster,
                                             const SamplerConfig& config,
                                             std::size_t source_scene) {
  config.validate();
  raster.validate();
  require_fit(raster, config);
  const std::size_t size = config.patch_size;
  std::vector<Patch> out;
  std::size_t index = 0;
  for (std::size_t y0 = 0; y0 + size <= raster.height; y0 += config.background_stride) {
    for (std::size_t x0 = 0; x0 + size <= raster.width; x0 += config.background_stride) {
      if (window_contour_fraction(raster, y0, x0, size) > config.background_tolerance) continue;
      Patch p;
      p.id = "s" + std::to_string(source_scene) + "-b" + std::to_string(index++);
      p.source_scene = source_scene;
      p.origin_x = x0;
      p.origin_y = y0;
      p.center_x = static_cast<long>(x0 + size / 2);
      p.center_y = static_cast<long>(y0 + size / 2);
      p.patch_class = PatchClass::background;
      p.raster = raster.crop(y0, x0, size, size);
      p.raster.fields.clear();
      out.push_back(std::move(p));
    }
  }
  return out;
}

namespace {

double reflect(double v, std::size_t n) {
  if (n == 1) return 0.0;
  const double period = 2.0 * static_cast<double>(n - 1);
  v = std::fmod(v, period);
  if (v < 0) v += period;
  if (v > static_cast<double>(n - 1)) v = period - v;
  return v;
}

double snap(double v) { return std::abs(v) < 1e-12 ? 0.0 : v; }

}  // namespace

LabeledRaster rotate_raster(const LabeledRaster& patch, double degrees) {
  if (patch.height != patch.width) throw DataError("rotation requires a square patch");
  const std::size_t n = patch.height;
  const double rad = degrees * std::numbers::pi / 180.0;
  const double cs = snap(std::cos(rad)), sn = snap(std::sin(rad));
  const double c = (static_cast<double>(n) - 1.0) / 2.0;
  LabeledRaster out(n, n);
  for (std::size_t y = 0; y < n; ++y) {
    for (std::size_t x = 0; x < n; ++x) {
      const double dx = static_cast<double>(x) - c, dy = static_cast<double>(y) - c;
      const double sx = reflect(c + cs * dx + sn * dy, n);
      const double sy = reflect(c - sn * dx + cs * dy, n);

      const auto mx = static_cast<std::size_t>(std::min(std::lround(sx), static_cast<long>(n - 1)));
      const auto my = static_cast<std::size_t>(std::min(std::lround(sy), static_cast<long>(n - 1)));
      out.mask[y * n + x] = patch.mask[my * n + mx];

      const auto x0 = static_cast<std::size_t>(std::floor(sx));
      const auto y0 = static_cast<std::size_t>(std::floor(sy));
      const std::size_t x1 = std::min(x0 + 1, n - 1), y1 = std::min(y0 + 1, n - 1);
      const double tx = sx - static_cast<double>(x0), ty = sy - static_cast<double>(y0);
      for (std::size_t ch = 0; ch < 3; ++ch) {
        auto px = [&](std::size_t yy, std::size_t xx) { return patch.image[(yy * n + xx) * 3 + ch]; };
        const double top = px(y0, x0) * (1 - tx) + px(y0, x1) * tx;
        const double bottom = px(y1, x0) * (1 - tx) + px(y1, x1) * tx;
        out.image[(y * n + x) * 3 + ch] = std::clamp(top * (1 - ty) + bottom * ty, 0.0, 1.0);
      }
    }
  }
  return out;
}

std::vector<Patch> augment_rotations(const Patch& patch, const std::vector<double>& rotation_set) {
  if (patch.raster.height != patch.raster.width) throw DataError("rotation requires a square patch");
  std::vector<Patch> out{patch};
  for (double deg : rotation_set) {
    Patch p = patch;
    p.rotation_deg = deg;
    p.raster = rotate_raster(patch.raster, deg);
    p.id = patch.id + "-r" + std::to_string(static_cast<long>(std::lround(deg)));
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace votenet::data
