#include "votenet/data/scene.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

namespace votenet::data {

void SceneSpec::validate() const {
  if (height < 16 || width < 16) throw DataError("scene: size must be at least 16x16");
  if (levee_fraction < 0.0 || levee_fraction > 1.0) throw DataError("scene: levee_fraction outside [0, 1]");
  if (min_field_size < 8 || min_field_size > max_field_size) throw DataError("scene: invalid field size range");
  if (max_field_size > std::min(height, width)) throw DataError("scene: fields larger than the scene");
  if (!(min_stripe_period > 1.0) || min_stripe_period > max_stripe_period) {
    throw DataError("scene: invalid stripe period range");
  }
  if (noise_level < 0.0) throw DataError("scene: negative noise level");
}

namespace {

using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

std::size_t uniform_index(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

struct Point {
  double x, y;
};

bool inside(const std::vector<Point>& poly, double x, double y) {
  bool in = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const Point& a = poly[i];
    const Point& b = poly[j];
    if ((a.y > y) != (b.y > y) && x < (b.x - a.x) * (y - a.y) / (b.y - a.y) + a.x) in = !in;
  }
  return in;
}

// Keeps the largest 4-connected component of `pixels` (flat indices).
std::vector<std::size_t> largest_component(const std::vector<std::size_t>& pixels, std::size_t h,
                                           std::size_t w) {
  std::vector<std::int32_t> label(h * w, -1);
  for (std::size_t p : pixels) label[p] = 0;
  std::vector<std::size_t> best;
  std::vector<std::size_t> stack;
  std::int32_t next = 1;
  for (std::size_t seed : pixels) {
    if (label[seed] != 0) continue;
    std::vector<std::size_t> comp;
    label[seed] = next;
    stack.push_back(seed);
    while (!stack.empty()) {
      const std::size_t p = stack.back();
      stack.pop_back();
      comp.push_back(p);
      const std::size_t y = p / w, x = p % w;
      const std::array<std::pair<bool, std::size_t>, 4> nbrs{{{y > 0, p - w},
                                                              {y + 1 < h, p + w},
                                                              {x > 0, p - 1},
                                                              {x + 1 < w, p + 1}}};
      for (const auto& [ok, q] : nbrs) {
        if (ok && label[q] == 0) {
          label[q] = next;
          stack.push_back(q);
        }
      }
    }
    ++next;
    if (comp.size() > best.size()) best = std::move(comp);
  }
  std::sort(best.begin(), best.end());
  return best;
}

// Smooth noise in [-1, 1] from a coarse lattice with bilinear interpolation.
class ValueNoise {
 public:
  ValueNoise(Rng& rng, std::size_t h, std::size_t w, double cell)
      : cell_(cell), gw_(static_cast<std::size_t>(std::ceil(w / cell)) + 2),
        gh_(static_cast<std::size_t>(std::ceil(h / cell)) + 2), lattice_(gw_ * gh_) {
    for (double& v : lattice_) v = uniform(rng, -1.0, 1.0);
  }

  double at(double y, double x) const {
    const double fy = y / cell_, fx = x / cell_;
    const auto iy = static_cast<std::size_t>(fy), ix = static_cast<std::size_t>(fx);
    const double ty = fy - static_cast<double>(iy), tx = fx - static_cast<double>(ix);
    auto g = [&](std::size_t r, std::size_t c) { return lattice_[r * gw_ + c]; };
    const double top = g(iy, ix) * (1 - tx) + g(iy, ix + 1) * tx;
    const double bottom = g(iy + 1, ix) * (1 - tx) + g(iy + 1, ix + 1) * tx;
    return top * (1 - ty) + bottom * ty;
  }

 private:
  double cell_;
  std::size_t gw_, gh_;
  std::vector<double> lattice_;
};

struct FieldStyle {
  bool levee = false;
  std::array<double, 3> color{};
  double period = 8.0;
  double angle = 0.0;
  double bend = 0.0;
  double bend_wavelength = 40.0;
  double ridge_width = 1.2;
};

FieldStyle draw_style(Rng& rng, bool levee, const SceneSpec& spec) {
  FieldStyle s;
  s.levee = levee;
  if (levee) {
    s.color = {uniform(rng, 0.28, 0.42), uniform(rng, 0.40, 0.52), uniform(rng, 0.30, 0.44)};
  } else {
    s.color = {uniform(rng, 0.40, 0.60), uniform(rng, 0.45, 0.60), uniform(rng, 0.25, 0.40)};
  }
  s.period = uniform(rng, spec.min_stripe_period, spec.max_stripe_period);
  s.angle = uniform(rng, 0.0, std::numbers::pi);
  s.bend = levee ? uniform(rng, 3.0, 9.0) : 0.0;
  s.bend_wavelength = uniform(rng, 30.0, 70.0);
  s.ridge_width = uniform(rng, 1.0, 1.8);
  return s;
}

}  // namespace

LabeledRaster generate_scene(const SceneSpec& spec) {
  spec.validate();
  const std::size_t h = spec.height, w = spec.width;
  Rng rng(spec.seed);
  LabeledRaster raster(h, w);
  raster.fields.assign(h * w, 0);

  // Fields first claim a margin so distinct fields never touch.
  std::vector<std::uint8_t> occupied(h * w, 0);
  const std::size_t levee_count =
      static_cast<std::size_t>(std::lround(spec.levee_fraction * static_cast<double>(spec.field_count)));
  std::vector<bool> is_levee(spec.field_count, false);
  for (std::size_t i = 0; i < levee_count; ++i) is_levee[i] = true;
  std::shuffle(is_levee.begin(), is_levee.end(), rng);

  std::vector<FieldStyle> styles;
  for (std::size_t f = 0; f < spec.field_count; ++f) {
    bool placed = false;
    for (std::size_t attempt = 0; attempt < spec.max_placement_attempts && !placed; ++attempt) {
      const double size_x = uniform(rng, static_cast<double>(spec.min_field_size),
                                    static_cast<double>(spec.max_field_size));
      const double size_y = uniform(rng, static_cast<double>(spec.min_field_size),
                                    static_cast<double>(spec.max_field_size));
      const double cx = uniform(rng, size_x / 2, static_cast<double>(w) - size_x / 2);
      const double cy = uniform(rng, size_y / 2, static_cast<double>(h) - size_y / 2);
      const double rot = uniform(rng, 0.0, 2 * std::numbers::pi);
      const std::size_t corners = uniform_index(rng, 5, 8);
      std::vector<Point> poly;
      for (std::size_t c = 0; c < corners; ++c) {
        const double t = 2 * std::numbers::pi * (static_cast<double>(c) + uniform(rng, -0.2, 0.2)) /
                         static_cast<double>(corners);
        const double r = uniform(rng, 0.82, 1.0);
        const double ex = r * size_x / 2 * std::cos(t), ey = r * size_y / 2 * std::sin(t);
        poly.push_back({cx + ex * std::cos(rot) - ey * std::sin(rot),
                        cy + ex * std::sin(rot) + ey * std::cos(rot)});
      }
      std::vector<std::size_t> pixels;
      bool collides = false;
      for (std::size_t y = 0; y < h && !collides; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
          if (!inside(poly, static_cast<double>(x) + 0.5, static_cast<double>(y) + 0.5)) continue;
          if (occupied[y * w + x] != 0) {
            collides = true;
            break;
          }
          pixels.push_back(y * w + x);
        }
      }
      if (collides) continue;
      pixels = largest_component(pixels, h, w);
      if (pixels.size() < spec.min_field_size * spec.min_field_size / 4) continue;

      const auto id = static_cast<std::uint16_t>(f + 1);
      for (std::size_t p : pixels) {
        raster.fields[p] = id;
        raster.mask[p] = is_levee[f] ? 1 : 0;
        const std::ptrdiff_t y = static_cast<std::ptrdiff_t>(p / w), x = static_cast<std::ptrdiff_t>(p % w);
        for (std::ptrdiff_t dy = -2; dy <= 2; ++dy) {
          for (std::ptrdiff_t dx = -2; dx <= 2; ++dx) {
            const std::ptrdiff_t yy = y + dy, xx = x + dx;
            if (yy >= 0 && xx >= 0 && yy < static_cast<std::ptrdiff_t>(h) && xx < static_cast<std::ptrdiff_t>(w)) {
              occupied[static_cast<std::size_t>(yy) * w + static_cast<std::size_t>(xx)] = 1;
            }
          }
        }
      }
      styles.push_back(draw_style(rng, is_levee[f], spec));
      placed = true;
    }
    if (!placed) {
      throw DataError("scene: could not place field " + std::to_string(f + 1) + " of " +
                      std::to_string(spec.field_count) + " without overlap after " +
                      std::to_string(spec.max_placement_attempts) + " attempts");
    }
  }

  const ValueNoise coarse(rng, h, w, 24.0);
  const ValueNoise fine(rng, h, w, 6.0);
  std::normal_distribution<double> grain(0.0, 1.0);
  const std::array<double, 3> soil{0.46, 0.41, 0.32};
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const std::size_t p = y * w + x;
      const double fy = static_cast<double>(y), fx = static_cast<double>(x);
      std::array<double, 3> rgb{};
      const std::uint16_t id = raster.fields[p];
      if (id == 0) {
        const double n = 0.08 * coarse.at(fy, fx) + 0.05 * fine.at(fy, fx);
        for (std::size_t c = 0; c < 3; ++c) rgb[c] = soil[c] + n;
      } else {
        const FieldStyle& s = styles[id - 1];
        const double u0 = fx * std::cos(s.angle) + fy * std::sin(s.angle);
        const double v0 = -fx * std::sin(s.angle) + fy * std::cos(s.angle);
        const double shade = 0.03 * coarse.at(fy, fx);
        if (s.levee) {
          const double u = u0 + s.bend * std::sin(2 * std::numbers::pi * v0 / s.bend_wavelength);
          const double phase = u / s.period - std::floor(u / s.period);
          const double dist = std::min(phase, 1.0 - phase) * s.period;
          const double ridge = dist < s.ridge_width ? 1.0 : 0.0;
          rgb = {s.color[0] + 0.10 * ridge, s.color[1] - 0.12 * ridge, s.color[2] - 0.14 * ridge};
        } else {
          const double rows = 0.03 * std::sin(2 * std::numbers::pi * u0 / (s.period * 0.5));
          rgb = {s.color[0] + rows, s.color[1] + rows, s.color[2] + rows};
        }
        for (double& v : rgb) v += shade;
      }
      for (std::size_t c = 0; c < 3; ++c) {
        raster.image[p * 3 + c] = std::clamp(rgb[c] + spec.noise_level * grain(rng), 0.0, 1.0);
      }
    }
  }
  return raster;
}

}  // namespace votenet::data
