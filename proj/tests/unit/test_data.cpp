#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <map>
#include <set>

#include "../support/oracles.hpp"
#include "votenet/data/manifest.hpp"
#include "votenet/data/png_io.hpp"
#include "votenet/data/sampler.hpp"
#include "votenet/data/scene.hpp"

using namespace votenet;
using data::LabeledRaster;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
  const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
  fs::path dir = fs::temp_directory_path() /
                 (std::string("votenet_data_") + info->test_suite_name() + "_" + info->name());
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// One field covering the whole raster; contour pixels are the columns x < split.
LabeledRaster half_plane_field(std::size_t n, std::size_t split) {
  LabeledRaster r(n, n);
  r.fields.assign(n * n, 1);
  for (std::size_t y = 0; y < n; ++y)
    for (std::size_t x = 0; x < split; ++x) r.mask[y * n + x] = 1;
  return r;
}

double window_fraction(const LabeledRaster& r, std::size_t y0, std::size_t x0, std::size_t size) {
  std::size_t count = 0;
  for (std::size_t y = y0; y < y0 + size; ++y)
    for (std::size_t x = x0; x < x0 + size; ++x) count += r.mask[y * r.width + x];
  return static_cast<double>(count) / static_cast<double>(size * size);
}

LabeledRaster disk_patch(std::size_t n, double radius) {
  LabeledRaster r(n, n);
  const double c = (static_cast<double>(n) - 1) / 2;
  for (std::size_t y = 0; y < n; ++y) {
    for (std::size_t x = 0; x < n; ++x) {
      const double d = std::hypot(static_cast<double>(x) - c, static_cast<double>(y) - c);
      r.mask[y * n + x] = d <= radius ? 1 : 0;
      for (std::size_t ch = 0; ch < 3; ++ch)
        r.image[(y * n + x) * 3 + ch] = static_cast<double>((x * 7 + y * 3 + ch * 11) % 64) / 63.0;
    }
  }
  return r;
}

}  // namespace

TEST(Scene, ZeroFieldsGivesEmptyMask) {
  data::SceneSpec spec;
  spec.field_count = 0;
  const LabeledRaster r = data::generate_scene(spec);
  EXPECT_EQ(r.contour_pixels(), 0u);
  for (auto id : r.fields) EXPECT_EQ(id, 0);
}

TEST(Scene, SameSeedIsBitIdentical) {
  data::SceneSpec spec;
  spec.seed = 42;
  EXPECT_EQ(data::generate_scene(spec), data::generate_scene(spec));
  data::SceneSpec other = spec;
  other.seed = 43;
  EXPECT_FALSE(data::generate_scene(spec) == data::generate_scene(other));
}

TEST(Scene, MaskMarksWholeLeveeFields) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    data::SceneSpec spec;
    spec.seed = seed;
    const LabeledRaster r = data::generate_scene(spec);
    r.validate();
    std::map<std::uint16_t, std::pair<std::size_t, std::size_t>> area;  // id -> (pixels, contour)
    for (std::size_t p = 0; p < r.pixels(); ++p) {
      if (r.fields[p] == 0) {
        EXPECT_EQ(r.mask[p], 0);
        continue;
      }
      auto& a = area[r.fields[p]];
      ++a.first;
      a.second += r.mask[p];
    }
    EXPECT_EQ(area.size(), spec.field_count);
    std::size_t levee_area = 0;
    for (const auto& [id, a] : area) {
      EXPECT_TRUE(a.second == 0 || a.second == a.first) << "field " << id << " partially marked";
      if (a.second == a.first) levee_area += a.first;
    }
    EXPECT_EQ(r.contour_pixels(), levee_area);
  }
}

TEST(Scene, FieldsAreFourConnected) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    data::SceneSpec spec;
    spec.seed = seed;
    const LabeledRaster r = data::generate_scene(spec);
    std::vector<long> labels(r.fields.begin(), r.fields.end());
    int count = 0;
    const auto comp = oracle::flood_fill(labels, static_cast<int>(r.height), static_cast<int>(r.width),
                                         &count);
    std::map<long, std::set<int>> parts;
    for (std::size_t p = 0; p < labels.size(); ++p)
      if (labels[p] != 0) parts[labels[p]].insert(comp[p]);
    for (const auto& [id, set] : parts) EXPECT_EQ(set.size(), 1u) << "field " << id;
  }
}

TEST(Scene, RejectsImpossiblePlacement) {
  data::SceneSpec spec;
  spec.field_count = 40;
  spec.max_placement_attempts = 20;
  EXPECT_THROW(data::generate_scene(spec), data::DataError);
}

TEST(SamplerConfig, Validation) {
  data::SamplerConfig c;
  EXPECT_NO_THROW(c.validate());
  c.angle_step = 70;
  EXPECT_THROW(c.validate(), data::DataError);
  c = {};
  c.keep_threshold = 1.0;
  EXPECT_THROW(c.validate(), data::DataError);
  c = {};
  c.r_fractions = {0.5};
  EXPECT_THROW(c.validate(), data::DataError);
  EXPECT_EQ(data::SamplerConfig::default_rotation_set().size(), 36u);
}

TEST(ContourSampler, CompassPointsAtNinetyDegrees) {
  const LabeledRaster r = half_plane_field(128, 128);
  data::SamplerConfig c;
  c.patch_size = 32;
  c.angle_step = 90;
  c.r_fractions = {0.25};
  const auto cand = data::contour_candidates(r, c);
  ASSERT_EQ(cand.size(), 4u);
  const double cx = 63.5, cy = 63.5, rad = 32.0;
  const double expect[4][2] = {{cx + rad, cy}, {cx, cy + rad}, {cx - rad, cy}, {cx, cy - rad}};
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_DOUBLE_EQ(cand[i].field_center_x, cx);
    EXPECT_DOUBLE_EQ(cand[i].radius, rad);
    EXPECT_NEAR(cand[i].circle_x, expect[i][0], 1e-9);
    EXPECT_NEAR(cand[i].circle_y, expect[i][1], 1e-9);
  }
}

TEST(ContourSampler, WholeRasterFieldKeepsEveryCandidate) {
  const LabeledRaster r = half_plane_field(128, 128);
  data::SamplerConfig c;
  c.patch_size = 32;
  const auto cand = data::contour_candidates(r, c);
  EXPECT_EQ(cand.size(), 36u);
  for (const auto& k : cand) EXPECT_TRUE(k.kept);
  EXPECT_EQ(data::sample_contour_patches(r, c).size(), 36u);
}

TEST(ContourSampler, KeepsExactlyTheCandidatesMeetingThreshold) {
  const LabeledRaster r = half_plane_field(128, 70);
  data::SamplerConfig c;
  c.patch_size = 32;
  c.r_fractions = {0.3};
  const auto cand = data::contour_candidates(r, c);
  ASSERT_EQ(cand.size(), 12u);
  std::size_t kept = 0;
  for (const auto& k : cand) {
    const double f = window_fraction(r, k.origin_y, k.origin_x, 32);
    EXPECT_EQ(k.kept, f >= 0.35);
    kept += f >= 0.35;
  }
  EXPECT_EQ(kept, 7u);
  const auto patches = data::sample_contour_patches(r, c, 3);
  ASSERT_EQ(patches.size(), 7u);
  for (const auto& p : patches) {
    EXPECT_GE(static_cast<double>(p.raster.contour_pixels()) / (32.0 * 32.0), 0.35);
    EXPECT_EQ(p.raster.height, 32u);
    EXPECT_EQ(p.source_scene, 3u);
  }
}

TEST(ContourSampler, CentersOnCircleAndPatchesMeetThreshold) {
  data::SceneSpec spec;
  spec.seed = 11;
  const LabeledRaster r = data::generate_scene(spec);
  const data::SamplerConfig c;
  const auto cand = data::contour_candidates(r, c);
  ASSERT_FALSE(cand.empty());
  const long half = static_cast<long>(c.patch_size / 2);
  for (const auto& k : cand) {
    const double dist = std::hypot(k.circle_x - k.field_center_x, k.circle_y - k.field_center_y);
    EXPECT_NEAR(dist, k.radius, 1e-9);
    const long ox = std::lround(k.circle_x) - half, oy = std::lround(k.circle_y) - half;
    const bool shifted = ox != static_cast<long>(k.origin_x) || oy != static_cast<long>(k.origin_y);
    if (!shifted) {
      EXPECT_LE(std::abs(static_cast<double>(k.origin_x + c.patch_size / 2) - k.circle_x), 1.0);
      EXPECT_LE(std::abs(static_cast<double>(k.origin_y + c.patch_size / 2) - k.circle_y), 1.0);
    }
    EXPECT_LE(k.origin_x + c.patch_size, r.width);
    EXPECT_LE(k.origin_y + c.patch_size, r.height);
    EXPECT_EQ(k.kept, window_fraction(r, k.origin_y, k.origin_x, c.patch_size) >= c.keep_threshold);
  }
  const auto a = data::sample_contour_patches(r, c), b = data::sample_contour_patches(r, c);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].raster, b[i].raster);
}

TEST(ContourSampler, Errors) {
  data::SamplerConfig c;
  c.patch_size = 256;
  EXPECT_THROW(data::contour_candidates(half_plane_field(128, 100), c), data::DataError);
  LabeledRaster no_fields(128, 128);
  EXPECT_THROW(data::contour_candidates(no_fields, {}), data::DataError);
}

TEST(BackgroundSampler, GridCountOnEmptyRaster) {
  data::SamplerConfig c;
  EXPECT_EQ(data::sample_background_patches(LabeledRaster(256, 256), c).size(), 16u);
  LabeledRaster full(256, 256);
  std::fill(full.mask.begin(), full.mask.end(), 1);
  EXPECT_TRUE(data::sample_background_patches(full, c).empty());
}

TEST(BackgroundSampler, MatchesEnumerationOracle) {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    data::SceneSpec spec;
    spec.seed = seed;
    const LabeledRaster r = data::generate_scene(spec);
    data::SamplerConfig c;
    c.background_stride = 32;
    std::set<std::pair<std::size_t, std::size_t>> expect;
    for (std::size_t y = 0; y + 64 <= r.height; y += 32)
      for (std::size_t x = 0; x + 64 <= r.width; x += 32)
        if (window_fraction(r, y, x, 64) == 0.0) expect.insert({y, x});
    std::set<std::pair<std::size_t, std::size_t>> got;
    for (const auto& p : data::sample_background_patches(r, c)) {
      got.insert({p.origin_y, p.origin_x});
      EXPECT_EQ(p.raster.contour_pixels(), 0u);
      EXPECT_EQ(p.patch_class, data::PatchClass::background);
    }
    EXPECT_EQ(got, expect);
  }
}

TEST(Rotation, DefaultSetYieldsThirtySevenPatches) {
  data::Patch p;
  p.id = "x";
  p.raster = disk_patch(32, 10);
  const auto out = data::augment_rotations(p, data::SamplerConfig::default_rotation_set());
  ASSERT_EQ(out.size(), 37u);
  EXPECT_EQ(out[0].raster, p.raster);
  EXPECT_EQ(out[36].rotation_deg, 180.0);
  EXPECT_EQ(out[1].id, "x-r5");
}

TEST(Rotation, HalfTurnFlipsAndIsInvolution) {
  LabeledRaster r = disk_patch(16, 5);
  for (std::size_t i = 0; i < r.mask.size(); ++i) r.mask[i] = (i * 37 % 11) < 4;
  const LabeledRaster once = data::rotate_raster(r, 180);
  const std::size_t n = 16;
  for (std::size_t y = 0; y < n; ++y) {
    for (std::size_t x = 0; x < n; ++x) {
      const std::size_t src = (n - 1 - y) * n + (n - 1 - x);
      EXPECT_EQ(once.mask[y * n + x], r.mask[src]);
      EXPECT_NEAR(once.image[(y * n + x) * 3], r.image[src * 3], 1e-12);
    }
  }
  EXPECT_EQ(data::rotate_raster(once, 180).mask, r.mask);
}

TEST(Rotation, DiskAreaPreservedWithinTwoPercent) {
  const LabeledRaster r = disk_patch(64, 20);
  const double area = static_cast<double>(r.contour_pixels());
  for (double deg : data::SamplerConfig::default_rotation_set()) {
    const double rotated = static_cast<double>(data::rotate_raster(r, deg).contour_pixels());
    EXPECT_LE(std::abs(rotated - area) / area, 0.02) << deg << " degrees";
  }
}

TEST(Rotation, RejectsNonSquare) {
  data::Patch p;
  p.raster = LabeledRaster(8, 10);
  EXPECT_THROW(data::augment_rotations(p, {90}), data::DataError);
}

TEST(RasterIo, RoundTripIsLosslessForMasks) {
  const fs::path dir = scratch_dir();
  data::SceneSpec spec;
  spec.seed = 3;
  const LabeledRaster r = data::generate_scene(spec);
  data::write_raster(r, dir / "scene");
  const LabeledRaster back = data::read_raster(dir / "scene");
  EXPECT_EQ(back.mask, r.mask);
  EXPECT_EQ(back.fields, r.fields);
  double worst = 0.0;
  for (std::size_t i = 0; i < r.image.size(); ++i) worst = std::max(worst, std::abs(back.image[i] - r.image[i]));
  EXPECT_LE(worst, 1.0 / 255.0);
}

TEST(RasterIo, DimensionMismatchIsReported) {
  const fs::path dir = scratch_dir();
  const fs::path stem = dir / "bad";
  data::write_png_rgb8(data::image_path(stem), 8, 8, std::vector<std::uint8_t>(8 * 8 * 3, 0));
  data::write_png_gray8(data::mask_path(stem), 8, 9, std::vector<std::uint8_t>(8 * 9, 0));
  try {
    data::read_raster(stem);
    FAIL() << "expected DataError";
  } catch (const data::DataError& e) {
    EXPECT_NE(std::string(e.what()).find("dimension mismatch"), std::string::npos);
  }
  EXPECT_THROW(data::read_raster(dir / "missing"), data::DataError);
}

TEST(Manifest, RowsRoundTrip) {
  const fs::path dir = scratch_dir();
  std::vector<data::ManifestRow> rows{
      {"s0-c0", "scene_0", 40, 17, 0.0, data::PatchClass::contour, "patches/s0-c0_image.png"},
      {"s0-b1-r35", "scene_0", 96, 160, 35.0, data::PatchClass::background,
       "patches/s0-b1-r35_image.png"}};
  data::write_manifest(dir / "manifest.tsv", rows);
  EXPECT_EQ(data::read_manifest(dir / "manifest.tsv"), rows);
  EXPECT_EQ(data::parse_manifest_row(data::format_manifest_row(rows[1])), rows[1]);
  EXPECT_THROW(data::parse_manifest_row("a\tb\tc"), data::DataError);
  EXPECT_EQ(data::patch_stem(dir, rows[0]), dir / "patches" / "s0-c0");
}
