#include "votenet/cli/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "votenet/data/png_io.hpp"
#include "votenet/data/scene.hpp"

namespace votenet::cli {

namespace fs = std::filesystem;

std::uint64_t scene_seed(std::uint64_t run_seed, std::size_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(run_seed), static_cast<std::uint32_t>(run_seed >> 32),
                    static_cast<std::uint32_t>(index)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

namespace {

std::string scene_name(std::size_t index) { return "scene_" + std::to_string(index); }

void make_dirs(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw std::runtime_error("cannot create directory " + dir.string());
  }
}

}  // namespace

SplitSummary build_split(const RunConfig& config, const fs::path& dir, const std::string& split,
                         std::size_t first_scene, std::size_t scenes, std::size_t patches) {
  const fs::path root = dir / split;
  make_dirs(root / "scenes");
  make_dirs(root / "patches");

  std::vector<data::Patch> contour, background;
  for (std::size_t s = first_scene; s < first_scene + scenes; ++s) {
    data::SceneSpec spec = config.scene;
    spec.seed = scene_seed(config.seed, s);
    const data::LabeledRaster scene = data::generate_scene(spec);
    data::write_raster(scene, root / "scenes" / scene_name(s));
    for (auto& p : data::sample_contour_patches(scene, config.sampler, s)) contour.push_back(std::move(p));
    for (auto& p : data::sample_background_patches(scene, config.sampler, s)) {
      background.push_back(std::move(p));
    }
  }

  std::mt19937_64 rng(scene_seed(config.seed, 1000003 + first_scene));
  std::shuffle(contour.begin(), contour.end(), rng);
  std::shuffle(background.begin(), background.end(), rng);

  std::size_t want_contour = static_cast<std::size_t>(
      std::llround(config.dataset.contour_share * static_cast<double>(patches)));
  std::size_t want_background = patches - want_contour;
  if (want_contour > contour.size()) {
    want_background += want_contour - contour.size();
    want_contour = contour.size();
  }
  if (want_background > background.size()) {
    want_contour = std::min(contour.size(), want_contour + want_background - background.size());
    want_background = background.size();
  }

  std::vector<data::Patch> chosen;
  for (std::size_t i = 0; i < want_contour; ++i) chosen.push_back(std::move(contour[i]));
  for (std::size_t i = 0; i < want_background; ++i) chosen.push_back(std::move(background[i]));
  std::shuffle(chosen.begin(), chosen.end(), rng);

  std::vector<double> angles{0.0};
  angles.insert(angles.end(), config.sampler.rotation_set.begin(), config.sampler.rotation_set.end());
  std::uniform_int_distribution<std::size_t> pick(0, angles.size() - 1);

  std::vector<data::ManifestRow> rows;
  SplitSummary summary{split, scenes, want_contour, want_background, 0};
  for (data::Patch& p : chosen) {
    if (config.dataset.rotate) {
      const double angle = angles[pick(rng)];
      if (angle != 0.0) {
        p.raster = data::rotate_raster(p.raster, angle);
        p.rotation_deg = angle;
      }
    }
    const std::string file = "patches/" + p.id;
    data::write_raster(p.raster, root / file);
    rows.push_back({p.id, scene_name(p.source_scene), p.center_x, p.center_y, p.rotation_deg,
                    p.patch_class, data::image_path(file).string()});
  }
  data::write_manifest(root / "manifest.tsv", rows);
  summary.rows = rows.size();
  return summary;
}

LoadedSplit load_split(const fs::path& split_dir) {
  LoadedSplit out;
  const fs::path manifest = split_dir / "manifest.tsv";
  if (!fs::exists(manifest)) throw data::DataError("missing manifest " + manifest.string());
  out.rows = data::read_manifest(manifest);
  for (const data::ManifestRow& row : out.rows) {
    out.patches.push_back(data::read_raster(data::patch_stem(split_dir, row)));
  }
  return out;
}

std::vector<data::LabeledRaster> load_scenes(const fs::path& split_dir, std::size_t limit) {
  std::vector<std::pair<std::size_t, fs::path>> stems;
  const fs::path dir = split_dir / "scenes";
  if (!fs::is_directory(dir)) throw data::DataError("missing scene directory " + dir.string());
  const std::string suffix = "_image.png";
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("scene_", 0) != 0 || name.size() <= suffix.size() ||
        name.compare(name.size() - suffix.size(), suffix.size(), suffix) != 0) {
      continue;
    }
    const std::string stem = name.substr(0, name.size() - suffix.size());
    stems.emplace_back(std::stoul(stem.substr(6)), dir / stem);
  }
  std::sort(stems.begin(), stems.end());
  if (limit > 0 && stems.size() > limit) stems.resize(limit);
  std::vector<data::LabeledRaster> scenes;
  for (const auto& [index, stem] : stems) scenes.push_back(data::read_raster(stem));
  return scenes;
}

}  // namespace votenet::cli
