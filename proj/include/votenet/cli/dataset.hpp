#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "votenet/cli/config.hpp"
#include "votenet/data/manifest.hpp"
#include "votenet/data/raster.hpp"

namespace votenet::cli {

/// On-disk layout of a synthesized dataset:
///   <root>/<split>/scenes/scene_<n>_{image,mask,fields}.png
///   <root>/<split>/patches/<patch-id>_{image,mask}.png
///   <root>/<split>/manifest.tsv
/// with split in {train, eval}. Train and eval scenes never overlap.
struct SplitSummary {
  std::string split;
  std::size_t scenes = 0;
  std::size_t contour_patches = 0;
  std::size_t background_patches = 0;
  std::size_t rows = 0;
};

/// Seed of scene `index`; scene indices run across both splits.
std::uint64_t scene_seed(std::uint64_t run_seed, std::size_t index);

/// Generates the scenes [first_scene, first_scene + scenes), samples
/// contour/background patches from them, selects `patches` of them with the
/// configured contour share, optionally rotates each, and writes everything
/// below `dir`.
SplitSummary build_split(const RunConfig& config, const std::filesystem::path& dir,
                         const std::string& split, std::size_t first_scene, std::size_t scenes,
                         std::size_t patches);

struct LoadedSplit {
  std::vector<data::ManifestRow> rows;
  std::vector<data::LabeledRaster> patches;
};

LoadedSplit load_split(const std::filesystem::path& split_dir);
/// Every scene raster of a split, in index order.
std::vector<data::LabeledRaster> load_scenes(const std::filesystem::path& split_dir,
                                             std::size_t limit = 0);

}  // namespace votenet::cli
