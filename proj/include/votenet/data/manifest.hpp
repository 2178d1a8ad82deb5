#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "votenet/data/sampler.hpp"

namespace votenet::data {

/// One manifest line: tab-separated
/// patch-id, source-scene, center-x, center-y, rotation-deg, class, file path.
/// The file path names the patch image; the mask sits next to it (see
/// png_io.hpp). Paths are relative to the manifest's directory.
struct ManifestRow {
  std::string patch_id;
  std::string source_scene;
  long center_x = 0;
  long center_y = 0;
  double rotation_deg = 0.0;
  PatchClass patch_class = PatchClass::contour;
  std::string file_path;

  bool operator==(const ManifestRow&) const = default;
};

std::string format_manifest_row(const ManifestRow& row);
ManifestRow parse_manifest_row(const std::string& line);

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestRow>& rows);
std::vector<ManifestRow> read_manifest(const std::filesystem::path& path);

/// Patch stem (path without the "_image.png" suffix) for a manifest row.
std::filesystem::path patch_stem(const std::filesystem::path& manifest_dir, const ManifestRow& row);

}  // namespace votenet::data
