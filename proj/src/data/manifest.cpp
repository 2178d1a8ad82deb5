#include "votenet/data/manifest.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace votenet::data {

namespace {

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.15g", v);
  return buf;
}

const std::string kImageSuffix = "_image.png";

}  // namespace

std::string format_manifest_row(const ManifestRow& row) {
  std::ostringstream out;
  out << row.patch_id << '\t' << row.source_scene << '\t' << row.center_x << '\t' << row.center_y
      << '\t' << format_number(row.rotation_deg) << '\t' << to_string(row.patch_class) << '\t'
      << row.file_path;
  return out.str();
}

ManifestRow parse_manifest_row(const std::string& line) {
  std::vector<std::string> cols;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, '\t')) cols.push_back(cell);
  if (cols.size() != 7) {
    throw DataError("manifest: expected 7 tab-separated columns, got " + std::to_string(cols.size()) +
                    " in '" + line + "'");
  }
  try {
    ManifestRow row;
    row.patch_id = cols[0];
    row.source_scene = cols[1];
    row.center_x = std::stol(cols[2]);
    row.center_y = std::stol(cols[3]);
    row.rotation_deg = std::stod(cols[4]);
    row.patch_class = parse_patch_class(cols[5]);
    row.file_path = cols[6];
    return row;
  } catch (const std::logic_error&) {
    throw DataError("manifest: malformed row '" + line + "'");
  }
}

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestRow>& rows) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write manifest " + path.string());
  for (const ManifestRow& row : rows) out << format_manifest_row(row) << '\n';
  if (!out) throw DataError("error writing manifest " + path.string());
}

std::vector<ManifestRow> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read manifest " + path.string());
  std::vector<ManifestRow> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    rows.push_back(parse_manifest_row(line));
  }
  return rows;
}

std::filesystem::path patch_stem(const std::filesystem::path& manifest_dir, const ManifestRow& row) {
  std::string file = row.file_path;
  if (file.size() < kImageSuffix.size() ||
      file.compare(file.size() - kImageSuffix.size(), kImageSuffix.size(), kImageSuffix) != 0) {
    throw DataError("manifest: patch path '" + file + "' does not end in " + kImageSuffix);
  }
  file.resize(file.size() - kImageSuffix.size());
  return manifest_dir / file;
}

}  // namespace votenet::data
