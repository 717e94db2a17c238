#include "pixelforge/manifest.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "pixelforge/bytes.hpp"
#include "pixelforge/errors.hpp"
#include "pixelforge/rng.hpp"

namespace pixelforge {

std::string_view to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "train";
}

Split parse_split(std::string_view s) {
  if (s == "train") return Split::Train;
  if (s == "val") return Split::Val;
  if (s == "test") return Split::Test;
  throw DataError("unknown split '" + std::string(s) + "'");
}

Split assign_split(const TileSpec& t, std::uint32_t block_tiles) {
  if (block_tiles == 0) throw ArgumentError("split block size must be positive");
  const std::uint64_t bx = t.x / block_tiles, by = t.y / block_tiles;
  const std::uint64_t h = mix64(mix64(mix64(t.z) ^ bx) ^ (by * 0x9e3779b97f4a7c15ULL));
  const double u = static_cast<double>(h >> 11) * 0x1.0p-53;
  if (u < 0.6) return Split::Train;
  if (u < 0.8) return Split::Val;
  return Split::Test;
}

std::string ManifestRecord::to_json_line() const {
  nlohmann::ordered_json j;
  j["tile"] = {{"z", tile.z}, {"x", tile.x}, {"y", tile.y}};
  if (coverage) j["coverage"] = *coverage;
  if (n_instances) j["n_instances"] = *n_instances;
  if (grid_path) j["grid_path"] = *grid_path;
  if (image_path) j["image_path"] = *image_path;
  if (split) j["split"] = to_string(*split);
  if (features_path) j["features_path"] = *features_path;
  if (n_features) j["n_features"] = *n_features;
  return j.dump();
}

ManifestRecord ManifestRecord::from_json_line(std::string_view line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("manifest line: ") + e.what());
  }
  ManifestRecord r;
  try {
    const auto& t = j.at("tile");
    r.tile.z = t.at("z").get<std::uint32_t>();
    r.tile.x = t.at("x").get<std::uint32_t>();
    r.tile.y = t.at("y").get<std::uint32_t>();
    if (j.contains("coverage")) {
      r.coverage = j["coverage"].get<double>();
      if (*r.coverage < 0.0 || *r.coverage > 1.0) throw DataError("manifest coverage outside [0, 1]");
    }
    if (j.contains("n_instances")) r.n_instances = j["n_instances"].get<std::size_t>();
    if (j.contains("grid_path")) r.grid_path = j["grid_path"].get<std::string>();
    if (j.contains("image_path")) r.image_path = j["image_path"].get<std::string>();
    if (j.contains("split")) r.split = parse_split(j["split"].get<std::string>());
    if (j.contains("features_path")) r.features_path = j["features_path"].get<std::string>();
    if (j.contains("n_features")) r.n_features = j["n_features"].get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("manifest record: ") + e.what());
  }
  return r;
}

std::filesystem::path Manifest::resolve(const std::string& p) const {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : directory / path;
}

std::vector<const ManifestRecord*> Manifest::with_split(Split s) const {
  std::vector<const ManifestRecord*> out;
  for (const auto& r : records) {
    if (r.split && *r.split == s) out.push_back(&r);
  }
  return out;
}

Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest " + path.string());
  Manifest m;
  m.directory = path.parent_path();
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    m.records.push_back(ManifestRecord::from_json_line(line));
  }
  return m;
}

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestRecord>& records) {
  std::string text;
  for (const auto& r : records) text += r.to_json_line() + "\n";
  write_text_file(path, text);
}

}  // namespace pixelforge
