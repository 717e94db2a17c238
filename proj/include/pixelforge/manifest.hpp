#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pixelforge/geometry.hpp"

namespace pixelforge {

enum class Split { Train, Val, Test };

std::string_view to_string(Split s);
Split parse_split(std::string_view s);

inline constexpr std::uint32_t kSplitBlockTiles = 4;

// 60/20/20 assignment from a hash of the spatial block (z, x / block, y / block).
Split assign_split(const TileSpec& t, std::uint32_t block_tiles = kSplitBlockTiles);

// One JSONL line. Ingest records carry features_path/n_features; rasterized
// records carry coverage, n_instances, grid_path and split.
struct ManifestRecord {
  TileSpec tile;
  std::optional<double> coverage;
  std::optional<std::size_t> n_instances;
  std::optional<std::string> grid_path;
  std::optional<std::string> image_path;
  std::optional<Split> split;
  std::optional<std::string> features_path;
  std::optional<std::size_t> n_features;

  std::string to_json_line() const;
  static ManifestRecord from_json_line(std::string_view line);
};

struct Manifest {
  std::filesystem::path directory;  // relative paths resolve against this
  std::vector<ManifestRecord> records;

  std::filesystem::path resolve(const std::string& p) const;
  std::vector<const ManifestRecord*> with_split(Split s) const;
};

Manifest read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const std::vector<ManifestRecord>& records);

}  // namespace pixelforge
