#pragma once

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

#include "pixelforge/embed.hpp"
#include "pixelforge/geometry.hpp"
#include "pixelforge/manifest.hpp"
#include "pixelforge/raster.hpp"

namespace pixelforge {

// ---- GeoJSON -----------------------------------------------------------------

struct GeoJsonFeatures {
  std::vector<TaggedPolygon> polygons;  // one entry per Polygon / MultiPolygon part
  std::size_t skipped_non_polygon = 0;  // Point, LineString and their Multi* variants
  std::size_t skipped_invalid = 0;      // polygons with bad rings or coordinates
};

// Parses a FeatureCollection (or a single Feature). Properties become tag atoms;
// keys starting with '@' and null values are ignored. Throws DataError on malformed JSON.
GeoJsonFeatures parse_geojson(std::string_view text);

// Serializes polygons back to a FeatureCollection (tags as properties).
std::string to_geojson(const std::vector<TaggedPolygon>& polygons);

// Tiles at zoom z overlapped by the polygon's bounding box (half-open tile bounds).
std::vector<TileIndex> tiles_for_polygon(const PolygonGeometry& g, std::uint32_t z);

// ---- images ------------------------------------------------------------------

// Deterministic RGB color in [0.1, 0.9]^3 keyed by the rendered composition.
std::array<double, 3> composition_color(const Composition& c);

// Synthetic-image mode: composition colors per pixel plus seeded Gaussian noise,
// clamped to [0, 1].
Image synthesize_image(const CompositionGrid& g, std::uint64_t seed, double noise = 0.05);

// ---- training examples -------------------------------------------------------

struct InstanceMask {
  CompositionId id = kEmptyComposition;
  BinaryMask mask;  // at feature resolution
};

struct TrainingExample {
  TileSpec tile;
  CompositionGrid grid;
  Image image;
  std::vector<InstanceMask> instances;
};

// Loads the grid and its image (PNG when the record names one, synthetic
// otherwise) and pools every instance mask to (grid_h, grid_w).
TrainingExample load_example(const Manifest& m, const ManifestRecord& r, std::size_t grid_h, std::size_t grid_w,
                             std::uint64_t seed);

std::uint64_t tile_key(const TileSpec& t);

// ---- planted dataset ---------------------------------------------------------

struct PlantedOptions {
  std::size_t compositions = 32;
  std::size_t tiles = 256;
  std::uint32_t tile_px = 64;
  std::uint32_t cell_px = 8;  // region edges snap to this many pixels
  std::uint32_t zoom = 16;
  std::uint32_t origin_x = 19200;
  std::uint32_t origin_y = 24576;
  std::uint64_t seed = kDefaultSeed;
  double noise = 0.04;
};

// The compositions used by make_planted_dataset, in palette order.
std::vector<Composition> planted_compositions(std::size_t n);

// Writes grids (.pxfg), PNG images with well-separated per-composition colors and
// a manifest. Every tile sits in its own split block. Returns the manifest path.
std::filesystem::path make_planted_dataset(const std::filesystem::path& out_dir, const PlantedOptions& opt);

}  // namespace pixelforge
