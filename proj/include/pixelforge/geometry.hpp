#pragma once

#include <cstdint>
#include <vector>

#include "pixelforge/mask.hpp"

namespace pixelforge {

// Latitude bound of the square Web-Mercator world, atan(sinh(pi)) in degrees.
inline constexpr double kMaxMercatorLat = 85.051128779806592;

struct GeoPoint {
  double lon = 0.0;
  double lat = 0.0;
};

// Throws RangeError when lon is outside [-180, 180] or lat outside the Mercator limit.
// lon = 180 is tolerated so that east tile edges can be expressed.
void validate(const GeoPoint& p);

using Ring = std::vector<GeoPoint>;

struct PolygonGeometry {
  Ring exterior;
  std::vector<Ring> holes;
};

// Closed ring with at least four points; throws ArgumentError otherwise.
void validate_ring(const Ring& ring);
void validate(const PolygonGeometry& g);

struct TileSpec {
  std::uint32_t z = 16;
  std::uint32_t x = 0;
  std::uint32_t y = 0;
  std::uint32_t px = 512;
  std::uint32_t py = 512;

  bool operator==(const TileSpec&) const = default;
};

void validate(const TileSpec& t);

struct TileIndex {
  std::uint32_t x = 0;
  std::uint32_t y = 0;
  bool operator==(const TileIndex&) const = default;
};

// Geographic bounds of a tile. Interpreted half-open: [west, east) x [south, north).
struct GeoBounds {
  double west = 0.0;
  double south = 0.0;
  double east = 0.0;
  double north = 0.0;
};

// Fractional Web-Mercator tile coordinates at zoom z (x east, y south).
struct MercatorXY {
  double x = 0.0;
  double y = 0.0;
};

MercatorXY lonlat_to_mercator(const GeoPoint& p, std::uint32_t z);
GeoPoint mercator_to_lonlat(const MercatorXY& m, std::uint32_t z);

TileIndex lonlat_to_tile(const GeoPoint& p, std::uint32_t z);
GeoBounds tile_bounds(const TileSpec& t);

struct PixelXY {
  double u = 0.0;
  double v = 0.0;
};

// Affine map of Mercator coordinates into tile pixel space; v grows southward.
PixelXY project_to_pixel(const GeoPoint& p, const TileSpec& t);
// Inverse of project_to_pixel.
GeoPoint pixel_to_lonlat(const PixelXY& px, const TileSpec& t);

// Signed shoelace area of a projected ring in px^2.
double projected_area(const Ring& ring, const TileSpec& t);

// Even-odd scanline fill sampled at pixel centers; holes subtract.
// Degenerate rings (zero projected area) contribute nothing and log a warning.
BinaryMask rasterize_polygon(const PolygonGeometry& g, const TileSpec& t);

}  // namespace pixelforge
