#include "pixelforge/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <spdlog/spdlog.h>

namespace pixelforge {
namespace {

double world_size(std::uint32_t z) { return std::ldexp(1.0, static_cast<int>(z)); }

void check_zoom(std::uint32_t z) {
  if (z > 30) throw ArgumentError("zoom level " + std::to_string(z) + " exceeds 30");
}

// Rows of the tile whose pixel centers fall inside the ring under the even-odd rule.
void fill_ring(const std::vector<PixelXY>& pts, BinaryMask& out) {
  const auto width = static_cast<long>(out.width());
  const auto height = static_cast<long>(out.height());
  double vmin = pts.front().v, vmax = pts.front().v;
  for (const auto& p : pts) {
    vmin = std::min(vmin, p.v);
    vmax = std::max(vmax, p.v);
  }
  const long r0 = std::max(0L, static_cast<long>(std::floor(vmin - 0.5)));
  const long r1 = std::min(height - 1, static_cast<long>(std::ceil(vmax - 0.5)));
  std::vector<double> xs;
  for (long r = r0; r <= r1; ++r) {
    const double y = static_cast<double>(r) + 0.5;
    xs.clear();
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      const PixelXY& a = pts[i];
      const PixelXY& b = pts[i + 1];
      // Half-open in v so a vertex shared by two edges is counted once.
      if ((a.v <= y && y < b.v) || (b.v <= y && y < a.v)) {
        const double t = (y - a.v) / (b.v - a.v);
        xs.push_back(a.u + t * (b.u - a.u));
      }
    }
    std::sort(xs.begin(), xs.end());
    for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
      // Columns whose center c + 0.5 lies in [xs[k], xs[k+1]).
      long c0 = static_cast<long>(std::ceil(xs[k] - 0.5));
      long c1 = static_cast<long>(std::ceil(xs[k + 1] - 0.5));
      c0 = std::max(c0, 0L);
      c1 = std::min(c1, width);
      for (long c = c0; c < c1; ++c) {
        const auto idx = static_cast<std::size_t>(r * width + c);
        out.set_at(idx, !out.at(idx));
      }
    }
  }
}

std::vector<PixelXY> project_ring(const Ring& ring, const TileSpec& t) {
  std::vector<PixelXY> pts;
  pts.reserve(ring.size());
  for (const auto& p : ring) pts.push_back(project_to_pixel(p, t));
  return pts;
}

double shoelace(const std::vector<PixelXY>& pts) {
  double a = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) a += pts[i].u * pts[i + 1].v - pts[i + 1].u * pts[i].v;
  return 0.5 * a;
}

}  // namespace

void validate(const GeoPoint& p) {
  if (!std::isfinite(p.lon) || !std::isfinite(p.lat)) throw RangeError("non-finite coordinate");
  if (p.lon < -180.0 || p.lon > 180.0) throw RangeError("longitude " + std::to_string(p.lon) + " outside [-180, 180]");
  if (p.lat < -kMaxMercatorLat || p.lat > kMaxMercatorLat) {
    throw RangeError("latitude " + std::to_string(p.lat) + " outside the Web-Mercator limit");
  }
}

void validate_ring(const Ring& ring) {
  if (ring.size() < 4) throw ArgumentError("ring needs at least 4 points");
  const auto& a = ring.front();
  const auto& b = ring.back();
  if (a.lon != b.lon || a.lat != b.lat) throw ArgumentError("ring is not closed");
  for (const auto& p : ring) validate(p);
}

void validate(const PolygonGeometry& g) {
  validate_ring(g.exterior);
  for (const auto& h : g.holes) validate_ring(h);
}

void validate(const TileSpec& t) {
  check_zoom(t.z);
  const auto n = static_cast<std::uint64_t>(1) << t.z;
  if (t.x >= n || t.y >= n) throw ArgumentError("tile index outside [0, 2^z)");
  if (t.px == 0 || t.py == 0) throw ArgumentError("tile pixel size must be positive");
}

MercatorXY lonlat_to_mercator(const GeoPoint& p, std::uint32_t z) {
  validate(p);
  check_zoom(z);
  const double n = world_size(z);
  const double phi = p.lat * std::numbers::pi / 180.0;
  const double x = (p.lon + 180.0) / 360.0 * n;
  const double y = (1.0 - std::log(std::tan(phi) + 1.0 / std::cos(phi)) / std::numbers::pi) / 2.0 * n;
  return {x, y};
}

GeoPoint mercator_to_lonlat(const MercatorXY& m, std::uint32_t z) {
  const double n = world_size(z);
  const double lon = m.x / n * 360.0 - 180.0;
  const double lat = std::atan(std::sinh(std::numbers::pi * (1.0 - 2.0 * m.y / n))) * 180.0 / std::numbers::pi;
  return {lon, lat};
}

TileIndex lonlat_to_tile(const GeoPoint& p, std::uint32_t z) {
  const MercatorXY m = lonlat_to_mercator(p, z);
  const double last = world_size(z) - 1.0;
  const double x = std::clamp(std::floor(m.x), 0.0, last);
  const double y = std::clamp(std::floor(m.y), 0.0, last);
  return {static_cast<std::uint32_t>(x), static_cast<std::uint32_t>(y)};
}

GeoBounds tile_bounds(const TileSpec& t) {
  validate(t);
  const GeoPoint nw = mercator_to_lonlat({static_cast<double>(t.x), static_cast<double>(t.y)}, t.z);
  const GeoPoint se = mercator_to_lonlat({static_cast<double>(t.x) + 1.0, static_cast<double>(t.y) + 1.0}, t.z);
  return {nw.lon, se.lat, se.lon, nw.lat};
}

PixelXY project_to_pixel(const GeoPoint& p, const TileSpec& t) {
  const MercatorXY m = lonlat_to_mercator(p, t.z);
  return {(m.x - static_cast<double>(t.x)) * t.px, (m.y - static_cast<double>(t.y)) * t.py};
}

GeoPoint pixel_to_lonlat(const PixelXY& px, const TileSpec& t) {
  return mercator_to_lonlat({static_cast<double>(t.x) + px.u / t.px, static_cast<double>(t.y) + px.v / t.py}, t.z);
}

double projected_area(const Ring& ring, const TileSpec& t) { return shoelace(project_ring(ring, t)); }

BinaryMask rasterize_polygon(const PolygonGeometry& g, const TileSpec& t) {
  validate(t);
  validate(g);
  BinaryMask mask(t.px, t.py);
  const auto exterior = project_ring(g.exterior, t);
  if (shoelace(exterior) == 0.0) {
    spdlog::warn("degenerate exterior ring (zero projected area); skipped");
    return mask;
  }
  fill_ring(exterior, mask);
  for (const auto& hole : g.holes) {
    const auto pts = project_ring(hole, t);
    if (shoelace(pts) == 0.0) {
      spdlog::warn("degenerate hole ring (zero projected area); skipped");
      continue;
    }
    BinaryMask hm(t.px, t.py);
    fill_ring(pts, hm);
    for (std::size_t i = 0; i < mask.size(); ++i) {
      if (hm.at(i)) mask.set_at(i, false);
    }
  }
  return mask;
}

}  // namespace pixelforge
