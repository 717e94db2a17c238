#include "doctest.h"
#include "oracles.hpp"
#include "pixelforge/errors.hpp"
#include "pixelforge/geometry.hpp"

using namespace pixelforge;

TEST_CASE("lonlat_to_tile matches reference tiles") {
  CHECK(lonlat_to_tile({-74.0060, 40.7128}, 16) == TileIndex{19295, 24640});
  CHECK(lonlat_to_tile({0.0, 0.0}, 1) == TileIndex{1, 1});
  CHECK(lonlat_to_tile({-180.0, kMaxMercatorLat}, 0) == TileIndex{0, 0});
  // east edge and southern limit clamp into the last tile
  CHECK(lonlat_to_tile({180.0, -kMaxMercatorLat}, 3) == TileIndex{7, 7});
}

TEST_CASE("out-of-range coordinates are rejected") {
  CHECK_THROWS_AS(lonlat_to_tile({0.0, 86.0}, 4), RangeError);
  CHECK_THROWS_AS(lonlat_to_tile({181.0, 0.0}, 4), RangeError);
  CHECK_THROWS_AS(validate(TileSpec{2, 4, 0, 512, 512}), ArgumentError);
}

TEST_CASE("mercator round trip") {
  Rng rng(7);
  for (int i = 0; i < 1000; ++i) {
    const GeoPoint p{rng.uniform(-180.0, 180.0), rng.uniform(-85.0, 85.0)};
    const GeoPoint q = mercator_to_lonlat(lonlat_to_mercator(p, 16), 16);
    CHECK(q.lon == doctest::Approx(p.lon).epsilon(1e-12));
    CHECK(q.lat == doctest::Approx(p.lat).epsilon(1e-12));
  }
}

TEST_CASE("tile bounds contain their own corner and tile") {
  const TileSpec t{16, 19295, 24640, 512, 512};
  const GeoBounds b = tile_bounds(t);
  CHECK(b.west < b.east);
  CHECK(b.south < b.north);
  CHECK(lonlat_to_tile({b.west, b.north}, 16) == TileIndex{t.x, t.y});
  const PixelXY nw = project_to_pixel({b.west, b.north}, t);
  CHECK(nw.u == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(nw.v == doctest::Approx(0.0).epsilon(1e-9));
  const PixelXY se = project_to_pixel({b.east, b.south}, t);
  CHECK(se.u == doctest::Approx(512.0));
  CHECK(se.v == doctest::Approx(512.0));
}

TEST_CASE("pixel projection round trip") {
  const TileSpec t{16, 19295, 24640, 512, 512};
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const PixelXY p{rng.uniform(0.0, 512.0), rng.uniform(0.0, 512.0)};
    const PixelXY q = project_to_pixel(pixel_to_lonlat(p, t), t);
    CHECK(std::abs(q.u - p.u) < 1e-6);
    CHECK(std::abs(q.v - p.v) < 1e-6);
  }
}

namespace {

PolygonGeometry pixel_rect(const TileSpec& t, double u0, double v0, double u1, double v1) {
  PolygonGeometry g;
  for (auto [u, v] : {std::pair{u0, v0}, {u1, v0}, {u1, v1}, {u0, v1}, {u0, v0}}) {
    g.exterior.push_back(pixel_to_lonlat({u, v}, t));
  }
  return g;
}

}  // namespace

TEST_CASE("axis-aligned rectangle fills exactly its pixel centers") {
  const TileSpec t{16, 19295, 24640, 64, 64};
  const BinaryMask m = rasterize_polygon(pixel_rect(t, 10.0, 20.0, 30.0, 25.0), t);
  CHECK(mask_area(m) == 20 * 5);
  CHECK(m.get(20, 10));
  CHECK(m.get(24, 29));
  CHECK_FALSE(m.get(25, 10));
  CHECK_FALSE(m.get(20, 30));
}

TEST_CASE("holes are subtracted") {
  const TileSpec t{16, 19295, 24640, 64, 64};
  PolygonGeometry g = pixel_rect(t, 0.0, 0.0, 40.0, 40.0);
  g.holes.push_back(pixel_rect(t, 10.0, 10.0, 20.0, 20.0).exterior);
  const BinaryMask m = rasterize_polygon(g, t);
  CHECK(mask_area(m) == 1600 - 100);
  CHECK_FALSE(m.get(15, 15));
}

TEST_CASE("degenerate ring contributes nothing") {
  const TileSpec t{16, 19295, 24640, 64, 64};
  PolygonGeometry g;
  for (double u : {5.0, 10.0, 20.0, 5.0}) g.exterior.push_back(pixel_to_lonlat({u, u}, t));
  CHECK(mask_area(rasterize_polygon(g, t)) == 0);
}

TEST_CASE("rasterized area tracks the shoelace area") {
  const TileSpec t{16, 19295, 24640, 512, 512};
  Rng rng(derive_seed(kDefaultSeed, 5));
  for (int i = 0; i < 100; ++i) {
    const auto poly = oracle::random_convex_polygon(rng, t);
    const double area = static_cast<double>(mask_area(rasterize_polygon(poly.geometry, t)));
    CHECK(std::abs(area - poly.area) <= 0.02 * poly.area);
    CHECK(std::abs(projected_area(poly.geometry.exterior, t)) == doctest::Approx(poly.area).epsilon(1e-6));
  }
}
