#include "pixelforge/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "json.hpp"
#include "pixelforge/errors.hpp"
#include "pixelforge/grid_io.hpp"
#include "pixelforge/image_io.hpp"

namespace pixelforge {

// ---- GeoJSON -----------------------------------------------------------------

namespace {

using json = nlohmann::json;

Ring parse_ring(const json& coords) {
  Ring ring;
  for (const auto& pt : coords) {
    if (!pt.is_array() || pt.size() < 2) throw ArgumentError("position needs [lon, lat]");
    ring.push_back({pt[0].get<double>(), pt[1].get<double>()});
  }
  if (!ring.empty() && (ring.front().lon != ring.back().lon || ring.front().lat != ring.back().lat)) {
    ring.push_back(ring.front());
  }
  validate_ring(ring);
  return ring;
}

PolygonGeometry parse_polygon(const json& coords) {
  if (!coords.is_array() || coords.empty()) throw ArgumentError("polygon needs at least one ring");
  PolygonGeometry g;
  g.exterior = parse_ring(coords[0]);
  for (std::size_t i = 1; i < coords.size(); ++i) g.holes.push_back(parse_ring(coords[i]));
  return g;
}

Composition properties_to_composition(const json& props) {
  std::vector<TagAtom> atoms;
  if (!props.is_object()) return {};
  for (const auto& [key, value] : props.items()) {
    if (key.empty() || key[0] == '@') continue;
    std::string text;
    if (value.is_string()) {
      text = value.get<std::string>();
    } else if (value.is_boolean()) {
      text = value.get<bool>() ? "yes" : "no";
    } else if (value.is_number()) {
      text = value.dump();
    } else {
      continue;
    }
    try {
      atoms.push_back(make_tag(key, text));
    } catch (const ArgumentError&) {
      // blank key after normalization
    }
  }
  return normalize_composition(std::move(atoms));
}

void add_feature(const json& feature, GeoJsonFeatures& out) {
  if (!feature.is_object() || !feature.contains("geometry") || feature["geometry"].is_null()) {
    ++out.skipped_invalid;
    return;
  }
  const json& geom = feature["geometry"];
  const std::string type = geom.value("type", "");
  const Composition comp = properties_to_composition(feature.value("properties", json::object()));
  try {
    if (type == "Polygon") {
      out.polygons.push_back({parse_polygon(geom.at("coordinates")), comp});
    } else if (type == "MultiPolygon") {
      for (const auto& part : geom.at("coordinates")) out.polygons.push_back({parse_polygon(part), comp});
    } else if (type == "Point" || type == "MultiPoint" || type == "LineString" || type == "MultiLineString") {
      ++out.skipped_non_polygon;
    } else {
      ++out.skipped_invalid;
    }
  } catch (const std::exception& e) {
    spdlog::debug("skipping invalid polygon: {}", e.what());
    ++out.skipped_invalid;
  }
}

}  // namespace

GeoJsonFeatures parse_geojson(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed GeoJSON: ") + e.what());
  }
  GeoJsonFeatures out;
  const std::string type = doc.is_object() ? doc.value("type", "") : "";
  if (type == "FeatureCollection") {
    if (!doc.contains("features") || !doc["features"].is_array()) throw DataError("FeatureCollection lacks features");
    for (const auto& f : doc["features"]) add_feature(f, out);
  } else if (type == "Feature") {
    add_feature(doc, out);
  } else {
    throw DataError("GeoJSON root must be a FeatureCollection or Feature");
  }
  return out;
}

std::string to_geojson(const std::vector<TaggedPolygon>& polygons) {
  nlohmann::ordered_json fc;
  fc["type"] = "FeatureCollection";
  fc["features"] = nlohmann::ordered_json::array();
  auto ring_json = [](const Ring& r) {
    nlohmann::ordered_json a = nlohmann::ordered_json::array();
    for (const auto& p : r) a.push_back({p.lon, p.lat});
    return a;
  };
  for (const auto& poly : polygons) {
    nlohmann::ordered_json props = nlohmann::ordered_json::object();
    for (const auto& a : poly.composition.atoms()) props[a.key()] = a.value();
    nlohmann::ordered_json coords = nlohmann::ordered_json::array();
    coords.push_back(ring_json(poly.geometry.exterior));
    for (const auto& h : poly.geometry.holes) coords.push_back(ring_json(h));
    fc["features"].push_back({{"type", "Feature"},
                              {"properties", props},
                              {"geometry", {{"type", "Polygon"}, {"coordinates", coords}}}});
  }
  return fc.dump();
}

std::vector<TileIndex> tiles_for_polygon(const PolygonGeometry& g, std::uint32_t z) {
  double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
  for (const auto& p : g.exterior) {
    const MercatorXY m = lonlat_to_mercator(p, z);
    xmin = std::min(xmin, m.x);
    xmax = std::max(xmax, m.x);
    ymin = std::min(ymin, m.y);
    ymax = std::max(ymax, m.y);
  }
  const double last = std::ldexp(1.0, static_cast<int>(z)) - 1.0;
  // Half-open tiles: a polygon reaching exactly to an edge does not enter the next tile.
  const auto x0 = static_cast<std::uint32_t>(std::clamp(std::floor(xmin), 0.0, last));
  const auto x1 = static_cast<std::uint32_t>(std::clamp(std::max(std::ceil(xmax) - 1.0, std::floor(xmin)), 0.0, last));
  const auto y0 = static_cast<std::uint32_t>(std::clamp(std::floor(ymin), 0.0, last));
  const auto y1 = static_cast<std::uint32_t>(std::clamp(std::max(std::ceil(ymax) - 1.0, std::floor(ymin)), 0.0, last));
  std::vector<TileIndex> out;
  for (std::uint32_t y = y0; y <= y1; ++y) {
    for (std::uint32_t x = x0; x <= x1; ++x) out.push_back({x, y});
  }
  return out;
}

// ---- images ------------------------------------------------------------------

std::array<double, 3> composition_color(const Composition& c) {
  const std::string s = render_sentence(c);
  std::uint64_t h = mix64(fnv1a64(s.data(), s.size()));
  std::array<double, 3> rgb{};
  for (auto& v : rgb) {
    h = mix64(h);
    v = 0.1 + 0.8 * static_cast<double>(h >> 11) * 0x1.0p-53;
  }
  return rgb;
}

Image synthesize_image(const CompositionGrid& g, std::uint64_t seed, double noise) {
  Image img(3, g.height, g.width);
  std::map<CompositionId, std::array<double, 3>> colors;
  for (const auto& [id, comp] : g.intern.entries()) colors.emplace(id, composition_color(comp));
  Rng rng(seed);
  for (std::size_t r = 0; r < g.height; ++r) {
    for (std::size_t c = 0; c < g.width; ++c) {
      const auto& rgb = colors.at(g.at(r, c));
      for (std::size_t ch = 0; ch < 3; ++ch) img.at(ch, r, c) = std::clamp(rgb[ch] + rng.normal(0.0, noise), 0.0, 1.0);
    }
  }
  return img;
}

// ---- training examples -------------------------------------------------------

std::uint64_t tile_key(const TileSpec& t) { return mix64(mix64(mix64(t.z) ^ t.x) ^ (static_cast<std::uint64_t>(t.y) << 1)); }

TrainingExample load_example(const Manifest& m, const ManifestRecord& r, std::size_t grid_h, std::size_t grid_w,
                             std::uint64_t seed) {
  if (!r.grid_path) throw DataError("manifest record lacks grid_path (run rasterize first)");
  TrainingExample ex;
  ex.grid = load_grid(m.resolve(*r.grid_path), r.tile);
  ex.tile = ex.grid.tile;
  if (r.image_path) {
    ex.image = read_png(m.resolve(*r.image_path));
    if (ex.image.height != ex.grid.height || ex.image.width != ex.grid.width) {
      throw DataError("image " + *r.image_path + " does not match its grid size");
    }
  } else {
    ex.image = synthesize_image(ex.grid, derive_seed(seed, tile_key(ex.tile)));
  }
  for (auto& inst : extract_instances(ex.grid)) {
    ex.instances.push_back({inst.composition_id, downsample_mask(inst.mask, grid_h, grid_w)});
  }
  return ex;
}

// ---- planted dataset ---------------------------------------------------------

std::vector<Composition> planted_compositions(std::size_t n) {
  static const char* kSingles[] = {
      "building residential", "building commercial", "building industrial", "building school",
      "landuse forest",       "landuse farmland",    "landuse grass",       "landuse residential",
      "natural water",        "natural wood",        "natural scrub",       "leisure park",
      "leisure pitch",        "amenity parking",     "highway pedestrian",  "landuse meadow"};
  constexpr std::size_t kNumSingles = std::size(kSingles);
  std::vector<Composition> out;
  for (std::size_t i = 0; i < n; ++i) {
    if (i < kNumSingles) {
      out.push_back(normalize_composition({parse_tag(kSingles[i])}));
    } else {
      const std::size_t j = i - kNumSingles;
      const char* base = kSingles[j % kNumSingles];
      const std::string extra = fmt::format("height {}m", 3 * (j / kNumSingles + 1) + (j % 4));
      out.push_back(normalize_composition({parse_tag(base), parse_tag(extra)}));
    }
  }
  return out;
}

namespace {

std::vector<std::array<double, 3>> planted_palette(std::size_t n) {
  std::vector<std::array<double, 3>> out;
  if (n <= 32) {
    const double rg[] = {0.15, 0.38, 0.62, 0.85};
    const double b[] = {0.25, 0.75};
    for (std::size_t i = 0; i < n; ++i) out.push_back({rg[i % 4], rg[(i / 4) % 4], b[i / 16]});
    return out;
  }
  const auto levels = static_cast<std::size_t>(std::ceil(std::cbrt(static_cast<double>(n))));
  auto level = [levels](std::size_t k) { return 0.1 + 0.8 * static_cast<double>(k) / static_cast<double>(levels - 1); };
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back({level(i % levels), level((i / levels) % levels), level(i / (levels * levels))});
  }
  return out;
}

PolygonGeometry pixel_rect(const TileSpec& t, double c0, double r0, double c1, double r1) {
  auto at = [&t](double u, double v) { return pixel_to_lonlat({u, v}, t); };
  PolygonGeometry g;
  g.exterior = {at(c0, r0), at(c1, r0), at(c1, r1), at(c0, r1), at(c0, r0)};
  return g;
}

}  // namespace

std::filesystem::path make_planted_dataset(const std::filesystem::path& out_dir, const PlantedOptions& opt) {
  if (opt.compositions < 4) throw ArgumentError("planted dataset needs at least 4 compositions");
  if (opt.cell_px == 0 || opt.tile_px % opt.cell_px != 0) throw ArgumentError("tile_px must be a multiple of cell_px");
  const std::uint32_t cells = opt.tile_px / opt.cell_px;
  if (cells < 4) throw ArgumentError("planted tiles need at least 4 cells per side");

  const auto comps = planted_compositions(opt.compositions);
  const auto palette = planted_palette(opt.compositions);
  std::map<Composition, std::array<double, 3>> color_of;
  std::set<TagAtom> retained;
  for (std::size_t i = 0; i < comps.size(); ++i) {
    color_of.emplace(comps[i], palette[i]);
    for (const auto& a : comps[i].atoms()) retained.insert(a);
  }

  std::filesystem::create_directories(out_dir / "grids");
  std::filesystem::create_directories(out_dir / "images");
  Rng rng(opt.seed);
  InternTable global;
  std::vector<ManifestRecord> records;
  const std::uint32_t per_row = 16;
  for (std::size_t i = 0; i < opt.tiles; ++i) {
    TileSpec t;
    t.z = opt.zoom;
    // One tile per 4x4 split block.
    t.x = opt.origin_x + kSplitBlockTiles * static_cast<std::uint32_t>(i % per_row);
    t.y = opt.origin_y + kSplitBlockTiles * static_cast<std::uint32_t>(i / per_row);
    t.px = t.py = opt.tile_px;

    const auto split_c = static_cast<double>((2 + rng.below(cells - 3)) * opt.cell_px);
    const auto split_r = static_cast<double>((2 + rng.below(cells - 3)) * opt.cell_px);
    const double full = opt.tile_px;
    const auto pick = rng.permutation(opt.compositions);
    std::vector<TaggedPolygon> polys = {
        {pixel_rect(t, 0, 0, split_c, split_r), comps[pick[0]]},
        {pixel_rect(t, split_c, 0, full, split_r), comps[pick[1]]},
        {pixel_rect(t, 0, split_r, split_c, full), comps[pick[2]]},
        {pixel_rect(t, split_c, split_r, full, full), comps[pick[3]]},
    };
    const CompositionGrid grid = prune_intern(composite_tile(polys, t, retained, global));

    Image img(3, grid.height, grid.width);
    for (std::size_t r = 0; r < grid.height; ++r) {
      for (std::size_t c = 0; c < grid.width; ++c) {
        const auto& rgb = color_of.at(grid.intern.at(grid.at(r, c)));
        for (std::size_t ch = 0; ch < 3; ++ch) img.at(ch, r, c) = std::clamp(rgb[ch] + rng.normal(0.0, opt.noise), 0.0, 1.0);
      }
    }
    const std::string stem = fmt::format("{}_{}_{}", t.z, t.x, t.y);
    save_grid(out_dir / "grids" / (stem + ".pxfg"), grid);
    write_png(out_dir / "images" / (stem + ".png"), img);

    ManifestRecord rec;
    rec.tile = t;
    rec.coverage = coverage_fraction(grid);
    rec.n_instances = extract_instances(grid).size();
    rec.grid_path = "grids/" + stem + ".pxfg";
    rec.image_path = "images/" + stem + ".png";
    rec.split = assign_split(t);
    records.push_back(rec);
  }
  const auto manifest = out_dir / "manifest.jsonl";
  write_manifest(manifest, records);
  return manifest;
}

}  // namespace pixelforge
