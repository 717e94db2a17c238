#include <fstream>

#include "doctest.h"
#include "json.hpp"
#include "oracles.hpp"
#include "pixelforge/commands.hpp"
#include "pixelforge/dataset.hpp"
#include "pixelforge/errors.hpp"
#include "pixelforge/grid_io.hpp"
#include "pixelforge/image_io.hpp"

using namespace pixelforge;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    Rng rng(std::random_device{}());
    path = fs::temp_directory_path() / ("pixelforge_test_" + std::to_string(rng.next_u64()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) { return read_text_file(p); }

// GeoJSON polygon covering [u0,u1) x [v0,v1) pixels of tile t.
nlohmann::json rect_feature(const TileSpec& t, double u0, double v0, double u1, double v1, nlohmann::json props) {
  nlohmann::json ring = nlohmann::json::array();
  for (auto [u, v] : {std::pair{u0, v0}, {u1, v0}, {u1, v1}, {u0, v1}, {u0, v0}}) {
    const GeoPoint p = pixel_to_lonlat({u, v}, t);
    ring.push_back({p.lon, p.lat});
  }
  return {{"type", "Feature"}, {"properties", props}, {"geometry", {{"type", "Polygon"}, {"coordinates", {ring}}}}};
}

fs::path first_grid(const fs::path& manifest) {
  const Manifest m = read_manifest(manifest);
  return m.resolve(*m.records.front().grid_path);
}

TrainConfig tiny_config() {
  TrainConfig c;
  c.d = 16;
  c.v_hash = 128;
  c.grid_h = c.grid_w = 8;
  c.lr = 1e-2;
  c.max_steps = 30;
  return c;
}

}  // namespace

TEST_CASE("config parsing") {
  const TrainConfig c = parse_train_config("# comment\nlr = 0.5e-3\nd=32\northogonal = false\nseed = 7 # trailing\n");
  CHECK(c.lr == 0.5e-3);
  CHECK(c.d == 32);
  CHECK_FALSE(c.orthogonal);
  CHECK(c.seed == 7);
  CHECK(parse_train_config(format_train_config(c)).lr == c.lr);
  CHECK_THROWS_AS(parse_train_config("bogus = 1\n"), ArgumentError);
  CHECK_THROWS_AS(parse_train_config("lr = -1\n"), ArgumentError);
  CHECK_THROWS_AS(parse_train_config("lr\n"), ArgumentError);
}

TEST_CASE("manifest records round trip") {
  ManifestRecord r;
  r.tile = {16, 3, 4, 512, 512};
  r.coverage = 0.75;
  r.n_instances = 3;
  r.grid_path = "grids/16_3_4.pxfg";
  r.split = Split::Val;
  const ManifestRecord back = ManifestRecord::from_json_line(r.to_json_line());
  CHECK(back.to_json_line() == r.to_json_line());
  CHECK_THROWS_AS(ManifestRecord::from_json_line("{"), DataError);
}

TEST_CASE("spatial split fractions") {
  std::size_t counts[3] = {0, 0, 0};
  std::size_t n = 0;
  for (std::uint32_t bx = 0; bx < 40; ++bx) {
    for (std::uint32_t by = 0; by < 40; ++by) {
      ++counts[static_cast<int>(assign_split(TileSpec{16, 1000 + 4 * bx, 2000 + 4 * by, 512, 512}))];
      ++n;
    }
  }
  CHECK(std::abs(counts[0] / double(n) - 0.6) <= 0.05);
  CHECK(std::abs(counts[1] / double(n) - 0.2) <= 0.05);
  CHECK(std::abs(counts[2] / double(n) - 0.2) <= 0.05);
  // tiles of one block share a split
  CHECK(assign_split(TileSpec{16, 4, 8, 512, 512}) == assign_split(TileSpec{16, 7, 11, 512, 512}));
}

TEST_CASE("ingest with only points writes an empty manifest and fails") {
  TempDir tmp;
  nlohmann::json fc{{"type", "FeatureCollection"}, {"features", nlohmann::json::array()}};
  for (int i = 0; i < 3; ++i) {
    fc["features"].push_back({{"type", "Feature"},
                              {"properties", {{"amenity", "bench"}}},
                              {"geometry", {{"type", "Point"}, {"coordinates", {13.4, 52.5}}}}});
  }
  fs::create_directories(tmp.path / "in");
  write_text_file(tmp.path / "in" / "a.geojson", fc.dump());
  IngestOptions opt{tmp.path / "in", tmp.path / "out" / "manifest.jsonl"};
  CHECK_THROWS_AS(cmd_ingest(opt), DataError);
  CHECK(slurp(opt.out_manifest).empty());
  const auto parsed = parse_geojson(fc.dump());
  CHECK(parsed.skipped_non_polygon == 3);
}

TEST_CASE("ingest and rasterize a polygon spanning two tiles") {
  TempDir tmp;
  const TileSpec left{16, 35200, 21500, 512, 512};
  nlohmann::json fc{{"type", "FeatureCollection"}, {"features", nlohmann::json::array()}};
  // spans the right edge of `left` into its eastern neighbour; a second file is malformed
  fc["features"].push_back(rect_feature(left, 0, 0, 900, 512, {{"building", "yes"}, {"@id", 1}}));
  fs::create_directories(tmp.path / "in");
  write_text_file(tmp.path / "in" / "a.geojson", fc.dump());
  write_text_file(tmp.path / "in" / "b.geojson", "{ not json");

  IngestOptions ingest{tmp.path / "in", tmp.path / "ing" / "manifest.jsonl"};
  const IngestReport ir = cmd_ingest(ingest);
  CHECK(ir.tiles == 2);
  CHECK(ir.file_errors.size() == 1);
  const std::string first = slurp(ingest.out_manifest);
  cmd_ingest(ingest);
  CHECK(slurp(ingest.out_manifest) == first);

  RasterizeOptions ro;
  ro.manifest = ingest.out_manifest;
  ro.out_dir = tmp.path / "ras";
  ro.tile_px = 64;
  ro.threads = 2;
  const RasterizeReport rr = cmd_rasterize(ro);
  // the eastern tile is covered 388/512 = 75.8% -> kept; left fully covered
  CHECK(rr.kept == 2);
  const Manifest m = read_manifest(rr.manifest);
  REQUIRE(m.records.size() == 2);
  for (const auto& rec : m.records) {
    const CompositionGrid g = load_grid(m.resolve(*rec.grid_path), rec.tile);
    CHECK(render_sentence(g.intern.at(g.at(10, 2))) == "building yes");
    CHECK(rec.split.has_value());
  }

  ro.min_coverage = 0.8;
  ro.out_dir = tmp.path / "ras2";
  CHECK(cmd_rasterize(ro).dropped == 1);
}

TEST_CASE("train, control and eval on a small planted dataset") {
  TempDir tmp;
  PlantedOptions po;
  po.compositions = 8;
  po.tiles = 24;
  const fs::path manifest = make_planted_dataset(tmp.path / "data", po);
  const fs::path again = make_planted_dataset(tmp.path / "data2", po);
  CHECK(slurp(manifest).size() == slurp(again).size());

  TrainConfig cfg = tiny_config();
  const TrainReport a = cmd_train_align({manifest, tmp.path / "a", cfg});
  const TrainReport b = cmd_train_align({manifest, tmp.path / "b", cfg});
  CHECK(a.losses == b.losses);
  CHECK(read_file(a.checkpoint) == read_file(b.checkpoint));
  CHECK(a.losses.back() < a.losses.front());

  cfg.max_steps = 0;
  const TrainReport z = cmd_train_align({manifest, tmp.path / "z", cfg});
  Checkpoint init = initial_checkpoint(cfg);
  save_checkpoint(tmp.path / "init.pxfb", init);
  CHECK(read_file(z.checkpoint) == read_file(tmp.path / "init.pxfb"));

  ControlOptions co;
  co.manifest = manifest;
  co.checkpoint = a.checkpoint;
  co.out_dir = tmp.path / "c_none";
  const ControlReport none = cmd_control(co);
  co.mask_retained = 1.0;
  co.out_dir = tmp.path / "c_one";
  cmd_control(co);
  for (const auto& p : none.rasters) CHECK(read_file(p) == read_file(tmp.path / "c_one" / p.filename()));

  co.mask_retained = 0.0;
  co.out_dir = tmp.path / "c_zero";
  co.previews = true;
  const ControlReport zero = cmd_control(co);
  const ControlRaster s = decode_control_raster(read_file(zero.rasters.front()));
  for (std::size_t ch = 0; ch < 3; ++ch) {
    const float v = s.data[ch * s.height * s.width];
    for (std::size_t i = 0; i < s.height * s.width; ++i) CHECK(s.data[ch * s.height * s.width + i] == v);
  }
  CHECK(fs::exists(fs::path(zero.rasters.front()).replace_extension(".png")));

  co.mask_retained.reset();
  co.schedule_step = std::pair<std::uint64_t, std::uint64_t>{5, 10};
  co.previews = false;
  co.out_dir = tmp.path / "c_sched";
  CHECK(cmd_control(co).retained == doctest::Approx(0.65));

  EvalOptions eo;
  eo.manifest = manifest;
  eo.checkpoint = a.checkpoint;
  eo.split = Split::Train;
  CHECK_THROWS_AS(cmd_eval(eo), ArgumentError);
  eo.suites = {EvalSuite::Retrieval, EvalSuite::Tags, EvalSuite::Image};
  const MetricsReport r = cmd_eval(eo);
  CHECK(r.gallery_size > 0);
  CHECK(r.recall_1.has_value());
  CHECK(*r.recall_5 >= *r.recall_1);
  CHECK(*r.ssim_mean == 1.0);
  CHECK(std::isinf(*r.psnr_mean));

  const BatchPlan plan = cmd_plan_batch(manifest, 8, 0.95, kDefaultSeed);
  CHECK(plan.feasible);
  CHECK(plan.batch_size == 2);

  const auto info = nlohmann::json::parse(cmd_grid_info(first_grid(manifest)));
  CHECK(info["width"] == 64);
}

TEST_CASE("text cache on disk matches a fresh computation") {
  TempDir tmp;
  Rng rng(60);
  const CompositionGrid g = oracle::random_grid(rng, 8, 8, 6);
  const auto text = ToyTextEncoderParams::random(16, 128, rng);
  setenv("PIXELFORGE_CACHE", (tmp.path / "cache").c_str(), 1);
  const auto first = obtain_text_cache(g.intern, text, 99);
  const auto second = obtain_text_cache(g.intern, text, 99);
  unsetenv("PIXELFORGE_CACHE");
  const auto fresh = obtain_text_cache(g.intern, text, 99);
  CHECK(first == second);
  CHECK(first == fresh);
  CHECK(fs::exists(tmp.path / "cache"));
}

TEST_CASE("empty train split is a data error") {
  TempDir tmp;
  write_text_file(tmp.path / "manifest.jsonl", "");
  CHECK_THROWS_AS(cmd_train_align({tmp.path / "manifest.jsonl", tmp.path / "o", tiny_config()}), DataError);
}

TEST_CASE("png round trip") {
  TempDir tmp;
  Rng rng(61);
  Image img(3, 5, 7);
  for (auto& v : img.data) v = std::round(rng.uniform(0.0, 255.0)) / 255.0;
  write_png(tmp.path / "x.png", img);
  const Image back = read_png(tmp.path / "x.png");
  CHECK(back.height == 5);
  CHECK(back.width == 7);
  for (std::size_t i = 0; i < img.data.size(); ++i) CHECK(back.data[i] == doctest::Approx(img.data[i]).epsilon(1e-12));
}
