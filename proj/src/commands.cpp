#include "pixelforge/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "json.hpp"
#include "pixelforge/blob.hpp"
#include "pixelforge/dataset.hpp"
#include "pixelforge/errors.hpp"
#include "pixelforge/grid_io.hpp"
#include "pixelforge/image_io.hpp"

namespace pixelforge {
namespace {

std::string tile_stem(const TileSpec& t) { return fmt::format("{}_{}_{}", t.z, t.x, t.y); }

std::vector<float> to_f32(std::span<const double> v) { return std::vector<float>(v.begin(), v.end()); }

std::vector<double> to_f64(const std::vector<float>& v) { return std::vector<double>(v.begin(), v.end()); }

void expect_shape(const BlobTensor& t, std::vector<std::size_t> shape) {
  if (t.shape != shape) throw DataError("checkpoint tensor '" + t.name + "' has an unexpected shape");
}

// Merges per-grid intern tables, which share dataset-global IDs.
InternTable merge_interns(const std::vector<const CompositionGrid*>& grids) {
  InternTable merged;
  for (const auto* g : grids) {
    for (const auto& [id, comp] : g->intern.entries()) merged.insert(id, comp);
  }
  return merged;
}

}  // namespace

// ---- checkpoints -------------------------------------------------------------

Checkpoint initial_checkpoint(const TrainConfig& cfg) {
  cfg.validate();
  Checkpoint c;
  Rng init(derive_seed(cfg.seed, 1));
  c.model = AlignModel::random(cfg.d, cfg.v_hash, 3, init);
  Rng adapter(derive_seed(cfg.seed, 3));
  c.adapter = ControlAdapterParams::random(cfg.d, adapter);
  c.grid_h = cfg.grid_h;
  c.grid_w = cfg.grid_w;
  c.seed = cfg.seed;
  return c;
}

void save_checkpoint(const fs::path& path, const Checkpoint& c) {
  Blob b;
  b.meta["format"] = "pixelforge-align-checkpoint";
  b.meta["seed"] = c.seed;
  b.meta["d"] = c.model.text.dim;
  b.meta["v"] = c.model.text.hash_dim;
  b.meta["grid_h"] = c.grid_h;
  b.meta["grid_w"] = c.grid_w;
  b.meta["steps"] = c.steps;
  const std::size_t d = c.model.text.dim;
  b.tensors.push_back({"text_proj", {d, c.model.text.hash_dim}, to_f32(c.model.text.weights)});
  b.tensors.push_back({"image_proj", {d, c.model.image.inputs()}, to_f32(c.model.image.weights)});
  b.tensors.push_back({"log_scale", {1}, {static_cast<float>(c.model.temperature.log_scale)}});
  b.tensors.push_back({"adapter_weight", {3, d}, to_f32(c.adapter.weights)});
  b.tensors.push_back({"adapter_bias", {3}, to_f32(c.adapter.bias)});
  save_blob(path, b);
}

Checkpoint load_checkpoint(const fs::path& path) {
  const Blob b = load_blob(path);
  if (b.meta.value("format", "") != "pixelforge-align-checkpoint") throw DataError(path.string() + " is not a checkpoint");
  Checkpoint c;
  const auto d = b.meta.at("d").get<std::size_t>();
  const auto v = b.meta.at("v").get<std::size_t>();
  c.seed = b.meta.at("seed").get<std::uint64_t>();
  c.grid_h = b.meta.at("grid_h").get<std::size_t>();
  c.grid_w = b.meta.at("grid_w").get<std::size_t>();
  c.steps = b.meta.value("steps", std::uint64_t{0});
  const auto& text = b.tensor("text_proj");
  expect_shape(text, {d, v});
  c.model.text = {d, v, to_f64(text.data)};
  const auto& image = b.tensor("image_proj");
  if (image.shape.size() != 2 || image.shape[0] != d || image.shape[1] < 2) throw DataError("bad image_proj shape");
  c.model.image = {d, image.shape[1] - 1, to_f64(image.data)};
  c.model.temperature.log_scale = b.tensor("log_scale").data.at(0);
  c.model.temperature.clamp();
  const auto& aw = b.tensor("adapter_weight");
  expect_shape(aw, {3, d});
  c.adapter.dim = d;
  c.adapter.weights = to_f64(aw.data);
  const auto& ab = b.tensor("adapter_bias");
  expect_shape(ab, {3});
  for (std::size_t i = 0; i < 3; ++i) c.adapter.bias[i] = ab.data[i];
  return c;
}

// ---- ingest ------------------------------------------------------------------

IngestReport cmd_ingest(const IngestOptions& opt) {
  if (!fs::is_directory(opt.geojson_dir)) throw ArgumentError(opt.geojson_dir.string() + " is not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(opt.geojson_dir)) {
    const auto ext = entry.path().extension();
    if (entry.is_regular_file() && (ext == ".geojson" || ext == ".json")) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  IngestReport report;
  std::vector<TaggedPolygon> polygons;
  for (const auto& f : files) {
    ++report.files;
    try {
      GeoJsonFeatures parsed = parse_geojson(read_text_file(f));
      report.skipped_non_polygon += parsed.skipped_non_polygon;
      report.skipped_invalid += parsed.skipped_invalid;
      for (auto& p : parsed.polygons) polygons.push_back(std::move(p));
    } catch (const DataError& e) {
      report.file_errors.push_back(f.filename().string() + ": " + e.what());
      spdlog::error("{}: {}", f.string(), e.what());
    }
  }
  if (report.skipped_non_polygon > 0) {
    spdlog::warn("skipped {} point/line features", report.skipped_non_polygon);
  }

  std::map<std::pair<std::uint32_t, std::uint32_t>, std::vector<std::size_t>> by_tile;  // (y, x) -> polygons
  for (std::size_t i = 0; i < polygons.size(); ++i) {
    if (polygons[i].composition.empty()) continue;
    for (const auto& t : tiles_for_polygon(polygons[i].geometry, opt.zoom)) by_tile[{t.y, t.x}].push_back(i);
  }

  const fs::path out_dir = opt.out_manifest.parent_path();
  std::vector<ManifestRecord> records;
  if (by_tile.empty()) {
    write_manifest(opt.out_manifest, records);
    throw DataError("no valid polygon features found");
  }

  TagVocabulary vocab;
  for (const auto& [key, idx] : by_tile) {
    std::vector<TagAtom> atoms;
    for (auto i : idx) atoms.insert(atoms.end(), polygons[i].composition.atoms().begin(), polygons[i].composition.atoms().end());
    vocab.add_tile(atoms);
  }
  const std::set<TagAtom> retained = filter_rare_tags(vocab, opt.rare_threshold);
  report.retained_tags = retained.size();
  write_text_file(out_dir / "vocab.json", vocab.to_json());

  for (const auto& [key, idx] : by_tile) {
    std::vector<TaggedPolygon> kept;
    for (auto i : idx) {
      std::vector<TagAtom> atoms;
      for (const auto& a : polygons[i].composition.atoms()) {
        if (retained.count(a)) atoms.push_back(a);
      }
      if (!atoms.empty()) kept.push_back({polygons[i].geometry, normalize_composition(std::move(atoms))});
    }
    if (kept.empty()) continue;
    ManifestRecord rec;
    rec.tile.z = opt.zoom;
    rec.tile.x = key.second;
    rec.tile.y = key.first;
    const std::string rel = "features/" + tile_stem(rec.tile) + ".geojson";
    write_text_file(out_dir / rel, to_geojson(kept));
    rec.features_path = rel;
    rec.n_features = kept.size();
    records.push_back(rec);
    report.polygons += kept.size();
  }
  report.tiles = records.size();
  write_manifest(opt.out_manifest, records);
  if (records.empty()) throw DataError("no tile kept any retained tag");
  return report;
}

// ---- rasterize ---------------------------------------------------------------

RasterizeReport cmd_rasterize(const RasterizeOptions& opt) {
  const Manifest m = read_manifest(opt.manifest);
  const std::size_t n = m.records.size();
  struct Slot {
    std::optional<CompositionGrid> grid;
    std::string error;
  };
  std::vector<Slot> slots(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < n; i = next++) {
      const auto& rec = m.records[i];
      try {
        if (!rec.features_path) throw DataError("record lacks features_path (run ingest first)");
        const GeoJsonFeatures f = parse_geojson(read_text_file(m.resolve(*rec.features_path)));
        std::set<TagAtom> retained;
        for (const auto& p : f.polygons) retained.insert(p.composition.atoms().begin(), p.composition.atoms().end());
        TileSpec t = rec.tile;
        t.px = t.py = opt.tile_px;
        slots[i].grid = composite_tile(f.polygons, t, retained);
      } catch (const std::exception& e) {
        slots[i].error = e.what();
      }
    }
  };
  const unsigned threads = std::max(1u, opt.threads);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
  }

  // Deterministic merge into dataset-global IDs, in manifest order.
  RasterizeReport report;
  InternTable global;
  std::vector<ManifestRecord> out;
  fs::create_directories(opt.out_dir / "grids");
  for (std::size_t i = 0; i < n; ++i) {
    const auto& rec = m.records[i];
    if (!slots[i].grid) {
      report.tile_errors.push_back(tile_stem(rec.tile) + ": " + slots[i].error);
      spdlog::error("tile {}: {}", tile_stem(rec.tile), slots[i].error);
      continue;
    }
    CompositionGrid& g = *slots[i].grid;
    const double coverage = coverage_fraction(g);
    if (!passes_coverage(coverage, opt.min_coverage)) {
      spdlog::info("tile {} dropped: coverage {:.4f} < {:.2f}", tile_stem(rec.tile), coverage, opt.min_coverage);
      ++report.dropped;
      continue;
    }
    std::map<CompositionId, CompositionId> remap;
    for (const auto& [id, comp] : g.intern.entries()) remap[id] = global.intern(comp);
    for (auto& id : g.ids) id = remap.at(id);
    InternTable local;
    for (const auto& [id, gid] : remap) local.insert(gid, global.at(gid));
    g.intern = std::move(local);
    g = prune_intern(std::move(g));

    ManifestRecord r;
    r.tile = rec.tile;
    r.coverage = coverage;
    r.n_instances = extract_instances(g).size();
    const std::string rel = "grids/" + tile_stem(rec.tile) + ".pxfg";
    try {
      save_grid(opt.out_dir / rel, g);
    } catch (const std::exception& e) {
      report.tile_errors.push_back(tile_stem(rec.tile) + ": " + e.what());
      continue;
    }
    r.grid_path = rel;
    if (opt.images_dir) {
      const fs::path img = *opt.images_dir / (tile_stem(rec.tile) + ".png");
      if (fs::exists(img)) r.image_path = fs::absolute(img).string();
    }
    r.split = assign_split(rec.tile);
    out.push_back(r);
    ++report.kept;
  }
  report.manifest = opt.out_dir / "manifest.jsonl";
  write_manifest(report.manifest, out);
  return report;
}

// ---- train -------------------------------------------------------------------

TrainReport cmd_train_align(const TrainOptions& opt) {
  const TrainConfig& cfg = opt.config;
  cfg.validate();
  const Manifest m = read_manifest(opt.manifest);
  std::vector<TrainingExample> examples;
  for (const auto* rec : m.with_split(Split::Train)) {
    TrainingExample ex = load_example(m, *rec, cfg.grid_h, cfg.grid_w, cfg.seed);
    if (!ex.instances.empty()) examples.push_back(std::move(ex));
  }
  if (examples.empty()) throw DataError("train split is empty");

  Checkpoint ck = initial_checkpoint(cfg);
  std::vector<const CompositionGrid*> grids;
  for (const auto& ex : examples) grids.push_back(&ex.grid);
  const InternTable intern = merge_interns(grids);

  OptimizerState state(ck.model.parameter_count(), cfg.beta_ort);
  const AdamWConfig adam = cfg.optimizer();
  Rng rng(derive_seed(cfg.seed, 2));
  std::vector<std::size_t> order(examples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  TrainReport report;
  std::string csv = "step,loss,logit_scale\n";
  for (std::uint64_t step = 0; step < cfg.max_steps; ++step) {
    const std::size_t b = std::min(cfg.batch_images, examples.size());
    for (std::size_t j = 0; j < b; ++j) std::swap(order[j], order[j + rng.below(order.size() - j)]);

    ContrastiveBatch batch;
    batch.grid_h = cfg.grid_h;
    batch.grid_w = cfg.grid_w;
    std::vector<std::vector<CompositionId>> per_image;
    for (std::size_t j = 0; j < b; ++j) {
      const auto& ex = examples[order[j]];
      batch.images.push_back(&ex.image);
      auto& ids = per_image.emplace_back();
      for (const auto& inst : ex.instances) ids.push_back(inst.id);
    }
    for (const auto& sp : sample_pairs(per_image, cfg.k_pairs, rng)) {
      const auto& ex = examples[order[sp.image]];
      const Composition& full = intern.at(sp.composition);
      Composition text = cfg.keep_prob < 1.0 ? subsample_tags(full, cfg.keep_prob, rng) : full;
      batch.pairs.push_back({sp.image, ex.instances[sp.instance].mask, sp.composition, std::move(text)});
    }
    const StepResult r = train_step(batch, ck.model, state, adam);
    report.losses.push_back(r.loss);
    report.final_logit_scale = r.logit_scale;
    csv += fmt::format("{},{:.17g},{:.17g}\n", step, r.loss, r.logit_scale);
    if ((step + 1) % 100 == 0) spdlog::info("step {} loss {:.5f} logit_scale {:.3f}", step + 1, r.loss, r.logit_scale);
  }
  ck.steps = cfg.max_steps;
  report.steps = cfg.max_steps;
  fs::create_directories(opt.out_dir);
  report.checkpoint = opt.out_dir / "checkpoint.pxfb";
  report.loss_csv = opt.out_dir / "loss.csv";
  save_checkpoint(report.checkpoint, ck);
  write_text_file(report.loss_csv, csv);
  write_text_file(opt.out_dir / "train.cfg", format_train_config(cfg));
  return report;
}

// ---- control -----------------------------------------------------------------

TextEmbeddingCache obtain_text_cache(const InternTable& intern, const ToyTextEncoderParams& text,
                                     std::uint64_t fingerprint) {
  std::map<std::string, std::vector<float>> stored;
  std::optional<fs::path> file;
  if (const char* dir = std::getenv("PIXELFORGE_CACHE"); dir != nullptr && *dir != '\0') {
    file = fs::path(dir) / fmt::format("text_{:016x}.pxfb", fingerprint);
    if (fs::exists(*file)) {
      const Blob b = load_blob(*file);
      const auto sentences = b.meta.at("sentences").get<std::vector<std::string>>();
      const auto& emb = b.tensor("embeddings");
      if (emb.shape.size() != 2 || emb.shape[0] != sentences.size() || emb.shape[1] != text.dim) {
        throw DataError("text-embedding cache " + file->string() + " is inconsistent");
      }
      for (std::size_t i = 0; i < sentences.size(); ++i) {
        stored[sentences[i]].assign(emb.data.begin() + static_cast<std::ptrdiff_t>(i * text.dim),
                                    emb.data.begin() + static_cast<std::ptrdiff_t>((i + 1) * text.dim));
      }
    }
  }
  bool dirty = false;
  TextEmbeddingCache cache;
  for (const auto& [id, comp] : intern.entries()) {
    const std::string s = render_sentence(comp);
    auto it = stored.find(s);
    if (it == stored.end()) {
      it = stored.emplace(s, to_f32(encode_text_toy(comp, text).values)).first;
      dirty = true;
    }
    cache.emplace(id, Embedding{to_f64(it->second)});
  }
  if (file && dirty) {
    Blob b;
    std::vector<std::string> sentences;
    BlobTensor emb{"embeddings", {stored.size(), text.dim}, {}};
    for (const auto& [s, v] : stored) {
      sentences.push_back(s);
      emb.data.insert(emb.data.end(), v.begin(), v.end());
    }
    b.meta["sentences"] = sentences;
    b.tensors.push_back(std::move(emb));
    fs::create_directories(file->parent_path());
    save_blob(*file, b);
  }
  return cache;
}

ControlReport cmd_control(const ControlOptions& opt) {
  if (opt.mask_retained && opt.schedule_step) throw ArgumentError("--mask-retained and --schedule-step are exclusive");
  const Manifest m = read_manifest(opt.manifest);
  const Bytes ck_bytes = read_file(opt.checkpoint);
  const Checkpoint ck = load_checkpoint(opt.checkpoint);
  const std::uint64_t fingerprint = fnv1a64(ck_bytes.data(), ck_bytes.size());

  ControlReport report;
  if (opt.mask_retained) {
    if (!(*opt.mask_retained >= 0.0 && *opt.mask_retained <= 1.0)) throw ArgumentError("--mask-retained must lie in [0, 1]");
    report.retained = *opt.mask_retained;
  } else if (opt.schedule_step) {
    report.retained = retained_fraction({opt.schedule_step->second, 1.0, 0.3}, opt.schedule_step->first);
  }

  std::vector<std::pair<const ManifestRecord*, CompositionGrid>> grids;
  for (const auto& rec : m.records) {
    if (opt.split && rec.split != opt.split) continue;
    if (!rec.grid_path) throw DataError("record lacks grid_path (run rasterize first)");
    grids.emplace_back(&rec, load_grid(m.resolve(*rec.grid_path), rec.tile));
  }
  std::vector<const CompositionGrid*> ptrs;
  for (const auto& [rec, g] : grids) ptrs.push_back(&g);
  const TextEmbeddingCache cache = obtain_text_cache(merge_interns(ptrs), ck.model.text, fingerprint);

  fs::create_directories(opt.out_dir);
  for (const auto& [rec, g] : grids) {
    Rng rng(derive_seed(opt.seed, tile_key(g.tile)));
    const auto instances = extract_instances(g);
    const CompositionGrid masked = apply_polygon_mask(g, instances, report.retained, rng);
    const ControlRaster s = control_raster_for_grid(masked, cache, ck.adapter);
    const fs::path out = opt.out_dir / (tile_stem(g.tile) + ".pxfc");
    write_file(out, encode_control_raster(s));
    if (opt.previews) {
      write_png_u8(opt.out_dir / (tile_stem(g.tile) + ".png"), quantize_control_raster(s), 3, s.height, s.width);
    }
    report.rasters.push_back(out);
    ++report.tiles;
  }
  return report;
}

// ---- eval --------------------------------------------------------------------

MetricsReport cmd_eval(const EvalOptions& opt) {
  if (opt.suites.empty()) throw ArgumentError("select at least one evaluation suite");
  const Manifest m = read_manifest(opt.manifest);
  const auto records = m.with_split(opt.split);
  MetricsReport report;

  const bool needs_model = opt.suites.count(EvalSuite::Retrieval) || opt.suites.count(EvalSuite::Tags);
  if (needs_model) {
    if (!opt.checkpoint) throw ArgumentError("retrieval and tag suites need --checkpoint");
    if (records.empty()) throw DataError(fmt::format("{} split is empty", to_string(opt.split)));
    const Checkpoint ck = load_checkpoint(*opt.checkpoint);
    std::vector<TrainingExample> examples;
    for (const auto* rec : records) examples.push_back(load_example(m, *rec, ck.grid_h, ck.grid_w, ck.seed));
    std::vector<const CompositionGrid*> grids;
    for (const auto& ex : examples) grids.push_back(&ex.grid);
    const InternTable intern = merge_interns(grids);

    std::vector<GalleryItem> gallery;
    for (const auto& [id, comp] : intern.entries()) {
      if (id != kEmptyComposition) gallery.push_back({id, encode_text_toy(comp, ck.model.text)});
    }
    if (gallery.empty()) throw DataError("evaluation split holds no compositions");
    std::vector<RetrievalResult> results;
    std::vector<TagPrediction> predictions;
    for (const auto& ex : examples) {
      const DenseFeatureMap z = encode_image_toy(ex.image, ck.model.image, ck.grid_h, ck.grid_w);
      for (const auto& inst : ex.instances) {
        const PooledEmbedding p = pool_polygon(z, inst.mask);
        results.push_back(rank_gallery(p.unit, inst.id, gallery));
        predictions.push_back({intern.at(results.back().ranking.front().id), intern.at(inst.id)});
      }
    }
    if (results.empty()) throw DataError("evaluation split holds no polygon instances");
    report.queries = results.size();
    report.gallery_size = gallery.size();
    if (opt.suites.count(EvalSuite::Retrieval)) {
      report.recall_1 = recall_at_k(results, 1);
      report.recall_5 = recall_at_k(results, 5);
      report.recall_10 = recall_at_k(results, 10);
      report.ndcg_20 = semantic_ndcg_at_k(
          results, [&intern](CompositionId a, CompositionId b) { return jaccard_relevance(intern.at(a), intern.at(b)); },
          20);
    }
    if (opt.suites.count(EvalSuite::Tags)) {
      const auto acc = parent_child_accuracy(predictions);
      report.parent_acc = acc.parent;
      report.child_acc = acc.child;
      report.mixed_f1 = mixed_f1(predictions);
      report.exact_match_1 = exact_match_at_1(predictions);
      report.tag_overlap_f1_1 = tag_overlap_f1_at_1(predictions);
    }
  }

  if (opt.suites.count(EvalSuite::Image)) {
    double ssim_sum = 0.0, psnr_sum = 0.0;
    std::size_t pairs = 0;
    for (const auto* rec : records) {
      if (!rec->grid_path) throw DataError("record lacks grid_path");
      Image a;
      if (rec->image_path) {
        a = read_png(m.resolve(*rec->image_path));
      } else {
        const CompositionGrid g = load_grid(m.resolve(*rec->grid_path), rec->tile);
        a = synthesize_image(g, derive_seed(opt.seed, tile_key(g.tile)));
      }
      Image b = a;
      if (opt.generated_dir) b = read_png(*opt.generated_dir / (tile_stem(rec->tile) + ".png"));
      for (auto& v : a.data) v = std::round(v * 255.0);
      for (auto& v : b.data) v = std::round(v * 255.0);
      ssim_sum += ssim(a, b, 255.0);
      psnr_sum += psnr(a, b, 255.0);
      ++pairs;
    }
    if (pairs > 0) {
      report.ssim_mean = ssim_sum / static_cast<double>(pairs);
      report.psnr_mean = psnr_sum / static_cast<double>(pairs);
    }
    if (opt.features_a && opt.features_b) {
      auto load = [](const fs::path& p) {
        const Blob blob = load_blob(p);
        const auto& t = blob.tensor("features");
        if (t.shape.size() != 2) throw DataError(p.string() + ": features tensor must be N x D");
        Eigen::MatrixXd x(static_cast<Eigen::Index>(t.shape[0]), static_cast<Eigen::Index>(t.shape[1]));
        for (std::size_t i = 0; i < t.shape[0]; ++i) {
          for (std::size_t j = 0; j < t.shape[1]; ++j) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = t.data[i * t.shape[1] + j];
        }
        return fit_gaussian(x);
      };
      report.frechet = frechet_distance(load(*opt.features_a), load(*opt.features_b));
    }
  }
  return report;
}

// ---- misc --------------------------------------------------------------------

BatchPlan cmd_plan_batch(const fs::path& manifest, std::size_t k, double confidence, std::uint64_t seed) {
  const Manifest m = read_manifest(manifest);
  std::vector<std::size_t> counts;
  auto train = m.with_split(Split::Train);
  if (train.empty()) {
    for (const auto& r : m.records) train.push_back(&r);
  }
  for (const auto* r : train) {
    if (r->n_instances) counts.push_back(*r->n_instances);
  }
  if (counts.empty()) throw DataError("manifest has no instance counts (run rasterize first)");
  return plan_batch_size(counts, k, confidence, seed);
}

std::string cmd_grid_info(const fs::path& grid_path) {
  const CompositionGrid g = load_grid(grid_path);
  std::map<CompositionId, std::size_t> pixels;
  for (auto id : g.ids) ++pixels[id];
  std::vector<std::pair<std::size_t, CompositionId>> top;
  for (const auto& [id, n] : pixels) top.emplace_back(n, id);
  std::sort(top.begin(), top.end(), [](const auto& a, const auto& b) { return a.first != b.first ? a.first > b.first : a.second < b.second; });
  nlohmann::ordered_json j;
  j["magic"] = "PXFG";
  j["version"] = kGridFormatVersion;
  j["width"] = g.width;
  j["height"] = g.height;
  j["intern_entries"] = g.intern.size();
  j["coverage"] = coverage_fraction(g);
  j["instances"] = extract_instances(g).size();
  j["top_compositions"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < std::min<std::size_t>(10, top.size()); ++i) {
    j["top_compositions"].push_back(
        {{"id", top[i].second}, {"pixels", top[i].first}, {"sentence", render_sentence(g.intern.at(top[i].second))}});
  }
  return j.dump(2);
}

}  // namespace pixelforge
