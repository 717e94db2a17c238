#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "pixelforge/align.hpp"
#include "pixelforge/config.hpp"
#include "pixelforge/control.hpp"
#include "pixelforge/eval.hpp"
#include "pixelforge/manifest.hpp"

namespace pixelforge {

namespace fs = std::filesystem;

// Stable process exit codes.
enum class ExitCode : int { Ok = 0, Usage = 1, DataError = 2, NumericFailure = 3 };

// ---- checkpoints -------------------------------------------------------------

struct Checkpoint {
  AlignModel model;
  ControlAdapterParams adapter;
  std::size_t grid_h = 64;
  std::size_t grid_w = 64;
  std::uint64_t seed = kDefaultSeed;
  std::uint64_t steps = 0;
};

// Fresh seeded model and adapter for a config.
Checkpoint initial_checkpoint(const TrainConfig& cfg);
void save_checkpoint(const fs::path& path, const Checkpoint& c);
Checkpoint load_checkpoint(const fs::path& path);

// ---- ingest ------------------------------------------------------------------

struct IngestOptions {
  fs::path geojson_dir;
  fs::path out_manifest;
  std::uint32_t zoom = 16;
  double rare_threshold = 0.002;
};

struct IngestReport {
  std::size_t files = 0;
  std::size_t polygons = 0;
  std::size_t skipped_non_polygon = 0;
  std::size_t skipped_invalid = 0;
  std::size_t retained_tags = 0;
  std::size_t tiles = 0;
  std::vector<std::string> file_errors;
};

// Writes per-tile feature files, vocab.json and the manifest next to
// out_manifest. Throws DataError (after writing an empty manifest) when no
// valid polygon survives.
IngestReport cmd_ingest(const IngestOptions& opt);

// ---- rasterize ---------------------------------------------------------------

struct RasterizeOptions {
  fs::path manifest;
  fs::path out_dir;
  double min_coverage = kMinCoverage;
  std::uint32_t tile_px = 512;
  std::optional<fs::path> images_dir;  // PNGs named z_x_y.png
  unsigned threads = 1;
};

struct RasterizeReport {
  std::size_t kept = 0;
  std::size_t dropped = 0;
  std::vector<std::string> tile_errors;
  fs::path manifest;
};

RasterizeReport cmd_rasterize(const RasterizeOptions& opt);

// ---- train -------------------------------------------------------------------

struct TrainOptions {
  fs::path manifest;
  fs::path out_dir;
  TrainConfig config;
};

struct TrainReport {
  std::uint64_t steps = 0;
  std::vector<double> losses;
  double final_logit_scale = 0.0;
  fs::path checkpoint;
  fs::path loss_csv;
};

TrainReport cmd_train_align(const TrainOptions& opt);

// ---- control -----------------------------------------------------------------

struct ControlOptions {
  fs::path manifest;
  fs::path checkpoint;
  fs::path out_dir;
  std::optional<double> mask_retained;
  std::optional<std::pair<std::uint64_t, std::uint64_t>> schedule_step;  // (t, T)
  std::optional<Split> split;
  bool previews = false;
  std::uint64_t seed = kDefaultSeed;
};

struct ControlReport {
  std::size_t tiles = 0;
  double retained = 1.0;
  std::vector<fs::path> rasters;
};

ControlReport cmd_control(const ControlOptions& opt);

// Loads the text-embedding cache for `intern` from $PIXELFORGE_CACHE when set,
// computing and persisting missing entries. Values are rounded through f32 so
// cached and fresh runs agree bit for bit.
TextEmbeddingCache obtain_text_cache(const InternTable& intern, const ToyTextEncoderParams& text,
                                     std::uint64_t fingerprint);

// ---- eval --------------------------------------------------------------------

enum class EvalSuite { Retrieval, Tags, Image };

struct EvalOptions {
  fs::path manifest;
  std::optional<fs::path> checkpoint;
  std::set<EvalSuite> suites;
  Split split = Split::Test;
  std::optional<fs::path> generated_dir;  // PNGs named z_x_y.png compared against the tile images
  std::optional<fs::path> features_a;     // PXFB blobs with an N x D "features" tensor
  std::optional<fs::path> features_b;
  std::uint64_t seed = kDefaultSeed;
};

MetricsReport cmd_eval(const EvalOptions& opt);

// ---- misc --------------------------------------------------------------------

BatchPlan cmd_plan_batch(const fs::path& manifest, std::size_t k, double confidence, std::uint64_t seed);

std::string cmd_grid_info(const fs::path& grid_path);

}  // namespace pixelforge
