#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <vector>

#include "pixelforge/align.hpp"
#include "pixelforge/bytes.hpp"
#include "pixelforge/embed.hpp"
#include "pixelforge/raster.hpp"
#include "pixelforge/rng.hpp"

namespace pixelforge {

using TextEmbeddingCache = std::map<CompositionId, Embedding>;

// Encodes every composition of the table once.
TextEmbeddingCache precompute_text_cache(const InternTable& intern, const ToyTextEncoderParams& text);

// D x H x W grid whose column (h, w) is the cached text embedding of the pixel's composition.
struct SemanticEmbeddingGrid {
  DenseFeatureMap values;
  TileSpec provenance;
};

// Throws DataError naming the rendered composition when the cache lacks an ID.
SemanticEmbeddingGrid build_embedding_grid(const CompositionGrid& g, const TextEmbeddingCache& cache);

ControlRaster build_control_raster(const SemanticEmbeddingGrid& e, const ControlAdapterParams& a);

// Same result as build_control_raster(build_embedding_grid(g, cache), a), computed
// once per distinct composition instead of once per pixel.
ControlRaster control_raster_for_grid(const CompositionGrid& g, const TextEmbeddingCache& cache,
                                      const ControlAdapterParams& a);

// Linear sparsity curriculum over retained polygon coverage.
struct MaskSchedule {
  std::uint64_t total_steps = 1;
  double start_retained = 1.0;
  double end_retained = 0.3;
};

// lerp(start, end, t / T); t beyond T clamps to the end value with a warning.
double retained_fraction(const MaskSchedule& sched, std::uint64_t step);

// ceil(retained * n) with products within 1e-9 of an integer snapped first.
std::size_t kept_instance_count(std::size_t n, double retained);

// Indices of kept instances: the first kept_instance_count entries of a seeded
// permutation of 0..n-1, so lower fractions keep subsets of higher ones.
std::vector<std::size_t> select_kept_instances(std::size_t n, double retained, Rng& rng);

// Dropped instances' pixels revert to the empty composition.
CompositionGrid apply_polygon_mask(const CompositionGrid& g, std::span<const PolygonInstance> instances,
                                   double retained, Rng& rng);

struct MaskLabel {
  std::size_t mask_index = 0;
  CompositionId composition_id = kEmptyComposition;
  double similarity = 0.0;
};

struct MaskLabeling {
  std::vector<MaskLabel> labels;
  std::vector<std::size_t> skipped;  // empty masks
};

struct GalleryEntry {
  CompositionId id = kEmptyComposition;
  Embedding embedding;
};

// Pools each mask, then picks the most similar gallery entry (lowest ID on ties).
MaskLabeling label_masks_by_retrieval(const DenseFeatureMap& z, std::span<const BinaryMask> masks,
                                      std::span<const GalleryEntry> gallery);

// PXFC layout (little-endian): "PXFC" | u16 version=1 | u32 C=3 | u32 H | u32 W | f32 CHW
Bytes encode_control_raster(const ControlRaster& s);
ControlRaster decode_control_raster(std::span<const std::uint8_t> bytes);

// round(255 * s) per value, CHW order.
std::vector<std::uint8_t> quantize_control_raster(const ControlRaster& s);

}  // namespace pixelforge
