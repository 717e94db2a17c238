#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pixelforge/geometry.hpp"
#include "pixelforge/mask.hpp"
#include "pixelforge/tags.hpp"

namespace pixelforge {

using CompositionId = std::uint32_t;
inline constexpr CompositionId kEmptyComposition = 0;

// Bijection between composition IDs and compositions. ID 0 is always the empty composition.
class InternTable {
 public:
  InternTable();

  // Returns the existing ID or assigns the next free one.
  CompositionId intern(const Composition& c);
  // Inserts a fixed (id, composition) pair; throws DataError if it conflicts.
  void insert(CompositionId id, const Composition& c);

  bool contains(CompositionId id) const { return by_id_.count(id) != 0; }
  const Composition& at(CompositionId id) const;
  // Throws DataError if absent.
  CompositionId id_of(const Composition& c) const;
  bool has(const Composition& c) const { return by_comp_.count(c) != 0; }

  std::size_t size() const { return by_id_.size(); }
  const std::map<CompositionId, Composition>& entries() const { return by_id_; }

  bool operator==(const InternTable& o) const { return by_id_ == o.by_id_; }

 private:
  std::map<CompositionId, Composition> by_id_;
  std::map<Composition, CompositionId> by_comp_;
  CompositionId next_ = 1;
};

struct CompositionGrid {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<CompositionId> ids;  // row-major
  InternTable intern;
  TileSpec tile;

  CompositionId at(std::size_t row, std::size_t col) const { return ids[row * width + col]; }
  bool operator==(const CompositionGrid&) const = default;
};

// Checks dims and that every ID is interned; throws DataError otherwise.
void validate(const CompositionGrid& g);

struct PolygonInstance {
  CompositionId composition_id = kEmptyComposition;
  BinaryMask mask;
  std::size_t pixel_count = 0;
};

struct TaggedPolygon {
  PolygonGeometry geometry;
  Composition composition;
};

// Every pixel receives the union of retained atoms of all polygons covering it.
// IDs are assigned through `intern`, which may be shared across tiles to build a
// dataset-global table.
CompositionGrid composite_tile(std::span<const TaggedPolygon> polygons, const TileSpec& t,
                               const std::set<TagAtom>& retained, InternTable& intern);
CompositionGrid composite_tile(std::span<const TaggedPolygon> polygons, const TileSpec& t,
                               const std::set<TagAtom>& retained);

double coverage_fraction(const CompositionGrid& g);
inline constexpr double kMinCoverage = 0.70;
inline bool passes_coverage(double coverage, double min_coverage = kMinCoverage) { return coverage >= min_coverage; }

// 4-connected components of equal nonzero ID, ordered by the scan position of
// their first pixel.
std::vector<PolygonInstance> extract_instances(const CompositionGrid& g);

// Box-average pooling to (target_h, target_w) then thresholding (avg >= threshold).
// A nonempty source never pools to an empty mask: the cell with the largest
// average (first in scan order on ties) is set instead.
BinaryMask downsample_mask(const BinaryMask& m, std::size_t target_h, std::size_t target_w, double threshold = 0.5);

}  // namespace pixelforge
