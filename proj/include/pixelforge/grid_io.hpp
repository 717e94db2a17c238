#pragma once

#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>

#include "pixelforge/bytes.hpp"
#include "pixelforge/raster.hpp"

namespace pixelforge {

// PXFG layout (little-endian):
//   "PXFG" | u16 version=1 | u32 width | u32 height | width*height u32 ids (row-major)
//   | u32 entry count | entries: u32 id, u16 byte length, UTF-8 sentence
inline constexpr std::uint16_t kGridFormatVersion = 1;

enum class GridDecodeErrorKind { BadMagic, UnknownVersion, Truncated, MissingInternEntry, BadInternEntry, TrailingBytes };

class GridDecodeError : public std::runtime_error {
 public:
  GridDecodeError(GridDecodeErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  GridDecodeErrorKind kind() const { return kind_; }

 private:
  GridDecodeErrorKind kind_;
};

Bytes encode_grid(const CompositionGrid& g);

// Tile provenance is not stored in the file (the manifest carries it); the
// decoded grid gets `tile` with its pixel size overwritten by the grid dims.
CompositionGrid decode_grid(std::span<const std::uint8_t> bytes, const TileSpec& tile = {0, 0, 0, 1, 1});

// Drops intern entries the grid does not reference (ID 0 is always kept).
CompositionGrid prune_intern(CompositionGrid g);

void save_grid(const std::filesystem::path& path, const CompositionGrid& g);
CompositionGrid load_grid(const std::filesystem::path& path, const TileSpec& tile = {0, 0, 0, 1, 1});

}  // namespace pixelforge
