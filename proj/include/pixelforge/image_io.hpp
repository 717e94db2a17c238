#pragma once

#include <cstdint>
#include <filesystem>
#include <span>

#include "pixelforge/embed.hpp"

namespace pixelforge {

// 8-bit RGB/gray PNG into a CHW image scaled to [0, 1]. Alpha is dropped.
Image read_png(const std::filesystem::path& path);

// Writes a CHW image in [0, 1] as 8-bit PNG (1 or 3 channels), round(255 * v).
void write_png(const std::filesystem::path& path, const Image& img);

// Writes already-quantized CHW bytes (1 or 3 channels).
void write_png_u8(const std::filesystem::path& path, std::span<const std::uint8_t> chw, std::size_t channels,
                  std::size_t height, std::size_t width);

}  // namespace pixelforge
