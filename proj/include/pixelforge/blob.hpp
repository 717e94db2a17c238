#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "pixelforge/bytes.hpp"

namespace pixelforge {

// Named f32 tensor inside a PXFB blob.
struct BlobTensor {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<float> data;

  std::size_t numel() const;
};

// PXFB layout (little-endian):
//   "PXFB" | u16 version=1 | u32 header bytes | UTF-8 JSON header | f32 data
// The header is `meta` plus "tensors": [{"name", "shape"}...] listing the data
// segments in order.
struct Blob {
  nlohmann::ordered_json meta = nlohmann::ordered_json::object();
  std::vector<BlobTensor> tensors;

  const BlobTensor& tensor(const std::string& name) const;
};

Bytes encode_blob(const Blob& b);
Blob decode_blob(std::span<const std::uint8_t> bytes);
void save_blob(const std::filesystem::path& path, const Blob& b);
Blob load_blob(const std::filesystem::path& path);

}  // namespace pixelforge
