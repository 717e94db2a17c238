#include "pixelforge/blob.hpp"

#include "pixelforge/errors.hpp"

namespace pixelforge {

std::size_t BlobTensor::numel() const {
  std::size_t n = 1;
  for (auto s : shape) n *= s;
  return n;
}

const BlobTensor& Blob::tensor(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return t;
  }
  throw DataError("blob has no tensor named '" + name + "'");
}

Bytes encode_blob(const Blob& b) {
  nlohmann::ordered_json header = b.meta;
  header["tensors"] = nlohmann::ordered_json::array();
  for (const auto& t : b.tensors) {
    if (t.data.size() != t.numel()) throw ArgumentError("tensor '" + t.name + "' data does not match its shape");
    header["tensors"].push_back({{"name", t.name}, {"shape", t.shape}});
  }
  const std::string text = header.dump();
  ByteWriter w;
  w.put_bytes("PXFB");
  w.put_u16(1);
  w.put_u32(static_cast<std::uint32_t>(text.size()));
  w.put_bytes(text);
  for (const auto& t : b.tensors) {
    for (float v : t.data) w.put_f32(v);
  }
  return w.take();
}

Blob decode_blob(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  std::string magic;
  std::uint16_t version = 0;
  std::uint32_t header_len = 0;
  if (!r.get_bytes(4, magic) || magic != "PXFB") throw DataError("not a PXFB blob");
  if (!r.get_u16(version) || version != 1) throw DataError("unsupported PXFB version");
  std::string text;
  if (!r.get_u32(header_len) || !r.get_bytes(header_len, text)) throw DataError("PXFB header truncated");
  Blob b;
  try {
    b.meta = nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("PXFB header: ") + e.what());
  }
  if (!b.meta.contains("tensors") || !b.meta["tensors"].is_array()) throw DataError("PXFB header lacks tensors");
  for (const auto& entry : b.meta["tensors"]) {
    BlobTensor t;
    t.name = entry.at("name").get<std::string>();
    t.shape = entry.at("shape").get<std::vector<std::size_t>>();
    const std::size_t n = t.numel();
    if (r.remaining() / 4 < n) throw DataError("PXFB tensor '" + t.name + "' truncated");
    t.data.resize(n);
    for (auto& v : t.data) r.get_f32(v);
    b.tensors.push_back(std::move(t));
  }
  if (r.remaining() != 0) throw DataError("PXFB has trailing bytes");
  b.meta.erase("tensors");
  return b;
}

void save_blob(const std::filesystem::path& path, const Blob& b) { write_file(path, encode_blob(b)); }

Blob load_blob(const std::filesystem::path& path) { return decode_blob(read_file(path)); }

}  // namespace pixelforge
