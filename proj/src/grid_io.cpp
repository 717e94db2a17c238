#include "pixelforge/grid_io.hpp"

#include <fstream>
#include <iterator>

#include "pixelforge/errors.hpp"

namespace pixelforge {

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> data) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
  if (!out) throw DataError("write failed for " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  const Bytes b = read_file(path);
  return std::string(b.begin(), b.end());
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

Bytes encode_grid(const CompositionGrid& g) {
  validate(g);
  ByteWriter w;
  w.put_bytes("PXFG");
  w.put_u16(kGridFormatVersion);
  w.put_u32(g.width);
  w.put_u32(g.height);
  for (auto id : g.ids) w.put_u32(id);
  w.put_u32(static_cast<std::uint32_t>(g.intern.size()));
  for (const auto& [id, comp] : g.intern.entries()) {
    const std::string s = render_sentence(comp);
    if (s.size() > 0xFFFF) throw ArgumentError("composition sentence longer than 65535 bytes");
    w.put_u32(id);
    w.put_u16(static_cast<std::uint16_t>(s.size()));
    w.put_bytes(s);
  }
  return w.take();
}

CompositionGrid decode_grid(std::span<const std::uint8_t> bytes, const TileSpec& tile) {
  using K = GridDecodeErrorKind;
  ByteReader r(bytes);
  std::string magic;
  if (!r.get_bytes(4, magic)) throw GridDecodeError(K::Truncated, "grid truncated in header");
  if (magic != "PXFG") throw GridDecodeError(K::BadMagic, "not a PXFG grid (bad magic)");
  std::uint16_t version = 0;
  if (!r.get_u16(version)) throw GridDecodeError(K::Truncated, "grid truncated in header");
  if (version != kGridFormatVersion) {
    throw GridDecodeError(K::UnknownVersion, "unsupported PXFG version " + std::to_string(version));
  }
  CompositionGrid g;
  if (!r.get_u32(g.width) || !r.get_u32(g.height)) throw GridDecodeError(K::Truncated, "grid truncated in header");
  const std::uint64_t n = static_cast<std::uint64_t>(g.width) * g.height;
  if (n == 0) throw GridDecodeError(K::BadInternEntry, "grid has zero area");
  if (r.remaining() / 4 < n) throw GridDecodeError(K::Truncated, "grid payload truncated");
  g.ids.resize(n);
  for (auto& id : g.ids) r.get_u32(id);
  std::uint32_t count = 0;
  if (!r.get_u32(count)) throw GridDecodeError(K::Truncated, "grid truncated before intern table");
  for (std::uint32_t i = 0; i < count; ++i) {
    std::uint32_t id = 0;
    std::uint16_t len = 0;
    std::string sentence;
    if (!r.get_u32(id) || !r.get_u16(len) || !r.get_bytes(len, sentence)) {
      throw GridDecodeError(K::Truncated, "intern table truncated");
    }
    try {
      g.intern.insert(id, parse_sentence(sentence));
    } catch (const std::exception& e) {
      throw GridDecodeError(K::BadInternEntry, std::string("bad intern entry: ") + e.what());
    }
  }
  if (r.remaining() != 0) throw GridDecodeError(K::TrailingBytes, "unexpected bytes after intern table");
  for (auto id : g.ids) {
    if (!g.intern.contains(id)) {
      throw GridDecodeError(K::MissingInternEntry, "grid references missing intern entry " + std::to_string(id));
    }
  }
  g.tile = tile;
  g.tile.px = g.width;
  g.tile.py = g.height;
  return g;
}

CompositionGrid prune_intern(CompositionGrid g) {
  InternTable used;
  for (auto id : g.ids) {
    if (!used.contains(id)) used.insert(id, g.intern.at(id));
  }
  g.intern = std::move(used);
  return g;
}

void save_grid(const std::filesystem::path& path, const CompositionGrid& g) { write_file(path, encode_grid(g)); }

CompositionGrid load_grid(const std::filesystem::path& path, const TileSpec& tile) {
  return decode_grid(read_file(path), tile);
}

}  // namespace pixelforge
