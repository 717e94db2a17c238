#include "pixelforge/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "pixelforge/errors.hpp"

namespace pixelforge {

Image read_png(const std::filesystem::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw DataError("cannot read PNG " + path.string() + ": " + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr)) {
    png_image_free(&image);
    throw DataError("cannot decode PNG " + path.string() + ": " + image.message);
  }
  Image out(3, image.height, image.width);
  for (std::size_t r = 0; r < out.height; ++r) {
    for (std::size_t c = 0; c < out.width; ++c) {
      for (std::size_t ch = 0; ch < 3; ++ch) out.at(ch, r, c) = buf[(r * out.width + c) * 3 + ch] / 255.0;
    }
  }
  return out;
}

void write_png_u8(const std::filesystem::path& path, std::span<const std::uint8_t> chw, std::size_t channels,
                  std::size_t height, std::size_t width) {
  if (channels != 1 && channels != 3) throw ArgumentError("PNG export supports 1 or 3 channels");
  if (chw.size() != channels * height * width) throw ArgumentError("PNG buffer size mismatch");
  std::vector<std::uint8_t> interleaved(chw.size());
  const std::size_t plane = height * width;
  for (std::size_t i = 0; i < plane; ++i) {
    for (std::size_t ch = 0; ch < channels; ++ch) interleaved[i * channels + ch] = chw[ch * plane + i];
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(width);
  image.height = static_cast<png_uint_32>(height);
  image.format = channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&image, path.c_str(), 0, interleaved.data(), 0, nullptr)) {
    throw DataError("cannot write PNG " + path.string() + ": " + image.message);
  }
}

void write_png(const std::filesystem::path& path, const Image& img) {
  std::vector<std::uint8_t> bytes(img.data.size());
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    bytes[i] = static_cast<std::uint8_t>(std::clamp(std::lround(255.0 * img.data[i]), 0L, 255L));
  }
  write_png_u8(path, bytes, img.channels, img.height, img.width);
}

}  // namespace pixelforge
