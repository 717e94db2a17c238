#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "pixelforge/errors.hpp"

namespace pixelforge {

// Row-major binary raster. One byte per cell; any nonzero byte is "set".
class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(std::size_t width, std::size_t height) : width_(width), height_(height), cells_(width * height, 0) {
    if (width == 0 || height == 0) throw ArgumentError("BinaryMask dimensions must be positive");
  }

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  std::size_t size() const { return cells_.size(); }

  bool get(std::size_t row, std::size_t col) const { return cells_[row * width_ + col] != 0; }
  void set(std::size_t row, std::size_t col, bool v = true) { cells_[row * width_ + col] = v ? 1 : 0; }
  bool at(std::size_t index) const { return cells_[index] != 0; }
  void set_at(std::size_t index, bool v = true) { cells_[index] = v ? 1 : 0; }

  const std::vector<std::uint8_t>& cells() const { return cells_; }

  bool operator==(const BinaryMask&) const = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<std::uint8_t> cells_;
};

inline std::size_t mask_area(const BinaryMask& m) {
  std::size_t n = 0;
  for (auto c : m.cells()) n += (c != 0);
  return n;
}

}  // namespace pixelforge
