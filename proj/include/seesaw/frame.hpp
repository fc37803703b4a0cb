#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "seesaw/error.hpp"

namespace seesaw {

/// H x W x 3 RGB image, row-major, one byte per channel.
struct Frame {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> data;

  Frame() = default;
  Frame(int h, int w) : height(h), width(w), data(static_cast<std::size_t>(h) * w * 3, 0) {}

  static constexpr int channels = 3;

  std::uint8_t& at(int y, int x, int c) { return data[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
  std::uint8_t at(int y, int x, int c) const { return data[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }

  bool valid() const { return height > 0 && width > 0 && data.size() == static_cast<std::size_t>(height) * width * 3; }

  void fill_rect(int y0, int x0, int h, int w, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    for (int y = std::max(0, y0); y < std::min(height, y0 + h); ++y)
      for (int x = std::max(0, x0); x < std::min(width, x0 + w); ++x) {
        at(y, x, 0) = r;
        at(y, x, 1) = g;
        at(y, x, 2) = b;
      }
  }

  bool operator==(const Frame&) const = default;
};

}  // namespace seesaw
