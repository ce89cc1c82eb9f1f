#pragma once

#include <cstddef>
#include <vector>

namespace aesthetic {

/// RGB image, row-major height x width x 3, channel values in [0, 1].
struct Image {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<float> pixels;

  Image() = default;
  Image(std::size_t w, std::size_t h, float fill = 0.f) : width(w), height(h), pixels(w * h * 3, fill) {}

  float& at(std::size_t x, std::size_t y, std::size_t c) { return pixels[(y * width + x) * 3 + c]; }
  float at(std::size_t x, std::size_t y, std::size_t c) const { return pixels[(y * width + x) * 3 + c]; }

  bool empty() const { return pixels.empty(); }
  bool operator==(const Image&) const = default;
};

}  // namespace aesthetic
