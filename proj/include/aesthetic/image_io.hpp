#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "aesthetic/image.hpp"

namespace aesthetic {

class ImageDecodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// PNG or JPEG bytes (detected by signature) to an RGB image in [0,1].
/// Gray and alpha inputs are converted; alpha is dropped.
Image decode_image(const std::string& bytes);
Image read_image(const std::filesystem::path& path);

/// 8-bit RGB PNG. Values are rounded from [0,1].
std::string encode_png(const Image& image);
std::string encode_png_gray(std::size_t width, std::size_t height, const std::vector<std::uint8_t>& pixels);
std::string encode_jpeg(const Image& image, int quality = 90);
void write_file(const std::filesystem::path& path, const std::string& bytes);
std::string read_file(const std::filesystem::path& path);

/// Bilinear resampling with pixel-centre alignment.
Image resize_bilinear(const Image& image, std::size_t width, std::size_t height);

}  // namespace aesthetic
