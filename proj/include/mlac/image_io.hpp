#pragma once

#include "mlac/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace mlac {

/// 8-bit RGB raster, row-major, 3 bytes per pixel.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;

  Index pixels() const { return static_cast<Index>(width) * height; }
  std::uint8_t at(int x, int y, int channel) const {
    return rgb[(static_cast<std::size_t>(y) * width + x) * 3 + channel];
  }
};

/// Reads a PNG and converts gray / palette / 16-bit / alpha variants to 8-bit RGB.
Image read_png(const std::string& path);
void write_png(const std::string& path, const Image& image);
/// Single-channel 8-bit PNG.
void write_png_gray(const std::string& path, int width, int height,
                    const std::vector<std::uint8_t>& values);

}  // namespace mlac
