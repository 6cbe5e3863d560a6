#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace capl
{

/// Grayscale image, row-major, row 0 at the top.
struct GrayImage
{
  int width = 0;
  int height = 0;
  int maxval = 255;
  std::vector<std::uint16_t> pixels;

  std::uint16_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  std::uint16_t &at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
};

/// Binary (P5) PGM, 8 or 16 bit. Throws IoError on unreadable or malformed files.
GrayImage read_pgm(std::string const &path);
void write_pgm(std::string const &path, GrayImage const &image);

} // namespace capl
