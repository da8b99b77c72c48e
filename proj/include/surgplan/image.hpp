#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace surgplan {

// RGBA8, row-major, top-left origin.
struct Image {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> rgba;

  Image() = default;
  Image(std::size_t w, std::size_t h) : width(w), height(h), rgba(w * h * 4, 0) {}

  std::uint8_t* pixel(std::size_t x, std::size_t y) { return &rgba[(y * width + x) * 4]; }
  const std::uint8_t* pixel(std::size_t x, std::size_t y) const {
    return &rgba[(y * width + x) * 4];
  }

  bool operator==(const Image&) const = default;
};

std::vector<std::uint8_t> encode_png(const Image& image);
Image decode_png(std::span<const std::uint8_t> bytes);

void write_png_file(const Image& image, const std::string& path);

}  // namespace surgplan
