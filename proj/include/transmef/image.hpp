#pragma once

// Grayscale float rasters and 8-bit interleaved rasters, plus the conversions
// between them and the tensor layout the network consumes.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "transmef/tensor.hpp"

namespace transmef {

/// Single-channel image, row-major, intensities nominally in [0,1].
struct Image {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<float> data;

  Image() = default;
  Image(std::size_t h, std::size_t w, float fill = 0.0f) : height(h), width(w), data(h * w, fill) {}

  float& at(std::size_t y, std::size_t x) { return data[y * width + x]; }
  float at(std::size_t y, std::size_t x) const { return data[y * width + x]; }
  std::size_t size() const { return data.size(); }
  bool operator==(const Image&) const = default;
};

/// 8-bit samples, channels interleaved (1 = gray, 3 = RGB).
struct Raster {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 1;
  std::vector<std::uint8_t> samples;

  bool operator==(const Raster&) const = default;
};

/// Full-range BT.601 luma.
inline double luma(double r, double g, double b) { return 0.299 * r + 0.587 * g + 0.114 * b; }

/// Grayscale in [0,1]; RGB rasters go through luma.
Image to_gray(const Raster& raster);
/// Rounds clamp(v,0,1)*255.
Raster to_raster(const Image& image);
/// Rounds each pixel to the nearest multiple of 1/255.
Image quantize8(const Image& image);

/// Bilinear resampling with pixel-centre alignment and edge clamping.
Image resize_bilinear(const Image& image, std::size_t height, std::size_t width);
/// Throws ShapeError when the window leaves the image.
Image crop(const Image& image, std::size_t y, std::size_t x, std::size_t height, std::size_t width);
Image center_crop(const Image& image, std::size_t height, std::size_t width);
/// Mirror padding (edge pixel not repeated) on the bottom and right.
Image reflect_pad(const Image& image, std::size_t height, std::size_t width);

Tensor to_tensor(const Image& image);
Image from_tensor(const Tensor& tensor);

}  // namespace transmef
