#include "transmef/image.hpp"

#include <algorithm>
#include <cmath>

#include "transmef/error.hpp"

namespace transmef {

Image to_gray(const Raster& raster) {
  if (raster.channels != 1 && raster.channels != 3)
    throw DataError("unsupported channel count " + std::to_string(raster.channels));
  Image out(raster.height, raster.width);
  const auto* s = raster.samples.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double v = raster.channels == 1 ? s[i] : luma(s[3 * i], s[3 * i + 1], s[3 * i + 2]);
    out.data[i] = static_cast<float>(v / 255.0);
  }
  return out;
}

namespace {

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

}  // namespace

Raster to_raster(const Image& image) {
  Raster r{image.width, image.height, 1, std::vector<std::uint8_t>(image.size())};
  for (std::size_t i = 0; i < image.size(); ++i) r.samples[i] = to_byte(image.data[i]);
  return r;
}

Image quantize8(const Image& image) {
  Image out(image.height, image.width);
  for (std::size_t i = 0; i < image.size(); ++i)
    out.data[i] = static_cast<float>(to_byte(image.data[i]) / 255.0);
  return out;
}

Image resize_bilinear(const Image& image, std::size_t height, std::size_t width) {
  if (image.size() == 0 || height == 0 || width == 0) throw ShapeError("resize of empty image");
  Image out(height, width);
  const double sy = double(image.height) / double(height);
  const double sx = double(image.width) / double(width);
  auto source = [](double scale, std::size_t i, std::size_t n, std::size_t& i0, std::size_t& i1,
                   double& t) {
    const double pos = std::clamp((double(i) + 0.5) * scale - 0.5, 0.0, double(n - 1));
    i0 = static_cast<std::size_t>(pos);
    i1 = std::min(i0 + 1, n - 1);
    t = pos - double(i0);
  };
  for (std::size_t y = 0; y < height; ++y) {
    std::size_t y0, y1;
    double ty;
    source(sy, y, image.height, y0, y1, ty);
    for (std::size_t x = 0; x < width; ++x) {
      std::size_t x0, x1;
      double tx;
      source(sx, x, image.width, x0, x1, tx);
      const double top = image.at(y0, x0) * (1 - tx) + image.at(y0, x1) * tx;
      const double bottom = image.at(y1, x0) * (1 - tx) + image.at(y1, x1) * tx;
      out.at(y, x) = static_cast<float>(top * (1 - ty) + bottom * ty);
    }
  }
  return out;
}

Image crop(const Image& image, std::size_t y, std::size_t x, std::size_t height, std::size_t width) {
  if (y + height > image.height || x + width > image.width || height == 0 || width == 0)
    throw ShapeError("crop window outside " + std::to_string(image.height) + "x" +
                     std::to_string(image.width) + " image");
  Image out(height, width);
  for (std::size_t r = 0; r < height; ++r)
    std::copy_n(image.data.begin() + static_cast<std::ptrdiff_t>((y + r) * image.width + x), width,
                out.data.begin() + static_cast<std::ptrdiff_t>(r * width));
  return out;
}

Image center_crop(const Image& image, std::size_t height, std::size_t width) {
  if (height > image.height || width > image.width)
    throw ShapeError("center crop larger than image");
  return crop(image, (image.height - height) / 2, (image.width - width) / 2, height, width);
}

Image reflect_pad(const Image& image, std::size_t height, std::size_t width) {
  if (height < image.height || width < image.width) throw ShapeError("pad target smaller than image");
  auto mirror = [](std::size_t i, std::size_t n) {
    if (n == 1) return std::size_t{0};
    const std::size_t period = 2 * (n - 1);
    i %= period;
    return i < n ? i : period - i;
  };
  Image out(height, width);
  for (std::size_t y = 0; y < height; ++y)
    for (std::size_t x = 0; x < width; ++x)
      out.at(y, x) = image.at(mirror(y, image.height), mirror(x, image.width));
  return out;
}

Tensor to_tensor(const Image& image) {
  return Tensor::create({1, image.height, image.width}, image.data);
}

Image from_tensor(const Tensor& tensor) {
  if (tensor.rank() != 3 || tensor.dim(0) != 1)
    throw ShapeError("expected a [1,H,W] tensor, got " + to_string(tensor.shape()));
  Image out(tensor.dim(1), tensor.dim(2));
  std::copy(tensor.data().begin(), tensor.data().end(), out.data.begin());
  return out;
}

}  // namespace transmef
