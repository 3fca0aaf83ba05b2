#include "transmef/fuse.hpp"

#include <algorithm>
#include <cmath>

#include "transmef/error.hpp"

namespace transmef {

Tensor fuse_features(const Tensor& f1, const Tensor& f2) {
  if (f1.shape() != f2.shape())
    throw ShapeError("feature maps " + to_string(f1.shape()) + " and " + to_string(f2.shape()) +
                     " differ");
  return mul_scalar(add(f1, f2), 0.5f);
}

namespace {

std::size_t round_up(std::size_t n, std::size_t m) { return (n + m - 1) / m * m; }

Tensor padded_tensor(const Model& model, const Image& image) {
  if (image.size() == 0) throw ShapeError("empty image");
  const std::size_t p = model.config().patch_size;
  return to_tensor(reflect_pad(image, round_up(image.height, p), round_up(image.width, p)));
}

Image cropped(const Tensor& out, const Image& like) {
  return crop(from_tensor(out), 0, 0, like.height, like.width);
}

}  // namespace

Image reconstruct_image(const Model& model, const Image& image) {
  NoGradGuard no_grad;
  return cropped(model.decode(model.encode(padded_tensor(model, image))), image);
}

Image fuse_gray(const Model& model, const Image& under, const Image& over) {
  if (under.height != over.height || under.width != over.width)
    throw ShapeError("exposures differ in size: " + std::to_string(under.height) + "x" +
                     std::to_string(under.width) + " vs " + std::to_string(over.height) + "x" +
                     std::to_string(over.width));
  NoGradGuard no_grad;
  const auto f1 = model.encode(padded_tensor(model, under));
  const auto f2 = model.encode(padded_tensor(model, over));
  return cropped(model.decode(fuse_features(f1, f2)), under);
}

Image fuse_average(const Image& under, const Image& over) {
  if (under.height != over.height || under.width != over.width)
    throw ShapeError("exposures differ in size");
  Image out(under.height, under.width);
  for (std::size_t i = 0; i < out.size(); ++i)
    out.data[i] = static_cast<float>((double(under.data[i]) + over.data[i]) * 0.5);
  return out;
}

double fuse_chroma(double c1, double c2, double tau) {
  const double w1 = std::abs(c1 - tau), w2 = std::abs(c2 - tau);
  const double den = w1 + w2;
  if (den < kChromaEpsilon) return (c1 + c2) / 2;
  return (c1 * w1 + c2 * w2) / den;
}

YCbCrImage rgb_to_ycbcr(const Raster& rgb) {
  if (rgb.channels != 3) throw DataError("colour conversion needs an RGB raster");
  YCbCrImage out{rgb.height, rgb.width, {}, {}, {}};
  const std::size_t n = rgb.width * rgb.height;
  out.y.resize(n);
  out.cb.resize(n);
  out.cr.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double r = rgb.samples[3 * i], g = rgb.samples[3 * i + 1], b = rgb.samples[3 * i + 2];
    out.y[i] = luma(r, g, b);
    out.cb[i] = 128.0 - 0.168736 * r - 0.331264 * g + 0.5 * b;
    out.cr[i] = 128.0 + 0.5 * r - 0.418688 * g - 0.081312 * b;
  }
  return out;
}

Raster ycbcr_to_rgb(const YCbCrImage& image) {
  const std::size_t n = image.height * image.width;
  if (image.y.size() != n || image.cb.size() != n || image.cr.size() != n)
    throw ShapeError("YCbCr planes differ in size");
  Raster out{image.width, image.height, 3, std::vector<std::uint8_t>(3 * n)};
  auto byte = [](double v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0))); };
  for (std::size_t i = 0; i < n; ++i) {
    const double y = image.y[i], cb = image.cb[i] - 128.0, cr = image.cr[i] - 128.0;
    out.samples[3 * i] = byte(y + 1.402 * cr);
    out.samples[3 * i + 1] = byte(y - 0.344136 * cb - 0.714136 * cr);
    out.samples[3 * i + 2] = byte(y + 1.772 * cb);
  }
  return out;
}

Raster fuse_color(const Model& model, const Raster& under, const Raster& over) {
  if (under.width != over.width || under.height != over.height)
    throw ShapeError("exposures differ in size");
  const auto a = rgb_to_ycbcr(under), b = rgb_to_ycbcr(over);
  Image ya(a.height, a.width), yb(b.height, b.width);
  for (std::size_t i = 0; i < ya.size(); ++i) {
    ya.data[i] = static_cast<float>(a.y[i] / 255.0);
    yb.data[i] = static_cast<float>(b.y[i] / 255.0);
  }
  const Image fused = fuse_gray(model, ya, yb);
  YCbCrImage out{a.height, a.width, {}, {}, {}};
  const std::size_t n = ya.size();
  out.y.resize(n);
  out.cb.resize(n);
  out.cr.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.y[i] = double(fused.data[i]) * 255.0;
    out.cb[i] = fuse_chroma(a.cb[i], b.cb[i]);
    out.cr[i] = fuse_chroma(a.cr[i], b.cr[i]);
  }
  return ycbcr_to_rgb(out);
}

}  // namespace transmef
