#pragma once

// Inference: encode both exposures, average the feature maps, decode. Colour
// pairs fuse luma through the network and chroma by distance-from-neutral
// weighting.

#include <cstdint>
#include <vector>

#include "transmef/image.hpp"
#include "transmef/model.hpp"

namespace transmef {

inline constexpr double kChromaNeutral = 128.0;
inline constexpr double kChromaEpsilon = 1e-6;

/// (F1 + F2) / 2 computed as (F1 + F2) * 0.5.
Tensor fuse_features(const Tensor& f1, const Tensor& f2);

/// decode(encode(image)), with the same padding as fuse_gray.
Image reconstruct_image(const Model& model, const Image& image);

/// Images whose sides are not multiples of the patch size are reflect-padded
/// before encoding and the output is cropped back. Throws ShapeError when the
/// two extents differ.
Image fuse_gray(const Model& model, const Image& under, const Image& over);

/// Pixel-wise mean of the two exposures, the reference baseline.
Image fuse_average(const Image& under, const Image& over);

/// (c1|c1-tau| + c2|c2-tau|) / (|c1-tau| + |c2-tau|), or the mean when the
/// denominator is below 1e-6.
double fuse_chroma(double c1, double c2, double tau = kChromaNeutral);

/// Full-range BT.601, every plane on the 0-255 scale.
struct YCbCrImage {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> y, cb, cr;
};

YCbCrImage rgb_to_ycbcr(const Raster& rgb);
/// Rounded and clamped to [0,255].
Raster ycbcr_to_rgb(const YCbCrImage& image);

/// Luma goes through fuse_gray (scaled to [0,1]); Cb and Cr through
/// fuse_chroma. Both rasters must be RGB of equal extent.
Raster fuse_color(const Model& model, const Raster& under, const Raster& over);

}  // namespace transmef
