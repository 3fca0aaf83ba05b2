#pragma once

// Raster codecs: binary PGM/PPM (P5/P6, maxval 255) implemented here, PNG
// through libpng. The format follows the file extension on save and the
// file signature on load.

#include <cstdint>
#include <filesystem>
#include <vector>

#include "transmef/image.hpp"

namespace transmef {

/// Throws DataError for malformed headers, unsupported maxval, or truncated
/// payloads. Nothing is returned on failure.
Raster decode_pnm(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> encode_pnm(const Raster& raster);

/// 8-bit gray/RGB output; palette, alpha and 16-bit inputs are converted to
/// 8-bit gray or RGB on load.
Raster decode_png(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> encode_png(const Raster& raster);

Raster load_image(const std::filesystem::path& path);
/// Atomic write; ".png" selects PNG, anything else PNM.
void save_image(const Raster& raster, const std::filesystem::path& path);

Image load_gray(const std::filesystem::path& path);
void save_gray(const Image& image, const std::filesystem::path& path);

bool is_image_path(const std::filesystem::path& path);

struct Dataset {
  std::vector<Image> images;
  std::vector<std::filesystem::path> paths;
  std::size_t skipped = 0;  // files with an image extension that failed to decode
};

/// Name-sorted decodable images, converted to gray and brought to
/// size x size, by bilinear resize when `resize` is set, otherwise by
/// scaling the short side up to `size` if needed and taking the centre
/// crop. Throws DataError when nothing decodes.
Dataset ingest_dataset(const std::filesystem::path& dir, std::size_t size, bool resize);

/// Dataset order for one epoch: a seeded shuffle of 0..n-1.
std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::size_t epoch);

}  // namespace transmef
