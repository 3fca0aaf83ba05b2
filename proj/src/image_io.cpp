#include "transmef/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <numeric>
#include <string>

#include "transmef/error.hpp"
#include "transmef/fileutil.hpp"
#include "transmef/rng.hpp"

namespace transmef {
namespace {

class PnmHeader {
 public:
  explicit PnmHeader(const std::vector<std::uint8_t>& b) : b_(b) {}

  std::size_t number() {
    skip_space_and_comments();
    if (pos_ >= b_.size() || !std::isdigit(b_[pos_])) throw DataError("malformed PNM header");
    std::size_t v = 0;
    while (pos_ < b_.size() && std::isdigit(b_[pos_])) {
      v = v * 10 + (b_[pos_++] - '0');
      if (v > (1u << 24)) throw DataError("PNM dimension too large");
    }
    return v;
  }
  // Exactly one whitespace byte separates the header from the samples.
  std::size_t payload_start() {
    if (pos_ >= b_.size() || !std::isspace(b_[pos_])) throw DataError("malformed PNM header");
    return pos_ + 1;
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < b_.size()) {
      if (std::isspace(b_[pos_])) {
        ++pos_;
      } else if (b_[pos_] == '#') {
        while (pos_ < b_.size() && b_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  const std::vector<std::uint8_t>& b_;
  std::size_t pos_ = 2;
};

void check_raster(const Raster& r) {
  if (r.width == 0 || r.height == 0 || (r.channels != 1 && r.channels != 3) ||
      r.samples.size() != r.width * r.height * r.channels)
    throw DataError("inconsistent raster");
}

const std::uint8_t kPngSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

std::string lower_extension(const std::filesystem::path& p) {
  auto ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext;
}

}  // namespace

Raster decode_pnm(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6'))
    throw DataError("not a binary PGM/PPM file");
  PnmHeader h(bytes);
  Raster r;
  r.channels = bytes[1] == '5' ? 1 : 3;
  r.width = h.number();
  r.height = h.number();
  const std::size_t maxval = h.number();
  if (maxval != 255) throw DataError("unsupported PNM maxval " + std::to_string(maxval) + " (need 255)");
  if (r.width == 0 || r.height == 0) throw DataError("PNM has a zero dimension");
  const std::size_t start = h.payload_start();
  const std::size_t count = r.width * r.height * r.channels;
  if (bytes.size() < start + count) throw DataError("PNM payload truncated");
  r.samples.assign(bytes.begin() + static_cast<std::ptrdiff_t>(start),
                   bytes.begin() + static_cast<std::ptrdiff_t>(start + count));
  return r;
}

std::vector<std::uint8_t> encode_pnm(const Raster& raster) {
  check_raster(raster);
  const std::string header = std::string(raster.channels == 1 ? "P5" : "P6") + "\n" +
                             std::to_string(raster.width) + " " + std::to_string(raster.height) +
                             "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), raster.samples.begin(), raster.samples.end());
  return out;
}

Raster decode_png(const std::vector<std::uint8_t>& bytes) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()))
    throw DataError(std::string("PNG decode failed: ") + image.message);
  Raster r;
  r.width = image.width;
  r.height = image.height;
  r.channels = (image.format & PNG_FORMAT_FLAG_COLOR) ? 3 : 1;
  image.format = r.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  r.samples.resize(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, r.samples.data(), 0, nullptr)) {
    png_image_free(&image);
    throw DataError(std::string("PNG decode failed: ") + image.message);
  }
  return r;
}

std::vector<std::uint8_t> encode_png(const Raster& raster) {
  check_raster(raster);
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(raster.width);
  image.height = static_cast<png_uint_32>(raster.height);
  image.format = raster.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, raster.samples.data(), 0, nullptr))
    throw DataError(std::string("PNG encode failed: ") + image.message);
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, raster.samples.data(), 0, nullptr))
    throw DataError(std::string("PNG encode failed: ") + image.message);
  out.resize(size);
  return out;
}

Raster load_image(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  try {
    if (bytes.size() >= 8 && std::memcmp(bytes.data(), kPngSignature, 8) == 0) return decode_png(bytes);
    return decode_pnm(bytes);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void save_image(const Raster& raster, const std::filesystem::path& path) {
  write_file_atomic(path, lower_extension(path) == ".png" ? encode_png(raster) : encode_pnm(raster));
}

Image load_gray(const std::filesystem::path& path) { return to_gray(load_image(path)); }

void save_gray(const Image& image, const std::filesystem::path& path) {
  save_image(to_raster(image), path);
}

bool is_image_path(const std::filesystem::path& path) {
  const auto ext = lower_extension(path);
  return ext == ".png" || ext == ".pgm" || ext == ".ppm" || ext == ".pnm";
}

Dataset ingest_dataset(const std::filesystem::path& dir, std::size_t size, bool resize) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) throw DataError("dataset directory not found: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && is_image_path(entry.path())) files.push_back(entry.path());
  std::sort(files.begin(), files.end());

  Dataset data;
  for (const auto& f : files) {
    Image gray;
    try {
      gray = load_gray(f);
    } catch (const DataError&) {
      ++data.skipped;
      continue;
    }
    if (resize) {
      gray = resize_bilinear(gray, size, size);
    } else {
      const std::size_t short_side = std::min(gray.height, gray.width);
      if (short_side < size) {
        const double s = double(size) / double(short_side);
        gray = resize_bilinear(gray, std::max(size, std::size_t(std::lround(gray.height * s))),
                               std::max(size, std::size_t(std::lround(gray.width * s))));
      }
      gray = center_crop(gray, size, size);
    }
    data.images.push_back(std::move(gray));
    data.paths.push_back(f);
  }
  if (data.images.empty()) throw DataError("no decodable images in " + dir.string());
  return data;
}

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::size_t epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng = Rng::derive(seed, "epoch", epoch);
  rng.shuffle(std::span<std::size_t>(order));
  return order;
}

}  // namespace transmef
