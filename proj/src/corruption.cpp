#include "transmef/corruption.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "transmef/error.hpp"

namespace transmef {

std::string_view task_name(Task task) {
  switch (task) {
    case Task::kGamma: return "gamma";
    case Task::kFourier: return "fourier";
    case Task::kShuffle: return "shuffle";
  }
  return "?";
}

Task parse_task(std::string_view name) {
  if (name == "gamma") return Task::kGamma;
  if (name == "fourier") return Task::kFourier;
  if (name == "shuffle") return Task::kShuffle;
  throw UsageError("unknown task '" + std::string(name) + "' (expected gamma, fourier or shuffle)");
}

namespace {

void check_region_host(std::size_t height, std::size_t width) {
  if (height < kMaxRegionExtent || width < kMaxRegionExtent)
    throw ShapeError("corruption needs an image of at least 25x25, got " + std::to_string(height) +
                     "x" + std::to_string(width));
}

SubRegion sample_at(Rng& rng, std::size_t h, std::size_t w, std::size_t height, std::size_t width) {
  SubRegion r;
  r.h = h;
  r.w = w;
  r.x = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(width - w)));
  r.y = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(height - h)));
  return r;
}

std::size_t sample_extent(Rng& rng) {
  return static_cast<std::size_t>(rng.uniform_int(1, static_cast<std::int64_t>(kMaxRegionExtent)));
}

void check_inside(const SubRegion& r, const Image& image) {
  if (r.h == 0 || r.w == 0 || r.x + r.w > image.width || r.y + r.h > image.height)
    throw ShapeError("subregion outside the image");
}

void check_unit_range(const Image& image) {
  for (float v : image.data)
    if (!(v >= 0.0f && v <= 1.0f)) throw DataError("intensity outside [0,1]");
}

std::vector<double> read_region(const Image& image, const SubRegion& r) {
  std::vector<double> out(r.h * r.w);
  for (std::size_t y = 0; y < r.h; ++y)
    for (std::size_t x = 0; x < r.w; ++x) out[y * r.w + x] = image.at(r.y + y, r.x + x);
  return out;
}

void write_region(Image& image, const SubRegion& r, const std::vector<double>& values) {
  for (std::size_t y = 0; y < r.h; ++y)
    for (std::size_t x = 0; x < r.w; ++x)
      image.at(r.y + y, r.x + x) = static_cast<float>(values[y * r.w + x]);
}

}  // namespace

std::vector<SubRegion> sample_subregions(Rng& rng, std::size_t height, std::size_t width) {
  check_region_host(height, width);
  std::vector<SubRegion> regions;
  regions.reserve(kRegionCount);
  for (std::size_t i = 0; i < kRegionCount; ++i) {
    const std::size_t h = sample_extent(rng);
    const std::size_t w = sample_extent(rng);
    regions.push_back(sample_at(rng, h, w, height, width));
  }
  return regions;
}

CorruptionPlan make_plan(Task task, std::size_t height, std::size_t width, std::uint64_t seed) {
  Rng rng = Rng::derive(seed, "regions", static_cast<int>(task));
  return {task, sample_subregions(rng, height, width), seed};
}

Image gamma_corrupt(const Image& image, const CorruptionPlan& plan, const GammaOptions& options) {
  check_unit_range(image);
  Image out = image;
  for (std::size_t i = 0; i < plan.regions.size(); ++i) {
    const auto& r = plan.regions[i];
    check_inside(r, image);
    Rng rng = Rng::derive(plan.rng_seed, "gamma", i);
    const double gamma = options.forced_gamma ? *options.forced_gamma : rng.uniform(0.0, kMaxGamma);
    if (options.gammas_out) options.gammas_out->push_back(gamma);
    for (std::size_t y = r.y; y < r.y + r.h; ++y)
      for (std::size_t x = r.x; x < r.x + r.w; ++x)
        out.at(y, x) = static_cast<float>(std::pow(double(out.at(y, x)), gamma));
  }
  return out;
}

std::vector<double> gaussian_blur(const std::vector<double>& grid, std::size_t height,
                                  std::size_t width, double sigma) {
  if (!(sigma > 0)) throw UsageError("gaussian_blur: sigma must be positive");
  if (grid.size() != height * width) throw ShapeError("gaussian_blur: grid size mismatch");
  const auto radius = static_cast<std::ptrdiff_t>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  double total = 0;
  for (std::ptrdiff_t k = -radius; k <= radius; ++k)
    total += kernel[static_cast<std::size_t>(k + radius)] = std::exp(-double(k * k) / (2 * sigma * sigma));
  for (auto& k : kernel) k /= total;

  auto wrap = [](std::ptrdiff_t i, std::size_t n) {
    const auto m = static_cast<std::ptrdiff_t>(n);
    return static_cast<std::size_t>(((i % m) + m) % m);
  };
  std::vector<double> rows(grid.size()), out(grid.size());
  for (std::size_t y = 0; y < height; ++y)
    for (std::size_t x = 0; x < width; ++x) {
      double s = 0;
      for (std::ptrdiff_t k = -radius; k <= radius; ++k)
        s += kernel[static_cast<std::size_t>(k + radius)] *
             grid[y * width + wrap(static_cast<std::ptrdiff_t>(x) + k, width)];
      rows[y * width + x] = s;
    }
  for (std::size_t y = 0; y < height; ++y)
    for (std::size_t x = 0; x < width; ++x) {
      double s = 0;
      for (std::ptrdiff_t k = -radius; k <= radius; ++k)
        s += kernel[static_cast<std::size_t>(k + radius)] *
             rows[wrap(static_cast<std::ptrdiff_t>(y) + k, height) * width + x];
      out[y * width + x] = s;
    }
  return out;
}

Image fourier_corrupt(const Image& image, const CorruptionPlan& plan, const FourierOptions& options) {
  check_unit_range(image);
  Image out = image;
  for (std::size_t i = 0; i < plan.regions.size(); ++i) {
    const auto& r = plan.regions[i];
    check_inside(r, image);
    Rng rng = Rng::derive(plan.rng_seed, "fourier", i);
    const auto spectrum = dft2(read_region(out, r), r.h, r.w);
    auto amplitude = spectrum.amplitude();
    const auto phase = spectrum.phase();
    if (options.blur_amplitude) amplitude = gaussian_blur(amplitude, r.h, r.w);

    std::vector<std::size_t> perm(phase.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    const auto shuffles = rng.uniform_int(1, kMaxPhaseShuffles);
    if (options.shuffle_phase)
      for (std::int64_t s = 0; s < shuffles; ++s) rng.shuffle(std::span<std::size_t>(perm));
    if (options.permutations_out) options.permutations_out->push_back(perm);
    std::vector<double> shuffled(phase.size());
    for (std::size_t k = 0; k < perm.size(); ++k) shuffled[k] = phase[perm[k]];

    const auto pixels = idft2_real(ComplexGrid::from_polar(r.h, r.w, amplitude, shuffled));
    for (std::size_t y = 0; y < r.h; ++y)
      for (std::size_t x = 0; x < r.w; ++x)
        out.at(r.y + y, r.x + x) = static_cast<float>(std::clamp(pixels[y * r.w + x], 0.0, 1.0));
  }
  return out;
}

std::vector<RegionSwap> sample_swaps(Rng& rng, std::size_t height, std::size_t width) {
  check_region_host(height, width);
  std::vector<RegionSwap> swaps;
  swaps.reserve(kRegionCount);
  for (std::size_t i = 0; i < kRegionCount; ++i) {
    const std::size_t h = sample_extent(rng);
    const std::size_t w = sample_extent(rng);
    RegionSwap s;
    s.a = sample_at(rng, h, w, height, width);
    s.b = sample_at(rng, h, w, height, width);
    swaps.push_back(s);
  }
  return swaps;
}

Image apply_swaps(const Image& image, const std::vector<RegionSwap>& swaps) {
  Image out = image;
  for (const auto& s : swaps) {
    check_inside(s.a, out);
    check_inside(s.b, out);
    if (s.a.h != s.b.h || s.a.w != s.b.w) throw ShapeError("swap regions differ in extent");
    const auto a = read_region(out, s.a);
    const auto b = read_region(out, s.b);
    write_region(out, s.a, b);
    write_region(out, s.b, a);
  }
  return out;
}

Image shuffle_corrupt(const Image& image, Rng& rng) {
  return apply_swaps(image, sample_swaps(rng, image.height, image.width));
}

Image corrupt(const Image& image, Task task, std::uint64_t seed) {
  switch (task) {
    case Task::kGamma: return gamma_corrupt(image, make_plan(task, image.height, image.width, seed));
    case Task::kFourier: return fourier_corrupt(image, make_plan(task, image.height, image.width, seed));
    case Task::kShuffle: {
      Rng rng = Rng::derive(seed, "shuffle");
      return shuffle_corrupt(image, rng);
    }
  }
  return image;
}

std::vector<double> recombine(const ComplexGrid& amplitude_source, const ComplexGrid& phase_source) {
  if (amplitude_source.height != phase_source.height || amplitude_source.width != phase_source.width)
    throw ShapeError("recombine: spectra differ in extent");
  return idft2_real(ComplexGrid::from_polar(amplitude_source.height, amplitude_source.width,
                                            amplitude_source.amplitude(), phase_source.phase()));
}

namespace {

Image rescaled(const std::vector<double>& values, std::size_t height, std::size_t width) {
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double span = *hi - *lo;
  Image out(height, width);
  for (std::size_t i = 0; i < values.size(); ++i)
    out.data[i] = span > 0 ? static_cast<float>((values[i] - *lo) / span) : 0.0f;
  return out;
}

std::vector<double> as_doubles(const Image& image) { return {image.data.begin(), image.data.end()}; }

}  // namespace

FourierDemo fourier_demo(const Image& a, const Image* b) {
  if (a.size() == 0) throw ShapeError("fourier_demo: empty image");
  const std::size_t h = a.height, w = a.width;
  const auto fa = dft2(as_doubles(a), h, w);
  FourierDemo demo;
  demo.amplitude_only = rescaled(
      idft2_real(ComplexGrid::from_polar(h, w, fa.amplitude(), std::vector<double>(h * w, 0.0))), h, w);
  demo.phase_only = rescaled(
      idft2_real(ComplexGrid::from_polar(h, w, std::vector<double>(h * w, 1.0), fa.phase())), h, w);
  if (b) {
    if (b->height != h || b->width != w) throw ShapeError("fourier_demo: images differ in extent");
    const auto fb = dft2(as_doubles(*b), h, w);
    demo.amp_a_phase_b = rescaled(recombine(fa, fb), h, w);
    demo.amp_b_phase_a = rescaled(recombine(fb, fa), h, w);
  }
  return demo;
}

}  // namespace transmef
