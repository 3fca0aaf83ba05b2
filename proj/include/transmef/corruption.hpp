#pragma once

// Self-supervised destruction transforms: per-region gamma, per-region
// Fourier (blurred amplitude, shuffled phase) and global region swapping.
// Every call derives its own random streams from an explicit seed, so
// (image, task, seed) fixes the output bit for bit.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "transmef/dft.hpp"
#include "transmef/image.hpp"
#include "transmef/rng.hpp"

namespace transmef {

inline constexpr std::size_t kRegionCount = 10;
inline constexpr std::size_t kMaxRegionExtent = 25;
inline constexpr double kMaxGamma = 3.0;
inline constexpr int kMaxPhaseShuffles = 5;
inline constexpr double kSpectrumBlurSigma = 0.5;

struct SubRegion {
  std::size_t x = 0, y = 0;  // top-left corner
  std::size_t h = 1, w = 1;
  bool operator==(const SubRegion&) const = default;
};

enum class Task { kGamma, kFourier, kShuffle };

std::string_view task_name(Task task);
/// Accepts "gamma", "fourier", "shuffle". Throws UsageError otherwise.
Task parse_task(std::string_view name);

struct CorruptionPlan {
  Task task = Task::kGamma;
  std::vector<SubRegion> regions;
  std::uint64_t rng_seed = 0;
};

/// Ten regions with extents uniform on [1,25] and uniformly placed corners.
/// Throws ShapeError for images smaller than 25x25.
std::vector<SubRegion> sample_subregions(Rng& rng, std::size_t height, std::size_t width);

/// Regions drawn from a stream derived from `seed`; the same seed also drives
/// the per-region parameters.
CorruptionPlan make_plan(Task task, std::size_t height, std::size_t width, std::uint64_t seed);

struct GammaOptions {
  std::optional<double> forced_gamma;  // replaces every draw when set
  std::vector<double>* gammas_out = nullptr;
};

/// Each region gets its own gamma ~ U[0,3]; pixels inside become psi^gamma.
/// Regions are applied in order, so overlapping pixels are transformed
/// repeatedly. Throws DataError when an intensity lies outside [0,1].
Image gamma_corrupt(const Image& image, const CorruptionPlan& plan, const GammaOptions& options = {});

/// Separable Gaussian, radius ceil(3 sigma), normalised, wrap-around edges.
std::vector<double> gaussian_blur(const std::vector<double>& grid, std::size_t height,
                                  std::size_t width, double sigma = kSpectrumBlurSigma);

struct FourierOptions {
  bool blur_amplitude = true;
  bool shuffle_phase = true;
  /// Receives, per region, the composed phase permutation: new[i] = old[perm[i]].
  std::vector<std::vector<std::size_t>>* permutations_out = nullptr;
};

/// Per region: blur the amplitude spectrum, shuffle the phase values 1-5
/// times, invert, keep the real part clamped to [0,1].
Image fourier_corrupt(const Image& image, const CorruptionPlan& plan,
                      const FourierOptions& options = {});

struct RegionSwap {
  SubRegion a;
  SubRegion b;  // same extent as a
};

/// Ten swaps; each draws one extent and two independent positions.
std::vector<RegionSwap> sample_swaps(Rng& rng, std::size_t height, std::size_t width);
/// Swaps in order. Both regions are copied before either is written, so
/// overlapping pairs are well defined.
Image apply_swaps(const Image& image, const std::vector<RegionSwap>& swaps);
Image shuffle_corrupt(const Image& image, Rng& rng);

/// Dispatches on task with streams derived from `seed`.
Image corrupt(const Image& image, Task task, std::uint64_t seed);

/// Amplitude/phase recombinations of whole images.
struct FourierDemo {
  Image amplitude_only;  // |F(a)| with zero phase
  Image phase_only;      // unit amplitude with the phase of a
  std::optional<Image> amp_a_phase_b;
  std::optional<Image> amp_b_phase_a;
};

/// Raw real parts of each reconstruction before display scaling.
std::vector<double> recombine(const ComplexGrid& amplitude_source, const ComplexGrid& phase_source);
/// Outputs are min-max rescaled to [0,1] for viewing. `b`, when given, must
/// match a's extent.
FourierDemo fourier_demo(const Image& a, const Image* b = nullptr);

}  // namespace transmef
