#pragma once

// Direct row-column 2D DFT for arbitrary extents. Regions handled here are at
// most 25x25, and whole images only appear in the amplitude/phase demo, so a
// radix-2 restriction would buy nothing.

#include <cstddef>
#include <vector>

namespace transmef {

struct ComplexGrid {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> real;
  std::vector<double> imag;

  ComplexGrid() = default;
  ComplexGrid(std::size_t h, std::size_t w) : height(h), width(w), real(h * w), imag(h * w) {}

  std::vector<double> amplitude() const;
  std::vector<double> phase() const;
  /// amplitude * exp(i * phase), element by element.
  static ComplexGrid from_polar(std::size_t h, std::size_t w, const std::vector<double>& amplitude,
                                const std::vector<double>& phase);
};

/// Unnormalised forward transform of a real h x w grid.
ComplexGrid dft2(const std::vector<double>& values, std::size_t height, std::size_t width);
/// Inverse transform scaled by 1/(hw).
ComplexGrid idft2(const ComplexGrid& grid);
/// Real part of idft2.
std::vector<double> idft2_real(const ComplexGrid& grid);

}  // namespace transmef
