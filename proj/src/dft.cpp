#include "transmef/dft.hpp"

#include <cmath>
#include <numbers>

#include "transmef/error.hpp"

namespace transmef {
namespace {

// In-place 1D transform of n complex values spaced `stride` apart.
void dft1(double* re, double* im, std::size_t n, std::size_t stride, double sign,
          std::vector<double>& scratch_re, std::vector<double>& scratch_im,
          const std::vector<double>& cos_table, const std::vector<double>& sin_table) {
  scratch_re.assign(n, 0.0);
  scratch_im.assign(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    double sr = 0, si = 0;
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t t = (k * j) % n;
      const double c = cos_table[t], s = sign * sin_table[t];
      const double xr = re[j * stride], xi = im[j * stride];
      sr += xr * c - xi * s;
      si += xr * s + xi * c;
    }
    scratch_re[k] = sr;
    scratch_im[k] = si;
  }
  for (std::size_t k = 0; k < n; ++k) {
    re[k * stride] = scratch_re[k];
    im[k * stride] = scratch_im[k];
  }
}

void transform(ComplexGrid& g, double sign) {
  std::vector<double> sr, si;
  auto tables = [](std::size_t n, std::vector<double>& c, std::vector<double>& s) {
    c.resize(n);
    s.resize(n);
    for (std::size_t t = 0; t < n; ++t) {
      const double angle = 2.0 * std::numbers::pi * double(t) / double(n);
      c[t] = std::cos(angle);
      s[t] = std::sin(angle);
    }
  };
  std::vector<double> cw, sw, ch, sh;
  tables(g.width, cw, sw);
  tables(g.height, ch, sh);
  for (std::size_t y = 0; y < g.height; ++y)
    dft1(&g.real[y * g.width], &g.imag[y * g.width], g.width, 1, sign, sr, si, cw, sw);
  for (std::size_t x = 0; x < g.width; ++x)
    dft1(&g.real[x], &g.imag[x], g.height, g.width, sign, sr, si, ch, sh);
}

}  // namespace

std::vector<double> ComplexGrid::amplitude() const {
  std::vector<double> out(real.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::hypot(real[i], imag[i]);
  return out;
}

std::vector<double> ComplexGrid::phase() const {
  std::vector<double> out(real.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::atan2(imag[i], real[i]);
  return out;
}

ComplexGrid ComplexGrid::from_polar(std::size_t h, std::size_t w, const std::vector<double>& amplitude,
                                    const std::vector<double>& phase) {
  if (amplitude.size() != h * w || phase.size() != h * w)
    throw ShapeError("from_polar: grid sizes disagree");
  ComplexGrid g(h, w);
  for (std::size_t i = 0; i < h * w; ++i) {
    g.real[i] = amplitude[i] * std::cos(phase[i]);
    g.imag[i] = amplitude[i] * std::sin(phase[i]);
  }
  return g;
}

ComplexGrid dft2(const std::vector<double>& values, std::size_t height, std::size_t width) {
  if (height == 0 || width == 0 || values.size() != height * width)
    throw ShapeError("dft2: values do not form a " + std::to_string(height) + "x" +
                     std::to_string(width) + " grid");
  ComplexGrid g(height, width);
  g.real = values;
  transform(g, -1.0);
  return g;
}

ComplexGrid idft2(const ComplexGrid& grid) {
  ComplexGrid g = grid;
  transform(g, 1.0);
  const double scale = 1.0 / double(g.height * g.width);
  for (std::size_t i = 0; i < g.real.size(); ++i) {
    g.real[i] *= scale;
    g.imag[i] *= scale;
  }
  return g;
}

std::vector<double> idft2_real(const ComplexGrid& grid) { return idft2(grid).real; }

}  // namespace transmef
