#pragma once

// Brute-force metric oracles on 8-bit levels, written independently of the
// library: sparse maps instead of 256-bin tables, explicit Sobel kernels.

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <vector>

#include "transmef/image.hpp"
#include "transmef/rng.hpp"

namespace transmef::testing {

inline Image random_image(std::uint64_t seed, std::size_t h, std::size_t w) {
  Rng rng(seed);
  Image img(h, w);
  for (auto& v : img.data) v = static_cast<float>(rng.uniform01());
  return img;
}

inline std::vector<int> levels(const Image& img) {
  std::vector<int> out;
  for (float v : img.data) out.push_back(static_cast<int>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f)));
  return out;
}

// Sparse counting over the pairs that actually occur.
inline double mi_oracle(const Image& x, const Image& f) {
  const auto lx = levels(x), lf = levels(f);
  const double n = double(lx.size());
  std::map<std::pair<int, int>, double> joint;
  std::map<int, double> cx, cf;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    joint[{lx[i], lf[i]}] += 1;
    cx[lx[i]] += 1;
    cf[lf[i]] += 1;
  }
  double mi = 0;
  for (const auto& [key, c] : joint) mi += c / n * std::log(c * n / (cx[key.first] * cf[key.second]));
  return mi;
}

inline double entropy_oracle(const Image& x) {
  std::map<int, double> counts;
  for (int l : levels(x)) counts[l] += 1;
  double h = 0;
  for (const auto& [l, c] : counts) h -= c / double(x.size()) * std::log(c / double(x.size()));
  return h;
}

inline double psnr_oracle(const Image& x, const Image& f) {
  const auto lx = levels(x), lf = levels(f);
  double mse = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) mse += double((lx[i] - lf[i]) * (lx[i] - lf[i]));
  mse /= double(lx.size());
  return mse == 0 ? 100.0 : std::min(100.0, 20 * std::log10(255.0) - 10 * std::log10(mse));
}

inline double pearson_oracle(const Image& x, const Image& y) {
  const auto lx = levels(x), ly = levels(y);
  const double n = double(lx.size());
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sx += lx[i];
    sy += ly[i];
    sxx += double(lx[i]) * lx[i];
    syy += double(ly[i]) * ly[i];
    sxy += double(lx[i]) * ly[i];
  }
  const double cov = sxy - sx * sy / n, vx = sxx - sx * sx / n, vy = syy - sy * sy / n;
  return cov / std::sqrt(vx * vy);
}

// Xydeas-Petrovic with 3x3 Sobel kernels applied by explicit correlation.
inline double qabf_oracle(const Image& a, const Image& b, const Image& f) {
  const int kx[3][3] = {{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}};
  const int ky[3][3] = {{-1, -2, -1}, {0, 0, 0}, {1, 2, 1}};
  const int h = int(a.height), w = int(a.width);
  auto grad = [&](const std::vector<int>& l, int y, int x, double& mag, double& ang) {
    double gx = 0, gy = 0;
    for (int i = -1; i <= 1; ++i)
      for (int j = -1; j <= 1; ++j) {
        gx += kx[i + 1][j + 1] * l[(y + i) * w + (x + j)];
        gy += ky[i + 1][j + 1] * l[(y + i) * w + (x + j)];
      }
    mag = std::hypot(gx, gy);
    ang = gx == 0 ? std::numbers::pi / 2 : std::atan(gy / gx);
  };
  auto q = [](double ms, double as, double mf, double af) {
    const double g = ms == mf ? 1.0 : std::min(ms, mf) / std::max(ms, mf);
    const double alpha = 1 - std::abs(as - af) * 2 / std::numbers::pi;
    return 0.9994 / (1 + std::exp(-15 * (g - 0.5))) * 0.9879 / (1 + std::exp(-22 * (alpha - 0.8)));
  };
  const auto la = levels(a), lb = levels(b), lf = levels(f);
  double num = 0, den = 0;
  for (int y = 1; y < h - 1; ++y)
    for (int x = 1; x < w - 1; ++x) {
      double ma, aa, mb, ab, mf, af;
      grad(la, y, x, ma, aa);
      grad(lb, y, x, mb, ab);
      grad(lf, y, x, mf, af);
      num += q(ma, aa, mf, af) * ma + q(mb, ab, mf, af) * mb;
      den += ma + mb;
    }
  return den == 0 ? 0 : num / den;
}

inline double perfect_qabf() {
  return 0.9994 / (1 + std::exp(-15 * 0.5)) * 0.9879 / (1 + std::exp(-22 * 0.2));
}

}  // namespace transmef::testing
