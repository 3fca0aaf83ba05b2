#pragma once

// Objective fusion metrics for two sources A, B and a fused image F. Inputs
// are quantised to 8 bits first; PSNR and STD are on the 0-255 scale. Every
// metric treats A and B symmetrically, and larger is better.

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "transmef/image.hpp"

namespace transmef {

inline constexpr double kTsallisOrder = 1.85;
inline constexpr double kPsnrCap = 100.0;

struct QabfConstants {
  double gamma_g = 0.9994, kappa_g = -15.0, sigma_g = 0.5;
  double gamma_a = 0.9879, kappa_a = -22.0, sigma_a = 0.8;
};

/// 256x256 joint histogram of two 8-bit planes, normalised to probabilities.
std::vector<double> joint_histogram(const std::vector<std::uint8_t>& x, const std::vector<std::uint8_t>& y);
std::vector<std::uint8_t> to_levels(const Image& image);

double mutual_information(const Image& x, const Image& f);
/// Tsallis divergence of the joint distribution from the product of marginals.
double tsallis_information(const Image& x, const Image& f, double q);

double q_mi(const Image& a, const Image& b, const Image& f);
double q_te(const Image& a, const Image& b, const Image& f, double q = kTsallisOrder);
double psnr(const Image& x, const Image& f);
double psnr_metric(const Image& a, const Image& b, const Image& f);
/// Sobel responses on interior pixels only.
double q_abf(const Image& a, const Image& b, const Image& f, const QabfConstants& c = {});
double std_metric(const Image& f);
double ssim_metric(const Image& a, const Image& b, const Image& f);
/// Pearson correlation, 0 when either plane is constant.
double pearson(const Image& x, const Image& y);
double cc(const Image& a, const Image& b, const Image& f);

struct MetricReport {
  std::string pair;
  double q_mi = 0, q_te = 0, psnr = 0, q_abf = 0, std = 0, ssim = 0, cc = 0;

  std::array<double, 7> values() const { return {q_mi, q_te, psnr, q_abf, std, ssim, cc}; }
};

MetricReport evaluate(const Image& a, const Image& b, const Image& f, std::string pair = {});

struct CorpusReport {
  std::vector<MetricReport> rows;  // ordered by pair name
  MetricReport mean;               // pair = "mean"
  std::size_t skipped = 0;         // triples with a missing or unreadable member
};

/// Scans <dir>/<name>_A.<ext>, <name>_B.<ext>, <name>_F.<ext>.
CorpusReport evaluate_corpus(const std::filesystem::path& dir);

/// Header pair,q_mi,q_te,psnr,q_abf,std,ssim,cc then one row per pair and a
/// final mean row (omitted when there are no rows).
std::string metrics_csv(const CorpusReport& report);

}  // namespace transmef
