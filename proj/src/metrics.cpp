#include "transmef/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <numbers>

#include "transmef/error.hpp"
#include "transmef/image_io.hpp"
#include "transmef/loss.hpp"

namespace transmef {
namespace {

void check_same(const Image& x, const Image& y) {
  if (x.height != y.height || x.width != y.width || x.size() == 0)
    throw ShapeError("metric inputs differ in extent or are empty");
}

std::vector<double> scaled_levels(const Image& image) {
  const auto levels = to_levels(image);
  return {levels.begin(), levels.end()};
}

struct Marginals {
  std::vector<double> joint, px, pf;
};

Marginals marginals(const Image& x, const Image& f) {
  check_same(x, f);
  Marginals m;
  m.joint = joint_histogram(to_levels(x), to_levels(f));
  m.px.assign(256, 0.0);
  m.pf.assign(256, 0.0);
  for (std::size_t i = 0; i < 256; ++i)
    for (std::size_t j = 0; j < 256; ++j) {
      m.px[i] += m.joint[i * 256 + j];
      m.pf[j] += m.joint[i * 256 + j];
    }
  return m;
}

struct Gradients {
  std::vector<double> magnitude, angle;
};

// Sobel over pixels with a full 3x3 neighbourhood.
Gradients sobel(const Image& image) {
  const auto v = scaled_levels(image);
  const std::size_t h = image.height, w = image.width;
  Gradients g;
  for (std::size_t y = 1; y + 1 < h; ++y)
    for (std::size_t x = 1; x + 1 < w; ++x) {
      auto p = [&](std::size_t yy, std::size_t xx) { return v[yy * w + xx]; };
      const double gx = (p(y - 1, x + 1) + 2 * p(y, x + 1) + p(y + 1, x + 1)) -
                        (p(y - 1, x - 1) + 2 * p(y, x - 1) + p(y + 1, x - 1));
      const double gy = (p(y + 1, x - 1) + 2 * p(y + 1, x) + p(y + 1, x + 1)) -
                        (p(y - 1, x - 1) + 2 * p(y - 1, x) + p(y - 1, x + 1));
      g.magnitude.push_back(std::sqrt(gx * gx + gy * gy));
      g.angle.push_back(gx == 0 ? std::numbers::pi / 2 : std::atan(gy / gx));
    }
  return g;
}

std::vector<double> preservation(const Gradients& s, const Gradients& f, const QabfConstants& c) {
  std::vector<double> q(s.magnitude.size());
  for (std::size_t i = 0; i < q.size(); ++i) {
    const double gs = s.magnitude[i], gf = f.magnitude[i];
    const double g = gs == gf ? 1.0 : (gs > gf ? gf / gs : gs / gf);
    const double a = 1.0 - std::abs(s.angle[i] - f.angle[i]) / (std::numbers::pi / 2);
    const double qg = c.gamma_g / (1.0 + std::exp(c.kappa_g * (g - c.sigma_g)));
    const double qa = c.gamma_a / (1.0 + std::exp(c.kappa_a * (a - c.sigma_a)));
    q[i] = qg * qa;
  }
  return q;
}

}  // namespace

std::vector<std::uint8_t> to_levels(const Image& image) { return to_raster(image).samples; }

std::vector<double> joint_histogram(const std::vector<std::uint8_t>& x, const std::vector<std::uint8_t>& y) {
  if (x.size() != y.size() || x.empty()) throw ShapeError("histogram inputs differ in size");
  std::vector<double> counts(256 * 256, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) counts[std::size_t(x[i]) * 256 + y[i]] += 1.0;
  for (auto& c : counts) c /= double(x.size());
  return counts;
}

double mutual_information(const Image& x, const Image& f) {
  const auto m = marginals(x, f);
  double mi = 0;
  for (std::size_t i = 0; i < 256; ++i)
    for (std::size_t j = 0; j < 256; ++j) {
      const double p = m.joint[i * 256 + j];
      if (p > 0) mi += p * std::log(p / (m.px[i] * m.pf[j]));
    }
  return std::max(mi, 0.0);
}

double tsallis_information(const Image& x, const Image& f, double q) {
  if (q == 1.0) return mutual_information(x, f);
  const auto m = marginals(x, f);
  double s = 0;
  for (std::size_t i = 0; i < 256; ++i)
    for (std::size_t j = 0; j < 256; ++j) {
      const double p = m.joint[i * 256 + j];
      if (p > 0) s += std::pow(p, q) / std::pow(m.px[i] * m.pf[j], q - 1.0);
    }
  return std::max((1.0 - s) / (1.0 - q), 0.0);
}

double q_mi(const Image& a, const Image& b, const Image& f) {
  return mutual_information(a, f) + mutual_information(b, f);
}

double q_te(const Image& a, const Image& b, const Image& f, double q) {
  return tsallis_information(a, f, q) + tsallis_information(b, f, q);
}

double psnr(const Image& x, const Image& f) {
  check_same(x, f);
  const auto lx = to_levels(x), lf = to_levels(f);
  double se = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double d = double(lx[i]) - double(lf[i]);
    se += d * d;
  }
  if (se == 0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(255.0 * 255.0 / (se / double(lx.size()))));
}

double psnr_metric(const Image& a, const Image& b, const Image& f) {
  return (psnr(f, a) + psnr(f, b)) / 2;
}

double q_abf(const Image& a, const Image& b, const Image& f, const QabfConstants& c) {
  check_same(a, f);
  check_same(b, f);
  if (f.height < 3 || f.width < 3) throw ShapeError("q_abf needs images of at least 3x3");
  const auto ga = sobel(a), gb = sobel(b), gf = sobel(f);
  const auto qa = preservation(ga, gf, c), qb = preservation(gb, gf, c);
  double num = 0, den = 0;
  for (std::size_t i = 0; i < qa.size(); ++i) {
    num += qa[i] * ga.magnitude[i] + qb[i] * gb.magnitude[i];
    den += ga.magnitude[i] + gb.magnitude[i];
  }
  return den > 0 ? num / den : 0.0;
}

double std_metric(const Image& f) {
  const auto v = scaled_levels(f);
  double mean = 0;
  for (double x : v) mean += x;
  mean /= double(v.size());
  double var = 0;
  for (double x : v) var += (x - mean) * (x - mean);
  return std::sqrt(var / double(v.size()));
}

double ssim_metric(const Image& a, const Image& b, const Image& f) {
  check_same(a, f);
  check_same(b, f);
  auto tensor = [](const Image& img) {
    const auto levels = to_levels(img);
    std::vector<double> v(levels.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = levels[i] / 255.0;
    return BasicTensor<double>::create({1, img.height, img.width}, std::move(v));
  };
  NoGradGuard no_grad;
  const auto ta = tensor(a), tb = tensor(b), tf = tensor(f);
  return (ssim(tf, ta).item() + ssim(tf, tb).item()) / 2;
}

double pearson(const Image& x, const Image& y) {
  check_same(x, y);
  const auto vx = scaled_levels(x), vy = scaled_levels(y);
  const double n = double(vx.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < vx.size(); ++i) {
    mx += vx[i];
    my += vy[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < vx.size(); ++i) {
    sxy += (vx[i] - mx) * (vy[i] - my);
    sxx += (vx[i] - mx) * (vx[i] - mx);
    syy += (vy[i] - my) * (vy[i] - my);
  }
  if (sxx == 0 || syy == 0) return 0.0;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double cc(const Image& a, const Image& b, const Image& f) { return (pearson(f, a) + pearson(f, b)) / 2; }

MetricReport evaluate(const Image& a, const Image& b, const Image& f, std::string pair) {
  MetricReport r;
  r.pair = std::move(pair);
  r.q_mi = q_mi(a, b, f);
  r.q_te = q_te(a, b, f);
  r.psnr = psnr_metric(a, b, f);
  r.q_abf = q_abf(a, b, f);
  r.std = std_metric(f);
  r.ssim = ssim_metric(a, b, f);
  r.cc = cc(a, b, f);
  return r;
}

CorpusReport evaluate_corpus(const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) throw DataError("corpus directory not found: " + dir.string());
  std::map<std::string, std::filesystem::path> sources;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file() || !is_image_path(entry.path())) continue;
    const auto stem = entry.path().stem().string();
    if (stem.size() > 2 && stem.compare(stem.size() - 2, 2, "_A") == 0)
      sources.emplace(stem.substr(0, stem.size() - 2), entry.path());
  }
  CorpusReport report;
  for (const auto& [name, path_a] : sources) {
    auto sibling = [&](const char* tag) {
      auto p = path_a;
      return p.replace_filename(name + tag + path_a.extension().string());
    };
    try {
      const auto a = load_gray(path_a), b = load_gray(sibling("_B")), f = load_gray(sibling("_F"));
      report.rows.push_back(evaluate(a, b, f, name));
    } catch (const Error&) {
      ++report.skipped;
    }
  }
  report.mean.pair = "mean";
  if (!report.rows.empty()) {
    std::array<double, 7> sums{};
    for (const auto& r : report.rows) {
      const auto v = r.values();
      for (std::size_t i = 0; i < 7; ++i) sums[i] += v[i];
    }
    const double n = double(report.rows.size());
    auto& m = report.mean;
    m.q_mi = sums[0] / n;
    m.q_te = sums[1] / n;
    m.psnr = sums[2] / n;
    m.q_abf = sums[3] / n;
    m.std = sums[4] / n;
    m.ssim = sums[5] / n;
    m.cc = sums[6] / n;
  }
  return report;
}

std::string metrics_csv(const CorpusReport& report) {
  std::string out = "pair,q_mi,q_te,psnr,q_abf,std,ssim,cc\n";
  auto row = [&](const MetricReport& r) {
    out += r.pair;
    for (double v : r.values()) {
      char buf[64];
      const auto res = std::to_chars(buf, buf + sizeof buf, v);
      out += ',';
      out.append(buf, res.ptr);
    }
    out += '\n';
  };
  for (const auto& r : report.rows) row(r);
  if (!report.rows.empty()) row(report.mean);
  return out;
}

}  // namespace transmef
