#include <cmath>

#include "doctest.h"
#include "support/gradcheck.hpp"
#include "transmef/error.hpp"
#include "transmef/loss.hpp"

using namespace transmef;
using testing::gradcheck;
using testing::random_tensor;
using D = BasicTensor<double>;
using Inputs = std::vector<D>;

namespace {

constexpr double kC1 = (kSsimK1 * 1.0) * (kSsimK1 * 1.0);
constexpr double kC2 = (kSsimK2 * 1.0) * (kSsimK2 * 1.0);

double at(const D& t, std::size_t w, std::size_t y, std::size_t x) { return t.data()[y * w + x]; }

// Windowed statistics recomputed per output position from scratch.
double ssim_oracle(const D& a, const D& b) {
  const std::size_t h = a.dim(1), w = a.dim(2), k = kSsimWindow, r = k / 2;
  std::vector<double> g(k);
  double norm = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const double d = double(i) - double(r);
    g[i] = std::exp(-d * d / (2 * kSsimSigma * kSsimSigma));
    norm += g[i];
  }
  double total = 0;
  std::size_t count = 0;
  for (std::size_t y = 0; y + k <= h; ++y)
    for (std::size_t x = 0; x + k <= w; ++x) {
      double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
      for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j) {
          const double wt = g[i] * g[j] / (norm * norm);
          const double va = at(a, w, y + i, x + j), vb = at(b, w, y + i, x + j);
          ma += wt * va;
          mb += wt * vb;
          saa += wt * va * va;
          sbb += wt * vb * vb;
          sab += wt * va * vb;
        }
      const double va = saa - ma * ma, vb = sbb - mb * mb, cov = sab - ma * mb;
      total += (2 * ma * mb + kC1) * (2 * cov + kC2) / ((ma * ma + mb * mb + kC1) * (va + vb + kC2));
      ++count;
    }
  return total / double(count);
}

double tv_oracle(const D& out, const D& target) {
  const std::size_t h = out.dim(1), w = out.dim(2);
  auto r = [&](std::size_t y, std::size_t x) { return at(out, w, y, x) - at(target, w, y, x); };
  auto smooth = [](double d) { return std::sqrt(d * d + kTvEpsilon) - std::sqrt(kTvEpsilon); };
  double s = 0;
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      if (x + 1 < w) s += smooth(r(y, x + 1) - r(y, x));
      if (y + 1 < h) s += smooth(r(y + 1, x) - r(y, x));
    }
  return s / double(h * w);
}

}  // namespace

TEST_CASE("mse examples") {
  auto t = D::create({1, 2, 2}, {0.1, 0.2, 0.3, 0.4});
  CHECK(mse_loss(t, t).item() == 0.0);
  auto shifted = D::create({1, 2, 2}, {0.2, 0.3, 0.4, 0.5});
  CHECK(mse_loss(shifted, t).item() == doctest::Approx(0.01).epsilon(1e-12));

  Rng rng(1);
  auto a = random_tensor<double>(rng, {1, 9, 7}), b = random_tensor<double>(rng, {1, 9, 7});
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a.data()[i] - b.data()[i]) * (a.data()[i] - b.data()[i]);
  CHECK(mse_loss(a, b).item() == doctest::Approx(s / 63).epsilon(1e-12));
  CHECK_THROWS_AS(mse_loss(a, random_tensor<double>(rng, {1, 7, 9})), ShapeError);
}

TEST_CASE("ssim of an image with itself is one") {
  Rng rng(2);
  for (int i = 0; i < 3; ++i) {
    auto x = random_tensor<double>(rng, {1, 16, 16}, 0, 1);
    CHECK(std::abs(ssim(x, x).item() - 1.0) < 1e-9);
    CHECK(std::abs(ssim_loss(x, x).item()) < 1e-9);
  }
}

TEST_CASE("ssim is symmetric") {
  Rng rng(3);
  auto a = random_tensor<double>(rng, {1, 14, 13}, 0, 1), b = random_tensor<double>(rng, {1, 14, 13}, 0, 1);
  CHECK(ssim(a, b).item() == ssim(b, a).item());
}

TEST_CASE("ssim of two constant images has a closed form") {
  auto black = D::zeros({1, 12, 12}), white = D::full({1, 12, 12}, 1.0);
  CHECK(ssim(black, white).item() == doctest::Approx(kC1 / (1 + kC1)).epsilon(1e-9));
  const double c1 = 0.3, c2 = 0.7;
  const double expected = (2 * c1 * c2 + kC1) / (c1 * c1 + c2 * c2 + kC1);
  CHECK(ssim(D::full({1, 11, 15}, c1), D::full({1, 11, 15}, c2)).item() ==
        doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("ssim matches a direct windowed oracle") {
  Rng rng(4);
  for (auto [h, w] : {std::pair<std::size_t, std::size_t>{11, 11}, {13, 17}, {16, 16}}) {
    auto a = random_tensor<double>(rng, {1, h, w}, 0, 1), b = random_tensor<double>(rng, {1, h, w}, 0, 1);
    CHECK(std::abs(ssim(a, b).item() - ssim_oracle(a, b)) < 1e-9);
  }
  CHECK_THROWS_AS(ssim(D::zeros({1, 10, 16}), D::zeros({1, 10, 16})), ShapeError);
}

TEST_CASE("tv of a constant residual is zero") {
  Rng rng(5);
  auto target = random_tensor<double>(rng, {1, 8, 9}, 0, 1);
  std::vector<double> shifted(target.data().begin(), target.data().end());
  for (auto& v : shifted) v += 0.125;
  CHECK(tv_loss(D::create({1, 8, 9}, shifted), target).item() == 0.0);
  CHECK(tv_loss(target, target).item() == 0.0);
}

TEST_CASE("tv matches a double-loop oracle") {
  Rng rng(6);
  auto a = random_tensor<double>(rng, {1, 10, 7}, 0, 1), b = random_tensor<double>(rng, {1, 10, 7}, 0, 1);
  CHECK(std::abs(tv_loss(a, b).item() - tv_oracle(a, b)) < 1e-12);
  // One horizontal and two vertical unit steps in a 2x3 residual.
  auto edge = D::create({1, 2, 3}, {0, 1, 1, 0, 0, 0});
  CHECK(tv_loss(edge, D::zeros({1, 2, 3})).item() == doctest::Approx(3.0 * (std::sqrt(1.0 + kTvEpsilon) - std::sqrt(kTvEpsilon)) / 6.0).epsilon(1e-12));
}

TEST_CASE("task_loss composes its terms exactly") {
  Rng rng(7);
  auto out = random_tensor<double>(rng, {1, 12, 12}, 0, 1), target = random_tensor<double>(rng, {1, 12, 12}, 0, 1);
  const double mse = mse_loss(out, target).item();
  const double s = ssim_loss(out, target).item();
  const double tv = tv_loss(out, target).item();
  for (auto [l1, l2] : {std::pair{20.0, 20.0}, {1.0, 0.0}, {0.0, 3.5}, {7.25, 0.5}}) {
    const auto loss = task_loss(out, target, {l1, l2});
    CHECK(loss.mse.item() == mse);
    CHECK(loss.ssim_term.item() == s);
    CHECK(loss.tv.item() == tv);
    CHECK(loss.total.item() == (mse + s * l1) + tv * l2);
  }
  CHECK(task_loss(out, target, {0.0, 0.0}).total.item() == mse);

  const auto report = to_report(task_loss(out, target, {}));
  CHECK(report.mse == mse);
  CHECK(report.total == (mse + s * 20.0) + tv * 20.0);
}

TEST_CASE("total_loss is the plain sum of task totals") {
  auto a = D::scalar(1.5), b = D::scalar(2.25), c = D::scalar(-0.5);
  CHECK(total_loss(std::vector<D>{a, b, c}).item() == 3.25);
  CHECK(total_loss(std::vector<D>{a}).item() == 1.5);
}

TEST_CASE("loss gradients vs finite differences on 12x12") {
  Rng rng(8);
  const Inputs in{random_tensor<double>(rng, {1, 12, 12}, 0.05, 0.95),
                  random_tensor<double>(rng, {1, 12, 12}, 0.05, 0.95)};
  SUBCASE("mse") {
    CHECK(gradcheck<double>([](const Inputs& t) { return mse_loss(t[0], t[1]); }, in).max_rel_error < 1e-3);
  }
  SUBCASE("ssim") {
    CHECK(gradcheck<double>([](const Inputs& t) { return ssim_loss(t[0], t[1]); }, in, 1e-5).max_rel_error < 1e-3);
  }
  SUBCASE("tv") {
    CHECK(gradcheck<double>([](const Inputs& t) { return tv_loss(t[0], t[1]); }, in, 1e-6).max_rel_error < 1e-3);
  }
  SUBCASE("task total") {
    CHECK(gradcheck<double>([](const Inputs& t) { return task_loss(t[0], t[1], {}).total; }, in, 1e-6)
              .max_rel_error < 1e-3);
  }
}

TEST_CASE("loss reports compare by value") {
  LossReport a, b;
  a[Task::kFourier].mse = 0.5;
  CHECK_FALSE(a == b);
  b[Task::kFourier].mse = 0.5;
  CHECK(a == b);
}
