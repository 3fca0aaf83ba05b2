#include "transmef/loss.hpp"

#include <cmath>
#include <memory>

#include "transmef/error.hpp"

namespace transmef {
namespace {

template <class T>
void check_same(const BasicTensor<T>& a, const BasicTensor<T>& b, const char* what) {
  if (a.shape() != b.shape())
    throw ShapeError(std::string(what) + ": shapes " + to_string(a.shape()) + " and " +
                     to_string(b.shape()) + " differ");
}

template <class T>
BasicTensor<T> gaussian_window() {
  const std::size_t n = kSsimWindow;
  const double c = double(n / 2);
  std::vector<double> g(n);
  double total = 0;
  for (std::size_t i = 0; i < n; ++i)
    total += g[i] = std::exp(-(double(i) - c) * (double(i) - c) / (2 * kSsimSigma * kSsimSigma));
  std::vector<T> w(n * n);
  for (std::size_t y = 0; y < n; ++y)
    for (std::size_t x = 0; x < n; ++x) w[y * n + x] = static_cast<T>(g[y] * g[x] / (total * total));
  return BasicTensor<T>::create({1, 1, n, n}, std::move(w));
}

}  // namespace

template <class T>
BasicTensor<T> mse_loss(const BasicTensor<T>& out, const BasicTensor<T>& target) {
  check_same(out, target, "mse_loss");
  const auto d = sub(out, target);
  return mean(mul(d, d));
}

template <class T>
BasicTensor<T> ssim(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  check_same(a, b, "ssim");
  if (a.rank() != 3 || a.dim(0) != 1 || a.dim(1) < kSsimWindow || a.dim(2) < kSsimWindow)
    throw ShapeError("ssim needs [1,H,W] images of at least 11x11, got " + to_string(a.shape()));
  static const BasicTensor<T> window = gaussian_window<T>();
  const BasicTensor<T> none;
  auto filter = [&](const BasicTensor<T>& x) { return conv2d(x, window, none, 0); };
  const T c1 = static_cast<T>(kSsimK1 * kSsimK1);
  const T c2 = static_cast<T>(kSsimK2 * kSsimK2);

  const auto mu_a = filter(a), mu_b = filter(b);
  const auto mu_aa = mul(mu_a, mu_a), mu_bb = mul(mu_b, mu_b), mu_ab = mul(mu_a, mu_b);
  const auto var_a = sub(filter(mul(a, a)), mu_aa);
  const auto var_b = sub(filter(mul(b, b)), mu_bb);
  const auto cov = sub(filter(mul(a, b)), mu_ab);

  const auto num = mul(add_scalar(mul_scalar(mu_ab, T(2)), c1), add_scalar(mul_scalar(cov, T(2)), c2));
  const auto den = mul(add_scalar(add(mu_aa, mu_bb), c1), add_scalar(add(var_a, var_b), c2));
  return mean(div(num, den));
}

template <class T>
BasicTensor<T> ssim_loss(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  return add_scalar(mul_scalar(ssim(a, b), T(-1)), T(1));
}

template <class T>
BasicTensor<T> tv_loss(const BasicTensor<T>& out, const BasicTensor<T>& target) {
  check_same(out, target, "tv_loss");
  if (out.rank() != 3 || out.dim(1) < 2 || out.dim(2) < 2)
    throw ShapeError("tv_loss needs [C,H,W] with H, W >= 2, got " + to_string(out.shape()));
  const std::size_t h = out.dim(1), w = out.dim(2);
  const T eps = static_cast<T>(kTvEpsilon);
  const T base = std::sqrt(eps);
  auto smooth_abs_sum = [&](const BasicTensor<T>& d) {
    return sum(add_scalar(sqrt(add_scalar(mul(d, d), eps)), -base));
  };
  const auto r = sub(out, target);
  const auto dx = sub(slice(r, 2, 1, w - 1), slice(r, 2, 0, w - 1));
  const auto dy = sub(slice(r, 1, 1, h - 1), slice(r, 1, 0, h - 1));
  return mul_scalar(add(smooth_abs_sum(dx), smooth_abs_sum(dy)), T(1) / static_cast<T>(h * w));
}

template <class T>
TaskLoss<T> task_loss(const BasicTensor<T>& out, const BasicTensor<T>& target, const LossWeights& w) {
  TaskLoss<T> l;
  l.mse = mse_loss(out, target);
  l.ssim_term = ssim_loss(out, target);
  l.tv = tv_loss(out, target);
  l.total = add(add(l.mse, mul_scalar(l.ssim_term, static_cast<T>(w.lambda1))),
                mul_scalar(l.tv, static_cast<T>(w.lambda2)));
  return l;
}

template <class T>
BasicTensor<T> total_loss(const std::vector<BasicTensor<T>>& task_totals) {
  if (task_totals.empty()) throw ShapeError("total_loss of no tasks");
  auto total = task_totals.front();
  for (std::size_t i = 1; i < task_totals.size(); ++i) total = add(total, task_totals[i]);
  return total;
}

template <class T>
TaskReport to_report(const TaskLoss<T>& loss) {
  return {double(loss.mse.item()), double(loss.ssim_term.item()), double(loss.tv.item()),
          double(loss.total.item())};
}

bool LossReport::operator==(const LossReport& o) const {
  for (std::size_t i = 0; i < 3; ++i)
    if (tasks[i].mse != o.tasks[i].mse || tasks[i].ssim_term != o.tasks[i].ssim_term ||
        tasks[i].tv != o.tasks[i].tv || tasks[i].total != o.tasks[i].total)
      return false;
  return total == o.total;
}

#define TRANSMEF_INSTANTIATE_LOSS(T)                                                          \
  template BasicTensor<T> mse_loss(const BasicTensor<T>&, const BasicTensor<T>&);             \
  template BasicTensor<T> ssim(const BasicTensor<T>&, const BasicTensor<T>&);                 \
  template BasicTensor<T> ssim_loss(const BasicTensor<T>&, const BasicTensor<T>&);            \
  template BasicTensor<T> tv_loss(const BasicTensor<T>&, const BasicTensor<T>&);              \
  template TaskLoss<T> task_loss(const BasicTensor<T>&, const BasicTensor<T>&, const LossWeights&); \
  template BasicTensor<T> total_loss(const std::vector<BasicTensor<T>>&);                     \
  template TaskReport to_report(const TaskLoss<T>&);

TRANSMEF_INSTANTIATE_LOSS(float)
TRANSMEF_INSTANTIATE_LOSS(double)

}  // namespace transmef
