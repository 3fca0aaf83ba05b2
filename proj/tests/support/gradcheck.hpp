#pragma once

// Central finite-difference oracle for gradient checks. Runs in whatever
// scalar type the caller instantiates; the unit suites use double.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "transmef/rng.hpp"
#include "transmef/tensor.hpp"

namespace transmef::testing {

template <class T>
BasicTensor<T> random_tensor(Rng& rng, Shape shape, double lo = -1.0, double hi = 1.0,
                             bool requires_grad = true) {
  std::vector<T> v(numel(shape));
  for (auto& x : v) x = static_cast<T>(rng.uniform(lo, hi));
  return BasicTensor<T>::create(std::move(shape), std::move(v), requires_grad);
}

/// |a - n| / max(|a|, |n|, floor)
inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
};

/// `loss` maps the inputs to a scalar. Every element of every input is
/// perturbed by +/- step; analytic gradients come from one backward().
template <class T>
GradCheckResult gradcheck(const std::function<BasicTensor<T>(const std::vector<BasicTensor<T>>&)>& loss,
                          std::vector<BasicTensor<T>> inputs, double step = 1e-3,
                          double floor = 1e-6) {
  for (auto& in : inputs) in.zero_grad();
  loss(inputs).backward();
  GradCheckResult result;
  for (auto& in : inputs) {
    if (!in.requires_grad()) continue;
    std::vector<T> analytic(in.size(), T(0));
    if (!in.grad().empty()) std::copy(in.grad().begin(), in.grad().end(), analytic.begin());
    auto values = in.mutable_data();
    for (std::size_t i = 0; i < in.size(); ++i) {
      const T saved = values[i];
      double plus, minus;
      {
        NoGradGuard guard;
        values[i] = saved + static_cast<T>(step);
        plus = static_cast<double>(loss(inputs).item());
        values[i] = saved - static_cast<T>(step);
        minus = static_cast<double>(loss(inputs).item());
      }
      values[i] = saved;
      const double numeric = (plus - minus) / (2.0 * step);
      result.max_rel_error =
          std::max(result.max_rel_error, relative_error(static_cast<double>(analytic[i]), numeric, floor));
      ++result.checked;
    }
  }
  return result;
}

/// Projects a tensor output onto fixed random weights so every output
/// element contributes to the scalar being differentiated.
template <class T>
BasicTensor<T> random_projection(const BasicTensor<T>& out, std::uint64_t seed) {
  Rng rng(seed);
  auto w = random_tensor<T>(rng, out.shape(), -1.0, 1.0, false);
  return sum(mul(out, w));
}

}  // namespace transmef::testing
