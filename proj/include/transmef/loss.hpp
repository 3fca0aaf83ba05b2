#pragma once

// Reconstruction losses. Each task loss is
//   mse + lambda1 * (1 - ssim) + lambda2 * tv
// and the overall loss sums the enabled task losses without weights.

#include <array>
#include <cstddef>

#include "transmef/corruption.hpp"
#include "transmef/tensor.hpp"

namespace transmef {

inline constexpr std::size_t kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimK1 = 0.01;
inline constexpr double kSsimK2 = 0.03;
inline constexpr double kTvEpsilon = 1e-12;

struct LossWeights {
  double lambda1 = 20.0;
  double lambda2 = 20.0;

  bool operator==(const LossWeights&) const = default;
};

/// Mean of squared differences.
template <class T>
BasicTensor<T> mse_loss(const BasicTensor<T>& out, const BasicTensor<T>& target);

/// Mean local SSIM over valid 11x11 Gaussian windows, dynamic range 1.
/// Inputs are [1,H,W] with H, W >= 11.
template <class T>
BasicTensor<T> ssim(const BasicTensor<T>& a, const BasicTensor<T>& b);

template <class T>
BasicTensor<T> ssim_loss(const BasicTensor<T>& a, const BasicTensor<T>& b);

/// Total variation of the residual R = out - target. Each absolute difference
/// is smoothed as sqrt(d^2 + eps) - sqrt(eps) so that it is differentiable at
/// zero and still exactly zero for a constant residual. Divided by H*W.
template <class T>
BasicTensor<T> tv_loss(const BasicTensor<T>& out, const BasicTensor<T>& target);

template <class T>
struct TaskLoss {
  BasicTensor<T> mse;
  BasicTensor<T> ssim_term;  // 1 - ssim
  BasicTensor<T> tv;
  BasicTensor<T> total;
};

template <class T>
TaskLoss<T> task_loss(const BasicTensor<T>& out, const BasicTensor<T>& target, const LossWeights& w);

/// Unweighted sum; every element must be defined.
template <class T>
BasicTensor<T> total_loss(const std::vector<BasicTensor<T>>& task_totals);

struct TaskReport {
  double mse = 0, ssim_term = 0, tv = 0, total = 0;
};

/// Indexed by Task. Disabled tasks stay zero.
struct LossReport {
  std::array<TaskReport, 3> tasks{};
  double total = 0;

  TaskReport& operator[](Task t) { return tasks[static_cast<std::size_t>(t)]; }
  const TaskReport& operator[](Task t) const { return tasks[static_cast<std::size_t>(t)]; }
  bool operator==(const LossReport& o) const;
};

template <class T>
TaskReport to_report(const TaskLoss<T>& loss);

}  // namespace transmef
