#pragma once

// Multi-task reconstruction training. Each image in a batch is corrupted once
// per enabled task (independent region draws and random streams per task),
// all variants go through the shared network, and the batch loss is the mean
// over images of the summed task losses.

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "transmef/image.hpp"
#include "transmef/loss.hpp"
#include "transmef/model.hpp"

namespace transmef {

struct TrainConfig {
  ModelConfig model;
  std::size_t epochs = 5;
  std::size_t batch_size = 8;
  /// Stops after this many optimizer steps when nonzero; the cosine schedule
  /// then spans max_steps.
  std::size_t max_steps = 0;
  double lr0 = 1e-4;
  double weight_decay = 5e-4;
  LossWeights loss;
  std::uint64_t seed = 0;
  /// Enabled corruption tasks, indexed by Task. With none enabled the network
  /// learns plain reconstruction of the clean image.
  std::array<bool, 3> tasks{true, true, true};
  std::filesystem::path dataset_dir;
  std::filesystem::path output_dir;
  std::size_t checkpoint_every = 0;  // steps; 0 writes only the final checkpoint
  /// Bilinear resize to image_size instead of a centre crop.
  bool resize = false;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

/// 0.5 * lr0 * (1 + cos(pi * step / total)). Throws UsageError outside [0,total].
double cosine_lr(std::size_t step, std::size_t total_steps, double lr0);

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t step = 0;
  std::vector<std::vector<float>> m, v;
};

/// Bias-corrected Adam with decoupled weight decay (p -= lr*wd*p first).
/// Tensors without an accumulated gradient are treated as having zero
/// gradient. Throws NumericError, leaving every parameter untouched, when any
/// gradient is not finite.
void adam_step(const std::vector<Tensor>& params, AdamState& state, double lr, double weight_decay);

std::vector<Tensor> parameter_tensors(const Model& model);

/// Seed from which the corrupted variant of batch element `index` at `step`
/// for `task` is generated.
std::uint64_t corruption_seed(std::uint64_t seed, std::size_t step, std::size_t index, Task task);

/// Builds the network input for one task (the clean image when no task).
Image make_training_input(const Image& clean, const std::array<bool, 3>& tasks, Task task,
                          std::uint64_t seed, std::size_t step, std::size_t index);

/// Forward, backward and one Adam update over `batch`. Returns the mean
/// per-image report. Gradients are accumulated image by image.
LossReport train_step(Model& model, AdamState& state, const std::vector<Image>& batch,
                      const TrainConfig& config, std::size_t step, double lr);

std::string training_log_header();
std::string training_log_row(std::size_t step, double lr, const LossReport& report);

struct TrainResult {
  Model model;
  std::vector<LossReport> history;
  std::string log_csv;
};

using StepCallback = std::function<void(std::size_t step, double lr, const LossReport&)>;

/// Trains on in-memory images already at the model's image size. Writes
/// checkpoint.tmef and train_log.csv into output_dir when it is non-empty.
TrainResult train(const TrainConfig& config, const std::vector<Image>& dataset,
                  const StepCallback& on_step = {});

/// Loads dataset_dir, then trains.
TrainResult run_training(const TrainConfig& config, const StepCallback& on_step = {});

}  // namespace transmef
