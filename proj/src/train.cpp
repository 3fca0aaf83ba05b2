#include "transmef/train.hpp"

#include <charconv>
#include <cmath>
#include <numbers>

#include "transmef/error.hpp"
#include "transmef/fileutil.hpp"
#include "transmef/image_io.hpp"
#include "transmef/kernels.hpp"

namespace transmef {

void TrainConfig::validate() const {
  model.validate();
  if (epochs == 0 && max_steps == 0) throw UsageError("epochs must be positive");
  if (batch_size == 0) throw UsageError("batch_size must be positive");
  if (!(lr0 > 0) || !std::isfinite(lr0)) throw UsageError("lr0 must be positive");
  if (!(weight_decay >= 0) || !std::isfinite(weight_decay))
    throw UsageError("weight_decay must be nonnegative");
  if (!(loss.lambda1 >= 0) || !(loss.lambda2 >= 0) || !std::isfinite(loss.lambda1) ||
      !std::isfinite(loss.lambda2))
    throw UsageError("loss weights must be finite and nonnegative");
  if (!tasks[0] && !tasks[1] && !tasks[2]) return;
  if (model.image_size < kMaxRegionExtent)
    throw UsageError("corruption tasks need image_size >= 25");
}

double cosine_lr(std::size_t step, std::size_t total_steps, double lr0) {
  if (step > total_steps) throw UsageError("cosine_lr: step beyond schedule");
  if (total_steps == 0) return lr0;
  if (step == total_steps) return 0.0;
  return 0.5 * lr0 * (1.0 + std::cos(std::numbers::pi * double(step) / double(total_steps)));
}

void adam_step(const std::vector<Tensor>& params, AdamState& state, double lr, double weight_decay) {
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.emplace_back(p.size(), 0.0f);
      state.v.emplace_back(p.size(), 0.0f);
    }
  }
  if (state.m.size() != params.size()) throw ShapeError("optimizer state does not match parameters");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (state.m[i].size() != params[i].size()) throw ShapeError("optimizer moment shape mismatch");
    for (float g : params[i].grad())
      if (!std::isfinite(g)) throw NumericError("non-finite gradient; optimizer step aborted");
  }
  ++state.step;
  const double t = double(state.step);
  kernels::AdamCoeffs c{};
  c.beta1 = static_cast<float>(state.beta1);
  c.beta2 = static_cast<float>(state.beta2);
  c.one_minus_beta1 = static_cast<float>(1.0 - state.beta1);
  c.one_minus_beta2 = static_cast<float>(1.0 - state.beta2);
  c.bias_correction1 = static_cast<float>(1.0 - std::pow(state.beta1, t));
  c.bias_correction2 = static_cast<float>(1.0 - std::pow(state.beta2, t));
  c.lr = static_cast<float>(lr);
  c.eps = static_cast<float>(state.eps);
  c.decay = static_cast<float>(lr * weight_decay);
  const auto& k = kernels::active();
  std::vector<float> zeros;
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor p = params[i];
    auto grad = p.grad();
    const float* g = grad.data();
    if (grad.empty()) {
      zeros.assign(p.size(), 0.0f);
      g = zeros.data();
    }
    k.adam(p.size(), p.mutable_data().data(), g, state.m[i].data(), state.v[i].data(), c);
  }
}

std::vector<Tensor> parameter_tensors(const Model& model) {
  std::vector<Tensor> out;
  for (const auto& p : model.parameters()) out.push_back(p.tensor);
  return out;
}

std::uint64_t corruption_seed(std::uint64_t seed, std::size_t step, std::size_t index, Task task) {
  return Rng::derive(seed, "corrupt", step, index, static_cast<int>(task))();
}

Image make_training_input(const Image& clean, const std::array<bool, 3>& tasks, Task task,
                          std::uint64_t seed, std::size_t step, std::size_t index) {
  if (!tasks[static_cast<std::size_t>(task)]) return clean;
  return corrupt(clean, task, corruption_seed(seed, step, index, task));
}

namespace {

constexpr std::array<Task, 3> kTasks{Task::kGamma, Task::kFourier, Task::kShuffle};

void add_scaled(TaskReport& into, const TaskReport& r, double s) {
  into.mse += s * r.mse;
  into.ssim_term += s * r.ssim_term;
  into.tv += s * r.tv;
  into.total += s * r.total;
}

}  // namespace

LossReport train_step(Model& model, AdamState& state, const std::vector<Image>& batch,
                      const TrainConfig& config, std::size_t step, double lr) {
  if (batch.empty()) throw UsageError("train_step: empty batch");
  model.zero_grad();
  const bool any_task = config.tasks[0] || config.tasks[1] || config.tasks[2];
  const double inv_batch = 1.0 / double(batch.size());
  LossReport report;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const Tensor target = to_tensor(batch[b]);
    auto run = [&](const Image& input) {
      const auto loss = task_loss(model.reconstruct(to_tensor(input)), target, config.loss);
      mul_scalar(loss.total, static_cast<float>(inv_batch)).backward();
      return to_report(loss);
    };
    if (!any_task) {
      report.total += inv_batch * run(batch[b]).total;
      continue;
    }
    for (Task task : kTasks) {
      if (!config.tasks[static_cast<std::size_t>(task)]) continue;
      const auto r = run(make_training_input(batch[b], config.tasks, task, config.seed, step, b));
      add_scaled(report[task], r, inv_batch);
      report.total += inv_batch * r.total;
    }
  }
  if (!std::isfinite(report.total)) throw NumericError("non-finite training loss");
  adam_step(parameter_tensors(model), state, lr, config.weight_decay);
  return report;
}

std::string training_log_header() {
  return "step,lr,mse_g,ssim_g,tv_g,mse_f,ssim_f,tv_f,mse_s,ssim_s,tv_s,total\n";
}

namespace {

void append_number(std::string& out, double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

}  // namespace

std::string training_log_row(std::size_t step, double lr, const LossReport& report) {
  std::string row = std::to_string(step);
  auto field = [&](double v) {
    row += ',';
    append_number(row, v);
  };
  field(lr);
  for (const auto& t : report.tasks) {
    field(t.mse);
    field(t.ssim_term);
    field(t.tv);
  }
  field(report.total);
  row += '\n';
  return row;
}

TrainResult train(const TrainConfig& config, const std::vector<Image>& dataset,
                  const StepCallback& on_step) {
  config.validate();
  if (dataset.empty()) throw DataError("training dataset is empty");
  const std::size_t n = config.model.image_size;
  for (const auto& img : dataset)
    if (img.height != n || img.width != n)
      throw ShapeError("training image is " + std::to_string(img.height) + "x" +
                       std::to_string(img.width) + ", model expects " + std::to_string(n));
  if (!config.output_dir.empty()) std::filesystem::create_directories(config.output_dir);

  const std::size_t per_epoch = (dataset.size() + config.batch_size - 1) / config.batch_size;
  const std::size_t total = config.max_steps ? config.max_steps : config.epochs * per_epoch;

  TrainResult result{Model(config.model), {}, training_log_header()};
  AdamState state;
  const auto checkpoint = [&] {
    if (config.output_dir.empty()) return;
    save_weights(result.model, config.output_dir / "checkpoint.tmef");
    write_file_atomic(config.output_dir / "train_log.csv", result.log_csv);
  };

  std::size_t step = 0;
  for (std::size_t epoch = 0; step < total; ++epoch) {
    const auto order = epoch_order(dataset.size(), config.seed, epoch);
    for (std::size_t start = 0; start < order.size() && step < total; start += config.batch_size) {
      std::vector<Image> batch;
      for (std::size_t i = start; i < std::min(order.size(), start + config.batch_size); ++i)
        batch.push_back(dataset[order[i]]);
      const double lr = cosine_lr(step, total, config.lr0);
      const auto report = train_step(result.model, state, batch, config, step, lr);
      ++step;
      result.history.push_back(report);
      result.log_csv += training_log_row(step, lr, report);
      if (on_step) on_step(step, lr, report);
      if (config.checkpoint_every && step % config.checkpoint_every == 0 && step < total) checkpoint();
    }
  }
  checkpoint();
  return result;
}

TrainResult run_training(const TrainConfig& config, const StepCallback& on_step) {
  config.validate();
  const auto data = ingest_dataset(config.dataset_dir, config.model.image_size, config.resize);
  return train(config, data.images, on_step);
}

}  // namespace transmef
