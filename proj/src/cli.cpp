#include "transmef/cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <ostream>

#include "transmef/config.hpp"
#include "transmef/corruption.hpp"
#include "transmef/error.hpp"
#include "transmef/fileutil.hpp"
#include "transmef/fuse.hpp"
#include "transmef/image_io.hpp"
#include "transmef/metrics.hpp"
#include "transmef/train.hpp"

namespace transmef {
namespace {

namespace fs = std::filesystem;

struct TrainArgs {
  std::string config;
  std::string tasks;
  bool no_transformer = false;
  std::size_t max_steps = 0;
  std::string output_dir;
};

struct FuseArgs {
  std::string under, over, weights, out;
  bool color = false;
};

struct CorruptArgs {
  std::string task, in, out;
  std::uint64_t seed = 0;
};

Raster as_rgb(const Raster& r) {
  if (r.channels == 3) return r;
  Raster rgb{r.width, r.height, 3, std::vector<std::uint8_t>(r.samples.size() * 3)};
  for (std::size_t i = 0; i < r.samples.size(); ++i)
    rgb.samples[3 * i] = rgb.samples[3 * i + 1] = rgb.samples[3 * i + 2] = r.samples[i];
  return rgb;
}

int cmd_train(const TrainArgs& a, std::ostream& out) {
  auto config = load_run_config(a.config);
  if (!a.tasks.empty()) config.tasks = parse_task_list(a.tasks);
  if (a.no_transformer) config.model.use_transformer = false;
  if (a.max_steps) config.max_steps = a.max_steps;
  if (!a.output_dir.empty()) config.output_dir = a.output_dir;
  if (config.output_dir.empty()) throw UsageError("train needs output_dir (config key or --output-dir)");
  const auto result = run_training(config, [&](std::size_t step, double lr, const LossReport& r) {
    out << "step " << step << " lr " << lr << " loss " << r.total << "\n";
  });
  out << "wrote " << (config.output_dir / "checkpoint.tmef").string() << " and "
      << (config.output_dir / "train_log.csv").string() << " (" << result.history.size()
      << " steps)\n";
  return kExitOk;
}

int cmd_fuse(const FuseArgs& a, std::ostream& out) {
  const Model model = load_weights(a.weights);
  if (a.color) {
    const auto under = as_rgb(load_image(a.under)), over = as_rgb(load_image(a.over));
    save_image(fuse_color(model, under, over), a.out);
  } else {
    save_gray(fuse_gray(model, load_gray(a.under), load_gray(a.over)), a.out);
  }
  out << "wrote " << a.out << "\n";
  return kExitOk;
}

int cmd_eval(const std::string& dir, const std::string& csv, std::ostream& out, std::ostream& err) {
  const auto report = evaluate_corpus(dir);
  write_file_atomic(csv, metrics_csv(report));
  if (report.skipped) err << "skipped " << report.skipped << " incomplete or unreadable triple(s)\n";
  if (report.rows.empty()) {
    err << "no complete <name>_A/_B/_F triples in " << dir << "\n";
    return kExitData;
  }
  const auto& m = report.mean;
  out << report.rows.size() << " pair(s); mean q_mi " << m.q_mi << " q_te " << m.q_te << " psnr "
      << m.psnr << " q_abf " << m.q_abf << " std " << m.std << " ssim " << m.ssim << " cc " << m.cc
      << "\n";
  return kExitOk;
}

int cmd_corrupt(const CorruptArgs& a, std::ostream& out) {
  const Task task = parse_task(a.task);
  save_gray(corrupt(load_gray(a.in), task, a.seed), a.out);
  out << "wrote " << a.out << "\n";
  return kExitOk;
}

int cmd_fourier_demo(const std::vector<std::string>& inputs, const std::string& dir, std::ostream& out) {
  if (inputs.empty() || inputs.size() > 2) throw UsageError("fourier-demo takes one or two --in images");
  const Image a = load_gray(inputs[0]);
  std::optional<Image> b;
  if (inputs.size() == 2) b = load_gray(inputs[1]);
  const auto demo = fourier_demo(a, b ? &*b : nullptr);
  fs::create_directories(dir);
  const fs::path d(dir);
  save_gray(demo.amplitude_only, d / "amplitude_only.png");
  save_gray(demo.phase_only, d / "phase_only.png");
  if (demo.amp_a_phase_b) {
    save_gray(*demo.amp_a_phase_b, d / "amp_a_phase_b.png");
    save_gray(*demo.amp_b_phase_a, d / "amp_b_phase_a.png");
  }
  out << "wrote reconstructions to " << dir << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-exposure image fusion: training, fusion, evaluation and corruption previews"};
  app.require_subcommand(1);

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "train the reconstruction network");
  train->add_option("--config", train_args.config, "key=value run configuration")->required();
  train->add_option("--tasks", train_args.tasks, "comma list of gamma,fourier,shuffle or none");
  train->add_flag("--no-transformer", train_args.no_transformer, "CNN-only encoder");
  train->add_option("--max-steps", train_args.max_steps, "stop after this many optimizer steps");
  train->add_option("--output-dir", train_args.output_dir, "checkpoint and log directory");

  FuseArgs fuse_args;
  auto* fuse = app.add_subcommand("fuse", "fuse an under/over-exposed pair");
  fuse->add_option("--under", fuse_args.under)->required();
  fuse->add_option("--over", fuse_args.over)->required();
  fuse->add_option("--weights", fuse_args.weights)->required();
  fuse->add_option("--out", fuse_args.out)->required();
  fuse->add_flag("--color", fuse_args.color, "fuse RGB through YCbCr");

  std::string eval_dir, eval_out = "metrics.csv";
  auto* eval = app.add_subcommand("eval", "metrics over <name>_A/_B/_F triples");
  eval->add_option("--dir", eval_dir)->required();
  eval->add_option("--out", eval_out);

  CorruptArgs corrupt_args;
  auto* corrupt_cmd = app.add_subcommand("corrupt", "apply one corruption task to an image");
  corrupt_cmd->add_option("--task", corrupt_args.task)->required()->check(CLI::IsMember({"gamma", "fourier", "shuffle"}));
  corrupt_cmd->add_option("--in", corrupt_args.in)->required();
  corrupt_cmd->add_option("--seed", corrupt_args.seed);
  corrupt_cmd->add_option("--out", corrupt_args.out)->required();

  std::vector<std::string> demo_inputs;
  std::string demo_dir;
  auto* demo = app.add_subcommand("fourier-demo", "amplitude/phase reconstructions");
  demo->add_option("--in", demo_inputs, "one image, or two for the phase exchange")->required();
  demo->add_option("--out-dir", demo_dir)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*train) return cmd_train(train_args, out);
    if (*fuse) return cmd_fuse(fuse_args, out);
    if (*eval) return cmd_eval(eval_dir, eval_out, out, err);
    if (*corrupt_cmd) return cmd_corrupt(corrupt_args, out);
    if (*demo) return cmd_fourier_demo(demo_inputs, demo_dir, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace transmef
