// Runs the nine acceptance criteria and prints one PASS/FAIL line for each.
// Exit status is nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include "support/gradcheck.hpp"
#include "support/metric_oracles.hpp"
#include "support/scenes.hpp"
#include "transmef/cli.hpp"
#include "transmef/config.hpp"
#include "transmef/corruption.hpp"
#include "transmef/fuse.hpp"
#include "transmef/image_io.hpp"
#include "transmef/layers.hpp"
#include "transmef/loss.hpp"
#include "transmef/metrics.hpp"
#include "transmef/train.hpp"

using namespace transmef;
using testing::gradcheck;
using testing::random_projection;
using testing::random_tensor;
using D = BasicTensor<double>;
using Inputs = std::vector<D>;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Collects the sub-checks of one criterion.
struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

int failures = 0;

void report(int id, const std::string& title, Verdict& v, double secs) {
  std::printf("%s  criterion %d (%s):%s (%.1f s)\n", v.pass ? "PASS" : "FAIL", id, title.c_str(),
              v.detail.str().c_str(), secs);
  std::fflush(stdout);
  if (!v.pass) ++failures;
}

// ---------------------------------------------------------------------------
// 1. gradients

double op_suite(Rng& rng) {
  double worst = 0;
  auto check = [&](auto fn, std::vector<Shape> shapes, double lo = -1, double hi = 1, double step = 1e-3) {
    Inputs in;
    for (auto& s : shapes) in.push_back(random_tensor<double>(rng, s, lo, hi));
    worst = std::max(worst, gradcheck<double>(fn, in, step).max_rel_error);
  };
  auto proj = [](const D& t) { return random_projection(t, 77); };
  using F = std::function<D(const Inputs&)>;
  check(F([&](const Inputs& t) { return proj(add(t[0], t[1])); }), {{5, 7}, {5, 7}});
  check(F([&](const Inputs& t) { return proj(sub(t[0], t[1])); }), {{9}, {1}});
  check(F([&](const Inputs& t) { return proj(mul(t[0], t[1])); }), {{4, 6}, {4, 6}});
  check(F([&](const Inputs& t) { return proj(div(t[0], add_scalar(t[1], 3.0))); }), {{3, 5}, {3, 5}});
  check(F([&](const Inputs& t) { return proj(mul_scalar(add_scalar(t[0], 0.5), -2.0)); }), {{6}});
  check(F([&](const Inputs& t) { return proj(pow_scalar(t[0], 1.7)); }), {{8}}, 0.2, 1.0);
  check(F([&](const Inputs& t) { return proj(relu(t[0])); }), {{6, 6}});
  check(F([&](const Inputs& t) { return proj(gelu(t[0])); }), {{6, 6}}, -3, 3);
  check(F([&](const Inputs& t) { return proj(exp(t[0])); }), {{10}});
  check(F([&](const Inputs& t) { return proj(sigmoid(t[0])); }), {{10}}, -4, 4);
  check(F([&](const Inputs& t) { return proj(sqrt(t[0])); }), {{10}}, 0.3, 2);
  check(F([&](const Inputs& t) { return mean(mul(t[0], t[0])); }), {{7, 3}});
  check(F([&](const Inputs& t) { return sum(mul(t[0], t[0])); }), {{4, 4}});
  check(F([&](const Inputs& t) { return proj(matmul(t[0], t[1])); }), {{5, 9}, {9, 4}});
  check(F([&](const Inputs& t) { return proj(transpose(t[0])); }), {{3, 8}});
  check(F([&](const Inputs& t) { return proj(add_row_bias(t[0], t[1])); }), {{6, 4}, {4}});
  check(F([&](const Inputs& t) { return proj(conv2d(t[0], t[1], t[2], 1)); }), {{2, 9, 11}, {3, 2, 3, 3}, {3}});
  check(F([&](const Inputs& t) { return proj(conv2d(t[0], t[1], D(), 0)); }), {{1, 12, 12}, {1, 1, 5, 5}});
  check(F([&](const Inputs& t) { return proj(softmax(t[0], 1)); }), {{4, 7}}, -3, 3);
  check(F([&](const Inputs& t) { return proj(layer_norm(t[0], t[1], t[2], nn::kLayerNormEps)); }),
        {{5, 8}, {8}, {8}});
  check(F([&](const Inputs& t) { return proj(concat<double>({slice(t[0], 1, 2, 3), t[1]}, 1)); }), {{4, 6}, {4, 2}});
  check(F([&](const Inputs& t) { return proj(reshape(t[0], {4, 3})); }), {{3, 4}});
  auto idx = std::make_shared<const std::vector<std::size_t>>(std::vector<std::size_t>{4, 1, 1, 0, 3, 2});
  check(F([&](const Inputs& t) { return proj(gather(t[0], idx, {3, 2})); }), {{5}});
  return worst;
}

double layer_suite(Rng& rng) {
  double worst = 0;
  auto run = [&](std::function<D(const Inputs&)> fn, std::vector<Shape> shapes, double lo = -1, double hi = 1) {
    Inputs in;
    for (auto& s : shapes) in.push_back(random_tensor<double>(rng, s, lo, hi));
    worst = std::max(worst, gradcheck<double>(fn, in).max_rel_error);
  };
  auto proj = [](const D& t) { return random_projection(t, 78); };
  run([&](const Inputs& t) { return proj(nn::conv_block<double>(t[0], {t[1], t[2], t[3], t[4]})); },
      {{2, 8, 8}, {3, 2, 3, 3}, {3}, {2, 3, 3, 3}, {2}});
  run([&](const Inputs& t) { return proj(nn::patch_embed<double>(nn::patchify(t[0], 4), {4, {t[1], t[2]}})); },
      {{1, 8, 12}, {16, 6}, {6}});
  run([&](const Inputs& t) { return proj(nn::tokens_to_feature_map(t[0], 4, 8, 12)); }, {{6, 3}});
  const std::size_t m = 5, d = 8, mlp = 12;
  run(
      [&](const Inputs& t) {
        nn::TransformerLayerParams<double> p;
        p.heads = 2;
        p.ln1_scale = t[1], p.ln1_shift = t[2];
        p.q = {t[3], t[4]}, p.k = {t[5], t[6]}, p.v = {t[7], t[8]}, p.o = {t[9], t[10]};
        p.ln2_scale = t[11], p.ln2_shift = t[12];
        p.mlp_in = {t[13], t[14]}, p.mlp_out = {t[15], t[16]};
        return proj(nn::transformer_layer(t[0], p));
      },
      {{m, d}, {d}, {d}, {d, d}, {d}, {d, d}, {d}, {d, d}, {d}, {d, d}, {d}, {d}, {d}, {d, mlp}, {mlp}, {mlp, d}, {d}});
  return worst;
}

double loss_suite(Rng& rng) {
  double worst = 0;
  const Inputs in{random_tensor<double>(rng, {1, 13, 16}, 0.05, 0.95),
                  random_tensor<double>(rng, {1, 13, 16}, 0.05, 0.95)};
  using F = std::function<D(const Inputs&)>;
  worst = std::max(worst, gradcheck<double>(F([](const Inputs& t) { return mse_loss(t[0], t[1]); }), in).max_rel_error);
  worst = std::max(worst, gradcheck<double>(F([](const Inputs& t) { return ssim_loss(t[0], t[1]); }), in, 1e-5).max_rel_error);
  worst = std::max(worst, gradcheck<double>(F([](const Inputs& t) { return tv_loss(t[0], t[1]); }), in, 1e-6).max_rel_error);
  worst = std::max(worst, gradcheck<double>(F([](const Inputs& t) { return task_loss(t[0], t[1], {}).total; }), in, 1e-6)
                              .max_rel_error);
  return worst;
}

// Float analytic gradients of the desk model against a 64-bit copy.
double model_check(Rng& rng) {
  ModelConfig config;
  config.seed = 5;
  Model m(config);
  BasicModel<double> oracle(config);
  oracle.copy_values_from(m);
  const auto x = random_tensor<float>(rng, {1, config.image_size, config.image_size}, 0, 1, false);
  const auto xd = D::create(x.shape(), std::vector<double>(x.data().begin(), x.data().end()));
  random_projection(m.reconstruct(x), 79).backward();

  const std::size_t total = m.parameter_count();
  std::vector<std::size_t> picks;
  while (picks.size() < 20) {
    const auto k = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(total) - 1));
    if (std::find(picks.begin(), picks.end(), k) == picks.end()) picks.push_back(k);
  }
  NoGradGuard guard;
  double worst = 0;
  for (std::size_t k : picks) {
    std::size_t p = 0;
    while (k >= oracle.parameters()[p].tensor.size()) k -= oracle.parameters()[p++].tensor.size();
    auto values = D(oracle.parameters()[p].tensor).mutable_data();
    // With ~10^6 ReLUs in the desk model, a 1e-5 step pushes some
    // pre-activations across zero; 1e-7 keeps the difference on one linear
    // piece and is still far above 64-bit roundoff.
    const double saved = values[k], h = 1e-7;
    values[k] = saved + h;
    const double plus = random_projection(oracle.reconstruct(xd), 79).item();
    values[k] = saved - h;
    const double minus = random_projection(oracle.reconstruct(xd), 79).item();
    values[k] = saved;
    const double analytic = m.parameters()[p].tensor.grad()[k];
    worst = std::max(worst, testing::relative_error(analytic, (plus - minus) / (2 * h), 1e-4));
  }
  return worst;
}

void criterion_gradients() {
  const auto t0 = Clock::now();
  Verdict v;
  Rng rng(101);
  const double ops = op_suite(rng), layers = layer_suite(rng), losses = loss_suite(rng);
  const double model = model_check(rng);
  const double secs = seconds_since(t0);
  v.detail << " ops " << ops << ", layers " << layers << ", losses " << losses << " (limit 1e-3); model "
           << model << " (limit 1e-2)";
  v.require(ops < 1e-3 && layers < 1e-3 && losses < 1e-3, "op/layer/loss relative error");
  v.require(model < 1e-2, "end-to-end relative error");
  v.require(secs < 120, "runtime under 2 min");
  report(1, "gradient suite", v, secs);
}

// ---------------------------------------------------------------------------
// 2. transforms

std::vector<bool> coverage(std::size_t h, std::size_t w, const std::vector<SubRegion>& regions) {
  std::vector<bool> in(h * w, false);
  for (const auto& r : regions)
    for (std::size_t y = r.y; y < r.y + r.h; ++y)
      for (std::size_t x = r.x; x < r.x + r.w; ++x) in[y * w + x] = true;
  return in;
}

void criterion_transforms() {
  const auto t0 = Clock::now();
  Verdict v;
  const auto img = testing::synthetic_scene(7, 64);

  bool identity = true;
  for (std::uint64_t s = 0; s < 5; ++s)
    identity = identity && gamma_corrupt(img, make_plan(Task::kGamma, 64, 64, s), {1.0}) == img;
  v.require(identity, "gamma=1 identity");

  bool outside = true;
  for (std::uint64_t s = 0; s < 10; ++s)
    for (Task task : {Task::kGamma, Task::kFourier, Task::kShuffle}) {
      std::vector<SubRegion> touched;
      if (task == Task::kShuffle) {
        Rng rng = Rng::derive(s, "shuffle");
        for (const auto& sw : sample_swaps(rng, 64, 64)) {
          touched.push_back(sw.a);
          touched.push_back(sw.b);
        }
      } else {
        touched = make_plan(task, 64, 64, s).regions;
      }
      const auto in = coverage(64, 64, touched);
      const auto out = corrupt(img, task, s);
      for (std::size_t i = 0; i < img.size(); ++i) outside = outside && (in[i] || out.data[i] == img.data[i]);
    }
  v.require(outside, "pixels outside the regions unchanged");

  const std::vector<RegionSwap> swaps{{{0, 0, 10, 12}, {30, 40, 10, 12}}, {{50, 2, 7, 7}, {3, 50, 7, 7}}};
  const auto swapped = apply_swaps(img, swaps);
  auto before = img.data, after = swapped.data;
  std::sort(before.begin(), before.end());
  std::sort(after.begin(), after.end());
  v.require(before == after && swapped != img, "shuffle multiset");

  Rng rng(3);
  std::vector<double> grid(25 * 19);
  for (auto& g : grid) g = rng.uniform01();
  const auto spectrum = dft2(grid, 25, 19);
  const auto back = idft2_real(spectrum);
  double round_trip = 0, energy = 0, spectral = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    round_trip = std::max(round_trip, std::abs(back[i] - grid[i]));
    energy += grid[i] * grid[i];
    spectral += spectrum.real[i] * spectrum.real[i] + spectrum.imag[i] * spectrum.imag[i];
  }
  const double parseval = std::abs(spectral / double(grid.size()) - energy) / energy;
  v.detail << " dft round trip " << round_trip << ", parseval " << parseval;
  v.require(round_trip < 1e-6, "dft round trip");
  v.require(parseval < 1e-5, "parseval");

  const std::vector<double> constant(9 * 11, 0.375);
  const auto blurred_constant = gaussian_blur(constant, 9, 11, 1.2);
  bool flat = true;
  for (double c : blurred_constant) flat = flat && std::abs(c - 0.375) < 1e-12;
  std::vector<double> impulse(9 * 11, 0.0);
  impulse[4 * 11 + 5] = 1.0;
  const auto spread = gaussian_blur(impulse, 9, 11, 1.0);
  double mass = 0;
  for (double s : spread) mass += s;
  const bool symmetric = std::abs(spread[4 * 11 + 4] - spread[4 * 11 + 6]) < 1e-15 &&
                         std::abs(spread[3 * 11 + 5] - spread[5 * 11 + 5]) < 1e-15;
  const bool peaked = std::max_element(spread.begin(), spread.end()) - spread.begin() == 4 * 11 + 5;
  v.require(flat, "blur of a constant");
  v.require(std::abs(mass - 1) < 1e-12 && symmetric && peaked, "blur of an impulse");

  const double secs = seconds_since(t0);
  v.require(secs < 30, "runtime under 30 s");
  report(2, "transform suite", v, secs);
}

// ---------------------------------------------------------------------------
// 3. losses

void criterion_losses() {
  const auto t0 = Clock::now();
  Verdict v;
  Rng rng(31);
  double self = 0;
  for (int i = 0; i < 5; ++i) {
    const auto x = random_tensor<double>(rng, {1, 16, 16}, 0, 1, false);
    self = std::max(self, std::abs(ssim(x, x).item() - 1.0));
  }
  const auto xf = random_tensor<float>(rng, {1, 64, 64}, 0, 1, false);
  self = std::max(self, std::abs(double(ssim(xf, xf).item()) - 1.0));
  v.detail << " |ssim(x,x)-1| " << self;
  v.require(self <= 1e-9, "ssim(x,x)=1");

  const double c1 = (kSsimK1 * 1.0) * (kSsimK1 * 1.0);
  const double closed = ssim(D::zeros({1, 16, 16}), D::full({1, 16, 16}, 1.0)).item();
  v.detail << ", black/white ssim " << closed << " vs " << c1 / (1 + c1);
  v.require(std::abs(closed - c1 / (1 + c1)) < 1e-9, "constant closed form");

  const auto target = random_tensor<double>(rng, {1, 12, 14}, 0, 1, false);
  auto shifted = target.data();
  std::vector<double> moved(shifted.begin(), shifted.end());
  for (auto& m : moved) m -= 0.2;
  v.require(tv_loss(D::create({1, 12, 14}, moved), target).item() == 0.0, "tv of a constant residual");

  const auto out = random_tensor<double>(rng, {1, 12, 14}, 0, 1, false);
  const auto base = task_loss(out, target, {0.0, 0.0});
  const double mse = base.mse.item(), s = base.ssim_term.item(), tv = base.tv.item();
  bool linear = base.total.item() == mse;
  for (auto [l1, l2] : {std::pair{20.0, 20.0}, {1.0, 0.0}, {0.0, 1.0}, {3.25, 0.5}, {100.0, 7.0}})
    linear = linear && task_loss(out, target, {l1, l2}).total.item() == (mse + s * l1) + tv * l2;
  v.require(linear, "task_loss exact in lambda1, lambda2");
  report(3, "loss suite", v, seconds_since(t0));
}

// ---------------------------------------------------------------------------
// 4. fusion identities

void criterion_fusion() {
  const auto t0 = Clock::now();
  Verdict v;
  ModelConfig config;
  config.seed = 9;
  const Model model(config);
  const auto img = testing::synthetic_scene(11, 64);
  const auto self = fuse_gray(model, img, img);
  v.require(self == from_tensor(model.decode(model.encode(to_tensor(img)))), "fuse(I,I) == decode(encode(I))");
  const auto [under, over] = testing::synthetic_exposures(img);
  v.require(fuse_gray(model, under, over) == fuse_gray(model, over, under), "fuse symmetric");
  const double example = fuse_chroma(100, 200, 128), fallback = fuse_chroma(128, 128, 128);
  v.detail << " chroma(100,200) " << example << ", chroma(128,128) " << fallback;
  v.require(example == 172.0, "chroma example 172");
  v.require(fallback == 128.0, "chroma fallback 128");
  report(4, "fusion identities", v, seconds_since(t0));
}

// ---------------------------------------------------------------------------
// 5-7. desk training

// Desk model per the criterion (64px, P=8, D=64, L=2). Widths and optimiser
// settings that the criterion leaves open are fixed here.
TrainConfig desk_config() {
  TrainConfig c;
  c.model.image_size = 64;
  c.model.patch_size = 8;
  c.model.embed_dim = 64;
  c.model.n_layers = 2;
  c.model.n_heads = 4;
  c.model.cnn_channels = 16;
  c.model.enhance_channels = 32;
  set_seed(c, 1);
  c.batch_size = 1;
  c.max_steps = 500;
  c.lr0 = 5e-4;
  return c;
}

std::vector<Image> desk_images() {
  std::vector<Image> out;
  for (std::uint64_t i = 0; i < 4; ++i) out.push_back(testing::synthetic_scene(100 + i, 64, 0.0));
  return out;
}

// Loss of `model` on a fixed set of corrupted inputs, one per image and task,
// averaged over images like a training step.
double probe_loss(const Model& model, const std::vector<Image>& images, const TrainConfig& config) {
  NoGradGuard guard;
  double total = 0;
  for (std::size_t i = 0; i < images.size(); ++i)
    for (Task task : {Task::kGamma, Task::kFourier, Task::kShuffle}) {
      const auto input = make_training_input(images[i], {true, true, true}, task, 9999, 0, i);
      total += to_report(task_loss(model.reconstruct(to_tensor(input)), to_tensor(images[i]), config.loss)).total;
    }
  return total / double(images.size());
}

double mean_psnr(const Model& model, const std::vector<Image>& images) {
  double p = 0;
  for (const auto& img : images) p += psnr(img, reconstruct_image(model, img));
  return p / double(images.size());
}

struct Run {
  TrainResult result;
  double secs = 0;
};

Run train_timed(const TrainConfig& config, const std::vector<Image>& data) {
  const auto t0 = Clock::now();
  Run r{train(config, data), 0};
  r.secs = seconds_since(t0);
  return r;
}

void criterion_training(const Run& run, const Run& repeat, const std::vector<Image>& data) {
  Verdict v;
  const auto config = desk_config();
  const double before = probe_loss(Model(config.model), data, config);
  const double after = probe_loss(run.result.model, data, config);
  const double first = run.result.history.front().total, last = run.result.history.back().total;
  const double p = mean_psnr(run.result.model, data);
  const auto hash = std::hash<std::string>{}(run.result.log_csv);
  v.detail << " probe loss " << before << " -> " << after << " (ratio " << after / before << ", limit 0.2); log total "
           << first << " -> " << last << "; reconstruction psnr " << p << " dB (limit 25)";
  v.require(after < 0.2 * before, "final total below 20% of initial");
  v.require(p > 25, "reconstruction psnr above 25 dB");
  v.require(run.secs < 600, "runtime under 10 min");
  v.require(hash == std::hash<std::string>{}(repeat.result.log_csv), "repeat run log hash");
  report(5, "desk training run", v, run.secs);
}

void criterion_ablation(const Model& all_tasks, const Model& plain) {
  const auto t0 = Clock::now();
  Verdict v;
  double mi_all = 0, mi_plain = 0, ssim_all = 0, ssim_plain = 0;
  for (std::uint64_t i = 0; i < 10; ++i) {
    const auto [under, over] = testing::synthetic_exposures(testing::synthetic_scene(300 + i, 64, 0.0));
    const auto fa = fuse_gray(all_tasks, under, over), fp = fuse_gray(plain, under, over);
    mi_all += q_mi(under, over, fa) / 10;
    mi_plain += q_mi(under, over, fp) / 10;
    ssim_all += ssim_metric(under, over, fa) / 10;
    ssim_plain += ssim_metric(under, over, fp) / 10;
  }
  v.detail << " q_mi " << mi_all << " vs " << mi_plain << ", ssim " << ssim_all << " vs " << ssim_plain
           << " (all tasks vs reconstruction only)";
  v.require(mi_all >= mi_plain, "q_mi");
  v.require(ssim_all >= ssim_plain, "ssim");
  report(6, "ablation direction", v, seconds_since(t0));
}

void criterion_transblock(const Model& with, const Model& without) {
  const auto t0 = Clock::now();
  Verdict v;
  const auto held_out = testing::synthetic_scene(400, 64, 0.0);
  auto mse = [&](const Model& m) {
    const auto r = reconstruct_image(m, held_out);
    double s = 0;
    for (std::size_t i = 0; i < r.size(); ++i) s += double(r.data[i] - held_out.data[i]) * double(r.data[i] - held_out.data[i]);
    return s / double(r.size());
  };
  const double a = mse(with), b = mse(without);
  v.detail << " held-out mse " << a << " with TransBlock vs " << b << " CNN only";
  v.require(a <= b, "TransBlock mse <= CNN-only mse");
  report(7, "TransBlock reconstruction", v, seconds_since(t0));
}

// ---------------------------------------------------------------------------
// 8. metric oracles

void criterion_metrics() {
  const auto t0 = Clock::now();
  Verdict v;
  double worst = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto a = testing::random_image(3 * s, 8, 8), b = testing::random_image(3 * s + 1, 8, 8);
    const auto f = testing::random_image(3 * s + 2, 8, 8);
    worst = std::max(worst, std::abs(q_mi(a, b, f) - (testing::mi_oracle(a, f) + testing::mi_oracle(b, f))));
    worst = std::max(worst, std::abs(q_abf(a, b, f) - testing::qabf_oracle(a, b, f)));
    worst = std::max(worst, std::abs(psnr_metric(a, b, f) -
                                         (testing::psnr_oracle(f, a) + testing::psnr_oracle(f, b)) / 2));
    worst = std::max(worst, std::abs(cc(a, b, f) -
                                         (testing::pearson_oracle(f, a) + testing::pearson_oracle(f, b)) / 2));
  }
  v.detail << " worst oracle difference " << worst;
  v.require(worst < 1e-9, "oracle agreement within 1e-9");
  const auto x = testing::synthetic_scene(12, 32);
  v.require(ssim_metric(x, x, x) == 1.0, "self ssim == 1");
  v.require(cc(x, x, x) == 1.0, "self cc == 1");
  v.require(psnr_metric(x, x, x) == 100.0, "self psnr capped at 100");
  report(8, "metric oracles", v, seconds_since(t0));
}

// ---------------------------------------------------------------------------
// 9. fourier demo

void criterion_fourier_demo() {
  const auto t0 = Clock::now();
  Verdict v;
  const auto dir = fs::temp_directory_path() / "transmef_acceptance_fourier";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const auto a = testing::synthetic_scene(21, 64), b = testing::synthetic_scene(22, 64);
  save_gray(a, dir / "a.png");
  save_gray(b, dir / "b.png");
  const std::string in_a = (dir / "a.png").string(), in_b = (dir / "b.png").string(), out = (dir / "out").string();
  const char* argv[] = {"transmef", "fourier-demo", "--in", in_a.c_str(), "--in", in_b.c_str(), "--out-dir", out.c_str()};
  std::ostringstream sink;
  const int code = run_cli(8, argv, sink, sink);
  v.require(code == kExitOk, "fourier-demo exit status");
  if (code == kExitOk) {
    const auto qa = load_gray(dir / "a.png"), qb = load_gray(dir / "b.png");
    const auto ab = load_gray(dir / "out" / "amp_a_phase_b.png"), ba = load_gray(dir / "out" / "amp_b_phase_a.png");
    const double ab_phase = pearson(ab, qb), ab_amp = pearson(ab, qa);
    const double ba_phase = pearson(ba, qa), ba_amp = pearson(ba, qb);
    v.detail << " amp(a)+phase(b): corr with b " << ab_phase << ", with a " << ab_amp << "; amp(b)+phase(a): corr with a "
             << ba_phase << ", with b " << ba_amp;
    v.require(ab_phase > ab_amp && ba_phase > ba_amp, "phase donor dominates");
  }
  fs::remove_all(dir);
  report(9, "fourier demo", v, seconds_since(t0));
}

}  // namespace

int main() {
  criterion_gradients();
  criterion_transforms();
  criterion_losses();
  criterion_fusion();

  const auto data = desk_images();
  const auto config = desk_config();
  const auto run = train_timed(config, data);
  const auto repeat = train_timed(config, data);
  criterion_training(run, repeat, data);

  auto plain_config = config;
  plain_config.tasks = {false, false, false};
  criterion_ablation(run.result.model, train_timed(plain_config, data).result.model);

  auto cnn_config = config;
  cnn_config.model.use_transformer = false;
  criterion_transblock(run.result.model, train_timed(cnn_config, data).result.model);

  criterion_metrics();
  criterion_fourier_demo();

  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
