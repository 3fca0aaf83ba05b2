#include "transmef/config.hpp"

#include <charconv>
#include <cstdlib>
#include <functional>
#include <map>
#include <set>

#include "transmef/error.hpp"
#include "transmef/fileutil.hpp"

namespace transmef {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <class T>
T parse_number(std::string_view key, std::string_view value) {
  T out{};
  const auto res = std::from_chars(value.data(), value.data() + value.size(), out);
  if (res.ec != std::errc() || res.ptr != value.data() + value.size())
    throw UsageError("config key '" + std::string(key) + "': invalid number '" + std::string(value) + "'");
  return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw UsageError("config key '" + std::string(key) + "': expected true or false");
}

std::string number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

struct Field {
  std::function<void(TrainConfig&, std::string_view key, std::string_view value)> set;
  std::function<std::string(const TrainConfig&)> get;
};

template <class M>
Field size_field(M member) {
  return {[member](TrainConfig& c, std::string_view k, std::string_view v) {
            std::invoke(member, c) = parse_number<std::size_t>(k, v);
          },
          [member](const TrainConfig& c) { return std::to_string(std::invoke(member, const_cast<TrainConfig&>(c))); }};
}

template <class M>
Field double_field(M member) {
  return {[member](TrainConfig& c, std::string_view k, std::string_view v) {
            std::invoke(member, c) = parse_number<double>(k, v);
          },
          [member](const TrainConfig& c) { return number(std::invoke(member, const_cast<TrainConfig&>(c))); }};
}

// Ordered by key; render() follows this order.
const std::map<std::string, Field, std::less<>>& fields() {
  static const std::map<std::string, Field, std::less<>> table = {
      {"image_size", size_field([](TrainConfig& c) -> auto& { return c.model.image_size; })},
      {"patch_size", size_field([](TrainConfig& c) -> auto& { return c.model.patch_size; })},
      {"embed_dim", size_field([](TrainConfig& c) -> auto& { return c.model.embed_dim; })},
      {"n_layers", size_field([](TrainConfig& c) -> auto& { return c.model.n_layers; })},
      {"n_heads", size_field([](TrainConfig& c) -> auto& { return c.model.n_heads; })},
      {"cnn_channels", size_field([](TrainConfig& c) -> auto& { return c.model.cnn_channels; })},
      {"enhance_channels", size_field([](TrainConfig& c) -> auto& { return c.model.enhance_channels; })},
      {"epochs", size_field([](TrainConfig& c) -> auto& { return c.epochs; })},
      {"batch_size", size_field([](TrainConfig& c) -> auto& { return c.batch_size; })},
      {"max_steps", size_field([](TrainConfig& c) -> auto& { return c.max_steps; })},
      {"checkpoint_every", size_field([](TrainConfig& c) -> auto& { return c.checkpoint_every; })},
      {"lr0", double_field([](TrainConfig& c) -> auto& { return c.lr0; })},
      {"weight_decay", double_field([](TrainConfig& c) -> auto& { return c.weight_decay; })},
      {"lambda1", double_field([](TrainConfig& c) -> auto& { return c.loss.lambda1; })},
      {"lambda2", double_field([](TrainConfig& c) -> auto& { return c.loss.lambda2; })},
      {"seed",
       {[](TrainConfig& c, std::string_view k, std::string_view v) {
          set_seed(c, parse_number<std::uint64_t>(k, v));
        },
        [](const TrainConfig& c) { return std::to_string(c.seed); }}},
      {"use_transformer",
       {[](TrainConfig& c, std::string_view k, std::string_view v) {
          c.model.use_transformer = parse_bool(k, v);
        },
        [](const TrainConfig& c) { return std::string(c.model.use_transformer ? "true" : "false"); }}},
      {"resize",
       {[](TrainConfig& c, std::string_view k, std::string_view v) { c.resize = parse_bool(k, v); },
        [](const TrainConfig& c) { return std::string(c.resize ? "true" : "false"); }}},
      {"tasks",
       {[](TrainConfig& c, std::string_view, std::string_view v) { c.tasks = parse_task_list(v); },
        [](const TrainConfig& c) { return render_task_list(c.tasks); }}},
      {"dataset_dir",
       {[](TrainConfig& c, std::string_view, std::string_view v) { c.dataset_dir = std::string(v); },
        [](const TrainConfig& c) { return c.dataset_dir.string(); }}},
      {"output_dir",
       {[](TrainConfig& c, std::string_view, std::string_view v) { c.output_dir = std::string(v); },
        [](const TrainConfig& c) { return c.output_dir.string(); }}},
  };
  return table;
}

}  // namespace

void set_seed(TrainConfig& config, std::uint64_t seed) {
  config.seed = seed;
  config.model.seed = seed;
}

std::array<bool, 3> parse_task_list(std::string_view text) {
  std::array<bool, 3> tasks{false, false, false};
  text = trim(text);
  if (text == "none") return tasks;
  if (text.empty()) throw UsageError("empty task list");
  while (!text.empty()) {
    const auto comma = text.find(',');
    const auto item = trim(text.substr(0, comma));
    tasks[static_cast<std::size_t>(parse_task(item))] = true;
    text = comma == std::string_view::npos ? std::string_view{} : text.substr(comma + 1);
  }
  return tasks;
}

std::string render_task_list(const std::array<bool, 3>& tasks) {
  std::string out;
  for (std::size_t i = 0; i < 3; ++i) {
    if (!tasks[i]) continue;
    if (!out.empty()) out += ',';
    out += task_name(static_cast<Task>(i));
  }
  return out.empty() ? "none" : out;
}

TrainConfig parse_run_config(std::string_view text) {
  TrainConfig config;
  std::set<std::string, std::less<>> seen;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    auto line = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw UsageError("config line " + std::to_string(line_no) + ": expected key=value");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    const auto it = fields().find(key);
    if (it == fields().end())
      throw UsageError("config line " + std::to_string(line_no) + ": unknown key '" + std::string(key) + "'");
    if (!seen.emplace(key).second)
      throw UsageError("config line " + std::to_string(line_no) + ": repeated key '" + std::string(key) + "'");
    it->second.set(config, key, value);
  }
  return config;
}

std::string render_run_config(const TrainConfig& config) {
  std::string out;
  for (const auto& [key, field] : fields()) out += key + "=" + field.get(config) + "\n";
  return out;
}

TrainConfig load_run_config(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  auto config = parse_run_config(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
  if (const char* env = std::getenv("TRANSMEF_SEED"); env && *env)
    set_seed(config, parse_number<std::uint64_t>("TRANSMEF_SEED", env));
  const auto base = path.parent_path();
  if (!config.dataset_dir.empty() && config.dataset_dir.is_relative())
    config.dataset_dir = base / config.dataset_dir;
  if (!config.output_dir.empty() && config.output_dir.is_relative())
    config.output_dir = base / config.output_dir;
  return config;
}

}  // namespace transmef
