#pragma once

// Flat key=value run configuration. Blank lines and lines starting with '#'
// are ignored; unknown or repeated keys are rejected; missing keys keep their
// defaults. render() writes every key, so parse(render(c)) == c.

#include <filesystem>
#include <string>
#include <string_view>

#include "transmef/train.hpp"

namespace transmef {

/// Throws UsageError naming the offending line.
TrainConfig parse_run_config(std::string_view text);
std::string render_run_config(const TrainConfig& config);

/// "gamma,fourier,shuffle" style list; "none" disables all tasks.
std::array<bool, 3> parse_task_list(std::string_view text);
std::string render_task_list(const std::array<bool, 3>& tasks);

/// Reads and parses the file, then applies TRANSMEF_SEED when set. Relative
/// dataset/output paths resolve against the file's directory.
TrainConfig load_run_config(const std::filesystem::path& path);

/// Sets both the training and the initialisation seed.
void set_seed(TrainConfig& config, std::uint64_t seed);

}  // namespace transmef
