#pragma once

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

namespace transmef {

/// Whole-file read. Throws DataError when the file cannot be opened.
std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

/// Writes to "<path>.tmp" and renames it over `path`, so readers never see a
/// partial file. Throws DataError on I/O failure.
void write_file_atomic(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);
void write_file_atomic(const std::filesystem::path& path, std::string_view text);

}  // namespace transmef
