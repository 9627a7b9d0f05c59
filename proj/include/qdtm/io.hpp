#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace qdtm {

// Throws ParameterError if the file cannot be opened.
std::string read_text(const std::filesystem::path& path);

// Writes to a sibling temporary file and renames it over `path`, so a
// failed write never leaves a partial file behind.
void write_text_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace qdtm
