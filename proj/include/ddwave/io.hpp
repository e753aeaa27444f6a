#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <string_view>

namespace ddwave::io {

/// Shortest decimal text that round-trips to the same double.
std::string format_double(double value);

/// Writes `content` to `path` atomically enough for tests: truncate + write.
void write_text_file(const std::filesystem::path& path, std::string_view content);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace ddwave::io
