#pragma once

#include <filesystem>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace n2g::cli {

/// Runs one command line (without the program name). Returns 0 on success,
/// 1 on a usage error and 2 on a runtime failure.
int run(std::span<const std::string> args, std::ostream& out, std::ostream& err);

/// Flag arguments (--key=value) holding the documented settings for a named
/// dataset; empty for names without a preset.
std::vector<std::string> preset_args(std::string_view dataset);

/// Reads a flat key=value file into --key=value arguments. '#' starts a comment line.
std::vector<std::string> read_config(const std::filesystem::path& path);

} // namespace n2g::cli
