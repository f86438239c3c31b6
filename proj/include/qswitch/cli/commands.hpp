#pragma once

// Subcommand dispatch for the qswitch tool.  Each command writes
// <command>.csv, <command>.json and <command>.svg (as selected) plus
// manifest.json into the output directory.

#include <cstddef>
#include <exception>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "qswitch/cli/config.hpp"

namespace qswitch::cli {

struct RunOptions {
    std::filesystem::path out_dir = "out";
    std::vector<std::string> formats{"csv", "json", "svg"};
    std::size_t workers = 1;
    std::ostream* log = nullptr;  // progress messages when set
};

struct RunReport {
    std::vector<std::filesystem::path> files;  // data files, manifest last
};

const std::vector<std::string>& command_names();

/// Column layout of every command's CSV, for --help.
std::string csv_schemas();

RunReport run_command(const std::string& command, const RunConfig& config,
                      const RunOptions& options);

/// 2 configuration / argument errors, 3 numerical failures, 4 I/O.
int exit_code_for(const std::exception& error);

/// {"error": {"exit_code", "type", "message", "line"?, "best_residual"?}}
std::string error_json(const std::exception& error);

inline constexpr const char* kToolVersion = "1.0.0";

}  // namespace qswitch::cli
