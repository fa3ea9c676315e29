#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "divkit/dataio.hpp"

namespace divkit::cli {

/// Commands that read a config and write hash-addressed output directories.
inline const std::vector<std::string> kConfigCommands = {"curve", "bias", "project", "guide", "concentration"};

/// Full config for `command` with every default filled in.
Json default_config(const std::string& command);

/// Overlays `overrides` on `base` key by key (objects merge recursively) and
/// rejects keys unknown to the command's defaults.
Json merge_config(const std::string& command, const Json& base, const Json& overrides);

/// Output root: explicit value, else $DIVKIT_CACHE_DIR, else ./divkit-out.
std::filesystem::path output_root(const std::string& explicit_root);

/// Runs a command on an effective config, writing side files into out_dir
/// (which must exist). Returns the ResultRecord; the caller persists it.
ResultRecord run_command(const std::string& command, const Json& config, const std::filesystem::path& out_dir);

/// Process entry point; returns the exit code.
int main(int argc, char** argv);

}  // namespace divkit::cli
