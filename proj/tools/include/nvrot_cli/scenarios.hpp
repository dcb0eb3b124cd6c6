#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nvrot_cli/config.hpp"

namespace nvrot::cli {

inline constexpr const char* kOutputRootEnv = "NVROT_OUTPUT_ROOT";
inline constexpr const char* kSidecarName = "metadata.json";

// Relative output directories are taken from $NVROT_OUTPUT_ROOT when set,
// otherwise from the working directory.
std::filesystem::path output_directory(const RunConfig& config);

struct RunSummary {
  std::filesystem::path directory;
  std::vector<std::string> files;  // data files, relative to directory
  nlohmann::json sidecar;
};

// Runs config.scenario and writes its CSV files plus one metadata sidecar.
RunSummary run_scenario(const RunConfig& config);

// Writes the bath archive for config.bath.seed; returns the path written.
std::filesystem::path generate_bath_file(const RunConfig& config,
                                         const std::filesystem::path& target);

// Writes `content` to `path` through a temporary file in the same directory,
// so a failed run never leaves a partial file behind.
void write_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace nvrot::cli
