#pragma once

#include <filesystem>
#include <vector>

#include "config.hpp"

namespace cogmtl::cli {

// Each command returns the paths it wrote, in write order.
std::vector<std::filesystem::path> cmd_simulate(const RunConfig& cfg);
std::vector<std::filesystem::path> cmd_harmonize(const RunConfig& cfg);
std::vector<std::filesystem::path> cmd_fit(const RunConfig& cfg);
std::vector<std::filesystem::path> cmd_predict(const RunConfig& cfg);
std::vector<std::filesystem::path> cmd_evaluate(const RunConfig& cfg);
std::vector<std::filesystem::path> cmd_report(const RunConfig& cfg);

}  // namespace cogmtl::cli
