#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace gpuval {

// Config document + file-writing entry points shared by the CLI and the C
// API. A run is described by one JSON object; missing fields fall back to
// defaults, user files are applied as a merge patch and --set overrides as
// dotted-path assignments. All outputs are plain files under out_dir and
// every writer returns the paths it produced, in writing order.

nlohmann::json default_run_config();

// defaults <- merge(file) <- overrides. config_path may be empty; overrides
// are "dotted.path=value" with the value parsed as JSON first and kept as a
// string when that fails.
nlohmann::json load_run_config(const std::string& config_path,
                               const std::vector<std::string>& overrides);

// One "dotted.path=value" assignment applied in place.
void apply_config_override(nlohmann::json& config, const std::string& assignment);

std::vector<std::string> cmd_build_golden(const nlohmann::json& config,
                                          const std::string& out_dir);
std::vector<std::string> cmd_campaign(const nlohmann::json& config,
                                      const std::string& out_dir);
std::vector<std::string> cmd_noise_study(const nlohmann::json& config,
                                         const std::string& out_dir);
std::vector<std::string> cmd_hwsim(const nlohmann::json& config,
                                   const std::string& out_dir);

// Validates one stored trace against a stored model; returns the verdict as
// a JSON document (no files written).
std::string cmd_validate(const std::string& golden_path, const std::string& trace_path);

// Converts a raw profiler CSV export into the trace format; returns the
// output path.
std::string cmd_ingest(const nlohmann::json& config, const std::string& csv_path,
                       const std::string& out_path);

}  // namespace gpuval
