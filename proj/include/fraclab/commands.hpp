#pragma once

#include <filesystem>
#include <iosfwd>
#include <json.hpp>
#include <string>
#include <vector>

#include "fraclab/config.hpp"
#include "fraclab/io.hpp"

namespace fraclab {

enum ExitCode : int { kExitPass = 0, kExitFail = 1, kExitInput = 2, kExitCapacity = 3 };

struct CommandResult {
  std::string command;
  std::string status = "pass";  // pass | fail | report-only
  std::vector<OutputFile> files;
  nlohmann::json summary;
};

CommandResult cmd_spectrum(const ExperimentConfig& cfg);
CommandResult cmd_verify_identities(const ExperimentConfig& cfg);
CommandResult cmd_extend_check(const ExperimentConfig& cfg);
CommandResult cmd_harnack_scan(const ExperimentConfig& cfg);
CommandResult cmd_geometry_audit(const ExperimentConfig& cfg);
CommandResult cmd_frac_apply(const ExperimentConfig& cfg);

const std::vector<std::string>& command_names();
CommandResult run_command(const std::string& name, const ExperimentConfig& cfg);

// FRACLAB_OUTPUT_ROOT when set, else the configured directory.
std::filesystem::path output_root(const ExperimentConfig& cfg);

// Writes the result files under root/<command>/ and merges manifest.json and timings.json.
void write_result(const std::filesystem::path& root, const ExperimentConfig& cfg, const CommandResult& res,
                  double seconds, const std::string& error = {});

// Load, run, write; maps errors to exit codes. Nothing is written on input or capacity errors.
int execute(const std::string& command, const std::filesystem::path& config_path, std::ostream& out,
            std::ostream& err);

}  // namespace fraclab
