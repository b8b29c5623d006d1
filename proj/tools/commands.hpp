#pragma once

#include "config.hpp"

#include <filesystem>
#include <iosfwd>

#include <json.hpp>

namespace hommax::cli {

/// Exit codes: 0 success, 1 solver failure, 2 configuration or precondition error.
enum ExitCode : int { kSuccess = 0, kSolverFailure = 1, kConfigError = 2 };

nlohmann::ordered_json config_json(const RunConfig& cfg);

/// Each command writes its artifacts under cfg.out_dir and returns the JSON it
/// wrote. Library exceptions propagate; run_cli maps them to exit codes.
nlohmann::ordered_json cmd_cell(const RunConfig& cfg);
nlohmann::ordered_json cmd_maxwell(const RunConfig& cfg);
/// Writes converge.csv and converge.json; the JSON carries "partial" when the
/// study stopped early.
nlohmann::ordered_json cmd_converge(const RunConfig& cfg);

/// Full command line: `<cmd> --config PATH [--out DIR] [--workers N] [--tol X]`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace hommax::cli
