#pragma once

#include "subdiff/config.hpp"

#include <string>

namespace subdiff {

/// Exit codes shared by the CLI: 0 success, 1 parse/IO error, 2 hypothesis
/// failure without --force, 3 solver failure.
enum ExitCode : int {
    kOk = 0,
    kParseError = 1,
    kHypothesisFailure = 2,
    kSolverFailure = 3,
};

struct RunOutcome {
    int exit_code = kOk;
    std::string message;
};

/// Runs an experiment config end to end: validation, trajectory family,
/// trajectory.csv / energy.csv / report.txt (+ per-scale files and an
/// optional decay.svg) under out_dir.  Outputs are deterministic for a fixed
/// config and seed.
RunOutcome run_experiment(const std::string& config_path, bool force,
                          const std::string& out_dir);

/// Runs the scalar FODE config; writes fode.csv and fode_report.txt.
RunOutcome run_fode_experiment(const std::string& config_path, const std::string& out_dir);

/// Validation only; exit 0 when every hypothesis check passes, 2 otherwise.
RunOutcome run_validation(const std::string& config_path, const std::string& out_dir);

} // namespace subdiff
